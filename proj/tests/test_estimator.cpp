#include "dqpe/estimator.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numbers>
#include <random>
#include <vector>

using namespace dqpe;

namespace {

ParentDistribution one_hot(const ReadoutGrid& grid, int j) {
    RealVector p = RealVector::Zero(grid.size());
    p[j] = 1.0;
    return ParentDistribution(std::move(p), grid);
}

ParentDistribution single_phase(const ReadoutGrid& grid, double phi) {
    RealVector phases(1), weights(1);
    phases << phi;
    weights << 1.0;
    return spectral_distribution(phases, weights, grid);
}

double circular_error(double a, double b) { return std::abs(circular_delta(a - b)); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST_CASE("majority rule reads the one-hot grid phase", "[estimator]") {
    const ReadoutGrid grid(3);
    CHECK(majority_rule(one_hot(grid, 5)) == Catch::Approx(0.625));
}

TEST_CASE("majority rule picks the nearest grid point of a kernel", "[estimator]") {
    const ReadoutGrid grid(8);
    CHECK(majority_rule(single_phase(grid, 0.3)) == Catch::Approx(77.0 / 256.0));
}

TEST_CASE("majority rule breaks ties toward the lowest index", "[estimator]") {
    const ReadoutGrid grid(3);
    RealVector p = RealVector::Constant(grid.size(), 1.0 / grid.size());
    CHECK(majority_rule(ParentDistribution(std::move(p), grid)) == 0.0);
}

TEST_CASE("circular moment of a one-hot distribution at phase 0.25 is i", "[estimator]") {
    const ReadoutGrid grid(2);
    const auto m = cruz_moment(one_hot(grid, 1));
    CHECK(m.value.real() == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.value.imag() == Catch::Approx(1.0).margin(1e-15));
    CHECK(m.mean_direction() == Catch::Approx(0.25));
}

TEST_CASE("circular moment matches the closed form for a single eigenstate", "[estimator]") {
    const int t = 11;
    const ReadoutGrid grid(t);
    const double n = grid.size();
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        const double phi = ud(gen);
        const auto m = cruz_moment(single_phase(grid, phi));
        const Complex expected =
            (n - 1.0) / n * std::polar(1.0, 2.0 * std::numbers::pi * phi) +
            1.0 / n * std::polar(1.0, -(n - 1.0) * 2.0 * std::numbers::pi * phi);
        CHECK(std::abs(m.value - expected) < 1e-6);
    }
}

TEST_CASE("on-grid eigenphase gives unit resultant", "[estimator]") {
    const ReadoutGrid grid(10);
    const auto m = cruz_moment(single_phase(grid, grid.phase(321)));
    CHECK(m.magnitude() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("expectation moment averages separated peaks circularly", "[estimator]") {
    const ReadoutGrid grid(10);

    // grid-aligned spikes near 0.2 and 0.3, symmetric weights: circular midpoint
    {
        RealVector p = RealVector::Zero(grid.size());
        p[205] = 0.5;
        p[307] = 0.5;
        const auto mu =
            expectation_moment(ParentDistribution(std::move(p), grid)).mean_direction();
        CHECK(mu == Catch::Approx(0.5 * (grid.phase(205) + grid.phase(307))).margin(1e-12));
    }

    // asymmetric weights near 0.2 and 0.4: direct complex sum
    {
        RealVector p = RealVector::Zero(grid.size());
        p[205] = 0.8;
        p[410] = 0.2;
        const Complex direct =
            0.8 * std::polar(1.0, 2.0 * std::numbers::pi * grid.phase(205)) +
            0.2 * std::polar(1.0, 2.0 * std::numbers::pi * grid.phase(410));
        const auto mu =
            expectation_moment(ParentDistribution(std::move(p), grid)).mean_direction();
        CHECK(mu == Catch::Approx(std::arg(direct) / (2.0 * std::numbers::pi)).margin(1e-12));
    }
}

TEST_CASE("expectation moment equals the single-eigenstate moment when degenerate", "[estimator]") {
    const ReadoutGrid grid(9);
    const auto dist = single_phase(grid, 0.37);
    CHECK(std::abs(expectation_moment(dist).value - cruz_moment(dist).value) == 0.0);
}

TEST_CASE("tempered softmax keeps uniform distributions uniform", "[estimator]") {
    const ReadoutGrid grid(4);
    RealVector p = RealVector::Constant(grid.size(), 1.0 / grid.size());
    for (double t_soft : {0.001, 0.1, 10.0}) {
        const auto q = tempered_softmax(ParentDistribution(p, grid), t_soft);
        for (int j = 0; j < grid.size(); ++j)
            CHECK(q.probabilities[j] == Catch::Approx(1.0 / grid.size()).margin(1e-15));
    }
}

TEST_CASE("tempered softmax concentrates on the maximum at low temperature", "[estimator]") {
    const ReadoutGrid grid(1);
    RealVector p(2);
    p << 0.8, 0.2;
    const auto q = tempered_softmax(ParentDistribution(p, grid), 0.1);
    const double e8 = std::exp(8.0), e2 = std::exp(2.0);
    CHECK(q.probabilities[0] == Catch::Approx(e8 / (e8 + e2)).epsilon(1e-12));
    CHECK(q.probabilities[1] == Catch::Approx(e2 / (e8 + e2)).epsilon(1e-12));
    CHECK(q.probabilities[0] == Catch::Approx(0.99753).margin(5e-6));
    CHECK(q.probabilities[1] == Catch::Approx(0.00247).margin(5e-6));

    // T -> 0 approaches one-hot on the argmax
    const auto cold = tempered_softmax(ParentDistribution(p, grid), 1e-3);
    CHECK(cold.probabilities[0] > 1.0 - 1e-12);
}

TEST_CASE("tempered softmax flattens toward uniform at high temperature", "[estimator]") {
    const ReadoutGrid grid(2);
    RealVector p(4);
    p << 0.7, 0.1, 0.1, 0.1;
    const auto q = tempered_softmax(ParentDistribution(p, grid), 1e6);
    for (int j = 0; j < 4; ++j)
        CHECK(q.probabilities[j] == Catch::Approx(0.25).margin(1e-6));
}

TEST_CASE("tempered softmax is permutation equivariant", "[estimator]") {
    const ReadoutGrid grid(2);
    RealVector p(4);
    p << 0.4, 0.3, 0.2, 0.1;
    const auto q = tempered_softmax(ParentDistribution(p, grid), 0.05);
    RealVector perm(4);
    perm << p[2], p[0], p[3], p[1];
    const auto qp = tempered_softmax(ParentDistribution(perm, grid), 0.05);
    CHECK(qp.probabilities[0] == Catch::Approx(q.probabilities[2]).epsilon(1e-14));
    CHECK(qp.probabilities[1] == Catch::Approx(q.probabilities[0]).epsilon(1e-14));
    CHECK(qp.probabilities[2] == Catch::Approx(q.probabilities[3]).epsilon(1e-14));
    CHECK(qp.probabilities[3] == Catch::Approx(q.probabilities[1]).epsilon(1e-14));
}

TEST_CASE("tempered softmax rejects non-positive temperatures", "[estimator]") {
    const ReadoutGrid grid(1);
    RealVector p(2);
    p << 0.5, 0.5;
    CHECK_THROWS_AS(tempered_softmax(ParentDistribution(p, grid), 0.0), std::invalid_argument);
}

TEST_CASE("peak location of point masses", "[estimator]") {
    const ReadoutGrid grid(5);
    CHECK(peak_location(one_hot(grid, 7)) == Catch::Approx(grid.phase(7)).margin(1e-14));

    RealVector p = RealVector::Zero(grid.size());
    p[12] = 0.5;
    p[13] = 0.5;
    CHECK(peak_location(ParentDistribution(std::move(p), grid)) ==
          Catch::Approx(12.5 / grid.size()).margin(1e-14));
}

TEST_CASE("peak location wraps across the 0/1 seam", "[estimator]") {
    const ReadoutGrid grid(5);
    RealVector p = RealVector::Zero(grid.size());
    p[grid.size() - 1] = 0.5;
    p[0] = 0.5;
    const double expected = 1.0 - 1.0 / (2.0 * grid.size());
    CHECK(peak_location(ParentDistribution(std::move(p), grid)) ==
          Catch::Approx(std::fmod(expected, 1.0)).margin(1e-14));
}

TEST_CASE("boxcar values at the center, the edge, and far outside", "[estimator]") {
    const GceConfig cfg(0.0035, 1000.0, 0.015);  // steepness * h = 15
    CHECK(boxcar(0.3, 0.3, cfg) == Catch::Approx(std::tanh(15.0)).epsilon(1e-12));
    CHECK(boxcar(0.3 + cfg.half_width, 0.3, cfg) ==
          Catch::Approx(0.5 * std::tanh(30.0)).epsilon(1e-12));
    CHECK(boxcar(0.3 + 0.2, 0.3, cfg) < 1e-6);
}

TEST_CASE("boxcar is bounded and symmetric under circular distance", "[estimator]") {
    const GceConfig cfg(0.0035, 300.0, 0.02);
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double center = ud(gen);
        const double d = ud(gen) * 0.5;
        const double plus = boxcar(std::fmod(center + d, 1.0), center, cfg);
        const double minus = boxcar(std::fmod(center - d + 1.0, 1.0), center, cfg);
        CHECK(plus > 0.0);
        CHECK(plus < 1.0);
        CHECK(plus == Catch::Approx(minus).margin(1e-12));
    }
}

TEST_CASE("windowed moment of a full-window eigenstate hits the large-t magnitude", "[estimator]") {
    const int t = 10;
    const ReadoutGrid grid(t);
    const GceConfig cfg(0.0035, 1000.0, 0.5);
    // quarter-grid offset, where the discrete moment matches the continuum value
    const double phi = (101.0 + 0.25) / grid.size();
    const auto m = gce_moment(single_phase(grid, phi), cfg);
    CHECK(m.magnitude() == Catch::Approx(1023.0 / 1024.0).margin(1e-4));
}

TEST_CASE("windowed moment of a one-hot distribution is exact", "[estimator]") {
    const ReadoutGrid grid(9);
    const auto cfg = GceConfig::for_grid(grid, 8);
    const auto m = gce_moment(one_hot(grid, 77), cfg);
    CHECK(m.mean_direction() == Catch::Approx(grid.phase(77)).margin(1e-14));
}

TEST_CASE("windowed estimator beats majority rule on random off-grid phases", "[estimator]") {
    const int t = 13;
    const ReadoutGrid grid(t);
    const auto cfg = GceConfig::for_grid(grid, 16);
    std::mt19937 gen(1234);
    std::uniform_real_distribution<double> ud(0.0, 1.0);

    std::vector<double> err_gce, err_mr;
    for (int rep = 0; rep < 100; ++rep) {
        const double phi = ud(gen);
        const auto dist = single_phase(grid, phi);
        err_gce.push_back(circular_error(gce_moment(dist, cfg).mean_direction(), phi));
        err_mr.push_back(circular_error(majority_rule(dist), phi));
    }
    CHECK(median(err_gce) < median(err_mr));
}

TEST_CASE("estimators are equivariant under grid rotations", "[estimator]") {
    const int t = 8;
    const ReadoutGrid grid(t);
    const auto cfg = GceConfig::for_grid(grid, 8);
    const auto base = single_phase(grid, 0.3721);

    const int m = 57;
    RealVector rotated(grid.size());
    for (int j = 0; j < grid.size(); ++j)
        rotated[(j + m) % grid.size()] = base.probabilities[j];
    const ParentDistribution rot(std::move(rotated), grid);

    const double shift = double(m) / grid.size();
    CHECK(circular_error(gce_moment(rot, cfg).mean_direction(),
                         gce_moment(base, cfg).mean_direction() + shift) < 1e-10);
    CHECK(circular_error(majority_rule(rot), majority_rule(base) + shift) < 1e-14);
    CHECK(circular_error(peak_location(tempered_softmax(rot, cfg.temperature)),
                         peak_location(tempered_softmax(base, cfg.temperature)) + shift) <
          1e-10);
}

TEST_CASE("pipeline stages respond smoothly to single-entry perturbations", "[estimator]") {
    const int t = 7;
    const ReadoutGrid grid(t);
    const auto cfg = GceConfig::for_grid(grid, 8);
    const auto base = single_phase(grid, 0.4631);

    // second-order convergence of central differences implies no kinks
    const auto mu_of = [&](const RealVector& p) {
        return gce_moment(ParentDistribution(p, grid), cfg).mean_direction();
    };
    std::mt19937 gen(8);
    std::uniform_int_distribution<int> pick(0, grid.size() - 1);
    for (int rep = 0; rep < 5; ++rep) {
        const int j = pick(gen);
        const auto fd = [&](double s) {
            RealVector up = base.probabilities, dn = base.probabilities;
            up[j] += s;
            dn[j] -= s;
            return (mu_of(up) - mu_of(dn)) / (2.0 * s);
        };
        const double d1 = fd(4e-4), d2 = fd(2e-4), d3 = fd(1e-4);
        const double e1 = std::abs(d1 - d3);
        const double e2 = std::abs(d2 - d3);
        if (e1 > 1e-11)  // above the rounding floor, halving the step ~quarters the error
            CHECK(e2 < 0.45 * e1);
    }
}

TEST_CASE("config validation rejects out-of-range smoothing parameters", "[estimator]") {
    CHECK_THROWS_AS(GceConfig(0.0, 1000.0, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(GceConfig(0.0035, -1.0, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(GceConfig(0.0035, 6000.0, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(GceConfig(0.0035, 1000.0, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(GceConfig(0.0035, 1000.0, 0.0), std::invalid_argument);
}
