#include "dqpe/sampling.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

using namespace dqpe;

namespace {

ParentDistribution uniform4() {
    const ReadoutGrid grid(2);
    return ParentDistribution(RealVector::Constant(4, 0.25), grid);
}

}  // namespace

TEST_CASE("splitmix64 reference sequence", "[sampling]") {
    // first outputs of the reference algorithm for seed 0
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.next() == 0x06C45D188009454FULL);
}

TEST_CASE("one-hot parent puts every shot on its bitstring", "[sampling]") {
    const ReadoutGrid grid(3);
    RealVector p = RealVector::Zero(8);
    p[6] = 1.0;
    const auto emp = sample(ParentDistribution(std::move(p), grid), 1000, 42);
    CHECK(emp.counts[6] == 1000);
    CHECK(std::accumulate(emp.counts.begin(), emp.counts.end(), std::int64_t{0}) == 1000);
}

TEST_CASE("uniform parent frequencies converge at a million shots", "[sampling]") {
    const auto emp = sample(uniform4(), 1000000, 7);
    const auto f = frequencies(emp);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(f.probabilities[j] - 0.25) < 0.005);
}

TEST_CASE("fixed seed reproduces counts exactly", "[sampling]") {
    const auto a = sample(uniform4(), 5000, 123456);
    const auto b = sample(uniform4(), 5000, 123456);
    CHECK(a.counts == b.counts);
    const auto c = sample(uniform4(), 5000, 123457);
    CHECK(a.counts != c.counts);
}

TEST_CASE("zero shots are rejected", "[sampling]") {
    CHECK_THROWS_AS(sample(uniform4(), 0, 1), std::invalid_argument);
}

TEST_CASE("frequencies divide counts by shots", "[sampling]") {
    const ReadoutGrid grid(1);
    {
        EmpiricalDistribution emp({2, 2}, 4, 0, grid);
        const auto f = frequencies(emp);
        CHECK(f.probabilities[0] == 0.5);
        CHECK(f.probabilities[1] == 0.5);
    }
    {
        EmpiricalDistribution emp({4, 0}, 4, 0, grid);
        const auto f = frequencies(emp);
        CHECK(f.probabilities[0] == 1.0);
        CHECK(f.probabilities[1] == 0.0);
    }
}

TEST_CASE("sampled counts always sum to the shot total", "[sampling]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto emp = sample(uniform4(), 997, seed);
        CHECK(std::accumulate(emp.counts.begin(), emp.counts.end(), std::int64_t{0}) == 997);
    }
}

TEST_CASE("empirical error shrinks at the multinomial rate", "[sampling]") {
    const ReadoutGrid grid(4);
    RealVector p(16);
    for (int j = 0; j < 16; ++j) p[j] = (j + 1.0);
    p /= p.sum();
    const ParentDistribution parent(std::move(p), grid);

    double prev = 1.0;
    for (std::int64_t shots : {std::int64_t{1000}, std::int64_t{100000}, std::int64_t{10000000}}) {
        const auto f = frequencies(sample(parent, shots, 2024));
        const double err = (f.probabilities - parent.probabilities).cwiseAbs().maxCoeff();
        CHECK(err < prev);
        CHECK(err < 5.0 / std::sqrt(static_cast<double>(shots)));
        prev = err;
    }
}

TEST_CASE("mean frequency over 100 seeds stays within three standard errors", "[sampling]") {
    const ReadoutGrid grid(2);
    RealVector p(4);
    p << 0.4, 0.3, 0.2, 0.1;
    const ParentDistribution parent(std::move(p), grid);

    const std::int64_t shots = 2000;
    const int n_seeds = 100;
    RealVector mean = RealVector::Zero(4);
    for (int s = 0; s < n_seeds; ++s)
        mean += frequencies(sample(parent, shots, 1000 + static_cast<std::uint64_t>(s)))
                    .probabilities;
    mean /= n_seeds;

    for (int j = 0; j < 4; ++j) {
        const double pj = parent.probabilities[j];
        const double se = std::sqrt(pj * (1.0 - pj) / (shots * n_seeds));
        CHECK(std::abs(mean[j] - pj) <= 3.0 * se);
    }
}
