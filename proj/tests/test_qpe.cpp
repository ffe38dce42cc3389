#include "dqpe/qpe.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace dqpe;

namespace {

ComplexMatrix random_hermitian(int dim, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    ComplexMatrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = Complex(dist(gen), dist(gen));
    return ComplexMatrix(0.5 * (a + a.adjoint()));
}

ComplexVector random_state(int dim, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    ComplexVector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = Complex(dist(gen), dist(gen));
    v.normalize();
    return v;
}

}  // namespace

TEST_CASE("phase map endpoints and midpoint", "[qpe]") {
    const PhaseMap map(-2.0, 4.0, 0.0);
    CHECK(map.phase_of_energy(-2.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(map.phase_of_energy(0.0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(map.phase_of_energy(2.0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("phase map round-trips random energies", "[qpe]") {
    const PhaseMap map(-1.5, 3.7, 0.05);
    std::mt19937 gen(9);
    std::uniform_real_distribution<double> dist(-1.5, 2.2);
    for (int i = 0; i < 50; ++i) {
        const double e = dist(gen);
        CHECK(std::abs(map.energy_of_phase(map.phase_of_energy(e)) - e) <= 1e-12 * 3.7);
    }
}

TEST_CASE("phase map rejects out-of-span energies", "[qpe]") {
    const PhaseMap map(0.0, 1.0, 0.05);
    CHECK_THROWS_AS(map.phase_of_energy(1.5), AliasingError);
    CHECK_THROWS_AS(map.phase_of_energy(-0.5), AliasingError);
}

TEST_CASE("kernel is one-hot for on-grid phases", "[qpe]") {
    const ReadoutGrid grid(5);
    const double phi = grid.phase(11);
    for (int j = 0; j < grid.size(); ++j)
        CHECK(kernel_probability(phi, j, grid) == Catch::Approx(j == 11 ? 1.0 : 0.0).margin(1e-24));
}

TEST_CASE("kernel hand evaluation at t=1, phi=0.25", "[qpe]") {
    // (1/4) sin^2(pi/2) / sin^2(pi/4) = 0.5 on both grid points
    const ReadoutGrid grid(1);
    CHECK(kernel_probability(0.25, 0, grid) == Catch::Approx(0.5).margin(1e-14));
    CHECK(kernel_probability(0.25, 1, grid) == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("kernel sums to one over the grid", "[qpe]") {
    std::mt19937 gen(21);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int t = 1; t <= 12; ++t) {
        const ReadoutGrid grid(t);
        const double phi = dist(gen);
        double sum = 0.0;
        for (int j = 0; j < grid.size(); ++j) sum += kernel_probability(phi, j, grid);
        CHECK(sum == Catch::Approx(1.0).margin(1e-10));
    }
}

TEST_CASE("kernel derivative matches central differences", "[qpe]") {
    const int t = 8;
    std::mt19937 gen(4);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const double delta = circular_delta(dist(gen));
        const double step = 1e-7;
        const auto kv = kernel_pair(delta, t);
        const double fd = (kernel_pair(delta + step, t).probability -
                           kernel_pair(delta - step, t).probability) /
                          (2.0 * step);
        CHECK(kv.dprobability_ddelta == Catch::Approx(fd).margin(1e-4).epsilon(1e-5));
    }
    // series branch near zero
    const double tiny = 1e-9;
    const auto kv = kernel_pair(tiny, t);
    const double n2 = 65536.0;
    CHECK(kv.dprobability_ddelta ==
          Catch::Approx(-2.0 * (n2 - 1.0) * std::numbers::pi * std::numbers::pi * tiny / 3.0)
              .epsilon(1e-6));
}

TEST_CASE("spectral distribution of a single on-grid phase is one-hot", "[qpe]") {
    const ReadoutGrid grid(4);
    RealVector phases(1), weights(1);
    phases << grid.phase(9);
    weights << 1.0;
    const auto dist = spectral_distribution(phases, weights, grid);
    CHECK(dist.probabilities[9] == Catch::Approx(1.0).margin(1e-12));
    CHECK(dist.probabilities.sum() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("two on-grid phases give two spikes with the mixture weights", "[qpe]") {
    const ReadoutGrid grid(4);
    RealVector phases(2), weights(2);
    phases << grid.phase(2), grid.phase(12);
    weights << 0.8, 0.2;
    const auto dist = spectral_distribution(phases, weights, grid);
    CHECK(dist.probabilities[2] == Catch::Approx(0.8).margin(1e-12));
    CHECK(dist.probabilities[12] == Catch::Approx(0.2).margin(1e-12));
}

TEST_CASE("half-grid offset phase splits symmetrically", "[qpe]") {
    const ReadoutGrid grid(6);
    const int j = 17;
    RealVector phases(1), weights(1);
    phases << (j + 0.5) / grid.size();
    weights << 1.0;
    const auto dist = spectral_distribution(phases, weights, grid);
    CHECK(dist.probabilities[j] == Catch::Approx(dist.probabilities[j + 1]).epsilon(1e-12));
    const int peak_pair = j;
    for (int k = 0; k < grid.size(); ++k)
        if (k != peak_pair && k != peak_pair + 1)
            CHECK(dist.probabilities[k] < dist.probabilities[peak_pair]);
}

TEST_CASE("spectral distribution validates weights", "[qpe]") {
    const ReadoutGrid grid(3);
    RealVector phases(2), weights(2);
    phases << 0.1, 0.6;
    weights << 0.8, 0.3;  // sums to 1.1
    CHECK_THROWS_AS(spectral_distribution(phases, weights, grid), std::invalid_argument);
}

TEST_CASE("main lobe FWHM equals one grid spacing", "[qpe]") {
    for (int t : {6, 9, 12}) {
        // scan the continuum kernel for its half-maximum crossing
        const double spacing = 1.0 / (1 << t);
        double lo = 0.0, hi = spacing;  // K(0)=1, K(spacing)=0
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (kernel_pair(mid, t).probability > 0.5 ? lo : hi) = mid;
        }
        const double width = 2.0 * lo;
        CHECK(std::abs(width - spacing) <= spacing);
    }
}

TEST_CASE("gate-level inverse QFT matches the DFT matrix", "[qpe]") {
    for (int t : {1, 2, 3, 4}) {
        const int dim = 1 << t;
        std::mt19937 gen(31 + t);
        std::normal_distribution<double> nd(0.0, 1.0);
        std::vector<Complex> amp(dim);
        for (auto& a : amp) a = Complex(nd(gen), nd(gen));

        std::vector<Complex> expected(dim, Complex(0, 0));
        for (int j = 0; j < dim; ++j)
            for (int m = 0; m < dim; ++m)
                expected[j] += amp[m] *
                               std::polar(1.0 / std::sqrt(double(dim)),
                                          -2.0 * std::numbers::pi * j * m / dim);

        auto state = amp;
        apply_inverse_qft(state, t, 0);
        for (int j = 0; j < dim; ++j) CHECK(std::abs(state[j] - expected[j]) < 1e-12);
    }
}

TEST_CASE("circuit path gives one-hot for an eigenstate with on-grid phase", "[qpe]") {
    const ReadoutGrid grid(3);
    // diagonal H whose first eigenvalue maps exactly onto grid point 5
    const PhaseMap map(0.0, 1.0, 0.0);
    ComplexMatrix h = ComplexMatrix::Zero(4, 4);
    h(0, 0) = grid.phase(5);
    h(1, 1) = 0.9;
    h(2, 2) = 0.95;
    h(3, 3) = 1.0;
    ComplexVector psi = ComplexVector::Zero(4);
    psi[0] = 1.0;
    const auto dist = circuit_distribution(h, psi, map, grid);
    CHECK(dist.probabilities[5] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("circuit and spectral paths agree elementwise", "[qpe]") {
    for (unsigned seed : {1u, 2u, 3u}) {
        const ReadoutGrid grid(3);
        const auto h = random_hermitian(4, seed);
        const auto psi = random_state(4, 50 + seed);
        const auto eig = eigendecompose(h);
        const auto map = PhaseMap::from_spectrum(eig.eigenvalues);

        RealVector phases(4);
        for (int u = 0; u < 4; ++u) phases[u] = map.phase_of_energy(eig.eigenvalues[u]);
        const auto spectral = spectral_distribution(phases, overlaps(psi, eig), grid);
        const auto circuit = circuit_distribution(h, psi, map, grid);
        CHECK((spectral.probabilities - circuit.probabilities).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("circuit and spectral paths agree at larger registers", "[qpe]") {
    const ReadoutGrid grid(10);
    const auto h = random_hermitian(16, 13);
    const auto psi = random_state(16, 99);
    const auto eig = eigendecompose(h);
    const auto map = PhaseMap::from_spectrum(eig.eigenvalues);

    RealVector phases(16);
    for (int u = 0; u < 16; ++u) phases[u] = map.phase_of_energy(eig.eigenvalues[u]);
    const auto spectral = spectral_distribution(phases, overlaps(psi, eig), grid);
    const auto circuit = circuit_distribution(h, psi, map, grid);
    CHECK((spectral.probabilities - circuit.probabilities).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("equal mix of two eigenstates superposes their kernels", "[qpe]") {
    const ReadoutGrid grid(5);
    const auto h = random_hermitian(4, 77);
    const auto eig = eigendecompose(h);
    const auto map = PhaseMap::from_spectrum(eig.eigenvalues);
    ComplexVector psi = (eig.eigenvectors.col(0) + eig.eigenvectors.col(2)) / std::sqrt(2.0);

    const auto dist = circuit_distribution(h, psi, map, grid);
    const double phi0 = map.phase_of_energy(eig.eigenvalues[0]);
    const double phi2 = map.phase_of_energy(eig.eigenvalues[2]);
    for (int j = 0; j < grid.size(); ++j) {
        const double expected = 0.5 * kernel_probability(phi0, j, grid) +
                                0.5 * kernel_probability(phi2, j, grid);
        CHECK(dist.probabilities[j] == Catch::Approx(expected).margin(1e-10));
    }
}

TEST_CASE("shifting all eigenphases by grid steps rotates the distribution", "[qpe]") {
    const ReadoutGrid grid(6);
    std::mt19937 gen(15);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    RealVector phases(3), weights(3);
    phases << ud(gen), ud(gen), ud(gen);
    weights << 0.5, 0.3, 0.2;
    const auto base = spectral_distribution(phases, weights, grid);

    const int m = 11;
    RealVector shifted(3);
    for (int u = 0; u < 3; ++u)
        shifted[u] = std::fmod(phases[u] + double(m) / grid.size(), 1.0);
    const auto rotated = spectral_distribution(shifted, weights, grid);
    for (int j = 0; j < grid.size(); ++j)
        CHECK(rotated.probabilities[(j + m) % grid.size()] ==
              Catch::Approx(base.probabilities[j]).margin(1e-12));
}

TEST_CASE("circuit path rejects oversized registers and bad states", "[qpe]") {
    const PhaseMap map(0.0, 1.0, 0.0);
    ComplexMatrix h = ComplexMatrix::Identity(4, 4) * 0.5;
    ComplexVector psi = ComplexVector::Zero(4);
    psi[0] = 0.5;  // not normalized
    CHECK_THROWS_AS(circuit_distribution(h, psi, map, ReadoutGrid(3)), std::invalid_argument);
    psi[0] = 1.0;
    CHECK_THROWS_AS(circuit_distribution(h, psi, map, ReadoutGrid(23)), std::invalid_argument);
}
