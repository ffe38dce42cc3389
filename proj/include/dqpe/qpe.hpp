// qpe.hpp — exact phase-estimation readout distributions, computed two
// independent ways: the spectral kernel mixture and a gate-level statevector
// simulation (Hadamards, controlled powers, inverse QFT).

#pragma once

#include "dqpe/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dqpe {

class AliasingError : public std::domain_error {
    using std::domain_error::domain_error;
};

struct ReadoutGrid {
    int t = 0;

    explicit ReadoutGrid(int qubits) : t(qubits) {
        if (t < 1 || t > 24)
            throw std::invalid_argument("ReadoutGrid: qubit count must be in [1, 24]");
    }
    int size() const { return 1 << t; }
    double phase(int j) const { return static_cast<double>(j) / size(); }
};

// Affine energy <-> phase map. Phases of in-span energies land in
// [margin, 1 - margin], keeping peaks away from the 0/1 seam.
struct PhaseMap {
    double e_min = 0.0;
    double delta_e = 1.0;
    double margin = 0.0;

    PhaseMap(double emin, double span, double m = 0.0)
        : e_min(emin), delta_e(span), margin(m) {
        if (delta_e <= 0.0)
            throw std::invalid_argument("PhaseMap: span must be positive");
        if (margin < 0.0 || margin >= 0.5)
            throw std::invalid_argument("PhaseMap: margin must be in [0, 0.5)");
    }

    static PhaseMap from_spectrum(const RealVector& eigenvalues, double m = 0.05) {
        const double lo = eigenvalues.minCoeff();
        const double hi = eigenvalues.maxCoeff();
        const double span = hi - lo;
        return PhaseMap(lo, span > 0.0 ? span : 1.0, m);
    }

    // d(phase)/d(energy)
    double scale() const { return (1.0 - 2.0 * margin) / delta_e; }

    double phase_of_energy(double e) const {
        const double slack = 1e-9 * delta_e;
        if (e < e_min - slack || e > e_min + delta_e + slack)
            throw AliasingError("phase_of_energy: energy " + std::to_string(e) +
                                " outside mapped span [" + std::to_string(e_min) + ", " +
                                std::to_string(e_min + delta_e) + "]");
        return margin + (e - e_min) * scale();
    }

    double energy_of_phase(double phi) const {
        return e_min + (phi - margin) / scale();
    }
};

struct ParentDistribution {
    RealVector probabilities;
    ReadoutGrid grid;

    ParentDistribution(RealVector p, ReadoutGrid g)
        : probabilities(std::move(p)), grid(g) {
        if (probabilities.size() != grid.size())
            throw std::invalid_argument("ParentDistribution: size does not match grid");
    }
};

// Reduce a phase difference to the circle, range (-0.5, 0.5].
inline double circular_delta(double dphi) {
    double r = dphi - std::floor(dphi + 0.5);
    if (r <= -0.5) r += 1.0;
    return r;
}

struct KernelValue {
    double probability;
    double dprobability_ddelta;  // derivative w.r.t. the phase mismatch
};

// Squared-Dirichlet readout kernel and its mismatch derivative,
//   K(delta) = sin^2(2^t pi delta) / (2^{2t} sin^2(pi delta)),  K(0) = 1,
// with a log-series branch near delta = 0 where the ratio is ill-conditioned.
inline KernelValue kernel_pair(double delta, int t) {
    const double n = static_cast<double>(1 << t);
    const double a = std::numbers::pi * delta;
    const double na = n * a;

    if (delta == 0.0) return {1.0, 0.0};

    if (std::abs(na) < 1e-2) {
        const double n2 = n * n;
        const double log_k = -(n2 - 1.0) * a * a / 3.0 -
                             (n2 * n2 - 1.0) * a * a * a * a / 90.0;
        const double k = std::exp(log_k);
        const double dlog_da = -2.0 * (n2 - 1.0) * a / 3.0 -
                               2.0 * (n2 * n2 - 1.0) * a * a * a / 45.0;
        return {k, k * dlog_da * std::numbers::pi};
    }

    const double sa = std::sin(a);
    const double sna = std::sin(na);
    const double ca = std::cos(a);
    const double cna = std::cos(na);
    const double s = sna / sa;                   // Dirichlet kernel, in [-n, n]
    const double k = (s / n) * (s / n);
    const double ds_da = (n * cna * sa - ca * sna) / (sa * sa);
    return {k, 2.0 * s * ds_da / (n * n) * std::numbers::pi};
}

// Probability of reading grid point j given a single eigenphase phi_u.
inline double kernel_probability(double phi_u, int j, const ReadoutGrid& grid) {
    if (j < 0 || j >= grid.size())
        throw std::out_of_range("kernel_probability: grid index out of range");
    return kernel_pair(circular_delta(phi_u - grid.phase(j)), grid.t).probability;
}

// Mixture of single-eigenphase kernels with the given weights.
inline ParentDistribution spectral_distribution(const RealVector& phases,
                                                const RealVector& weights,
                                                const ReadoutGrid& grid) {
    if (phases.size() != weights.size())
        throw std::invalid_argument("spectral_distribution: phases/weights size mismatch");
    if (std::abs(weights.sum() - 1.0) > 1e-8)
        throw std::invalid_argument("spectral_distribution: weights must sum to 1, got " +
                                    std::to_string(weights.sum()));
    for (Eigen::Index u = 0; u < phases.size(); ++u) {
        if (weights[u] < -1e-12)
            throw std::invalid_argument("spectral_distribution: negative weight");
        if (phases[u] < 0.0 || phases[u] >= 1.0)
            throw std::invalid_argument("spectral_distribution: phases must lie in [0, 1)");
    }

    RealVector p = RealVector::Zero(grid.size());
    for (Eigen::Index u = 0; u < phases.size(); ++u) {
        const double w = std::max(0.0, weights[u]);
        if (w == 0.0) continue;
        for (int j = 0; j < grid.size(); ++j)
            p[j] += w * kernel_pair(circular_delta(phases[u] - grid.phase(j)), grid.t).probability;
    }
    p /= p.sum();
    return ParentDistribution(std::move(p), grid);
}

namespace detail {

using StateVec = std::vector<Complex>;

inline void apply_single_qubit(StateVec& amp, int bit, const Complex m00, const Complex m01,
                               const Complex m10, const Complex m11) {
    const std::size_t stride = std::size_t{1} << bit;
    for (std::size_t base = 0; base < amp.size(); base += 2 * stride)
        for (std::size_t i = base; i < base + stride; ++i) {
            const Complex a0 = amp[i];
            const Complex a1 = amp[i + stride];
            amp[i] = m00 * a0 + m01 * a1;
            amp[i + stride] = m10 * a0 + m11 * a1;
        }
}

inline void apply_hadamard(StateVec& amp, int bit) {
    const double r = 1.0 / std::numbers::sqrt2;
    apply_single_qubit(amp, bit, r, r, r, -r);
}

// diag(1,1,1,e^{i angle}) on the (control, target) pair.
inline void apply_controlled_phase(StateVec& amp, int bit_a, int bit_b, double angle) {
    const Complex ph = std::polar(1.0, angle);
    const std::size_t mask = (std::size_t{1} << bit_a) | (std::size_t{1} << bit_b);
    for (std::size_t i = 0; i < amp.size(); ++i)
        if ((i & mask) == mask) amp[i] *= ph;
}

inline void apply_swap(StateVec& amp, int bit_a, int bit_b) {
    const std::size_t ma = std::size_t{1} << bit_a;
    const std::size_t mb = std::size_t{1} << bit_b;
    for (std::size_t i = 0; i < amp.size(); ++i)
        if ((i & ma) && !(i & mb)) std::swap(amp[i], amp[(i & ~ma) | mb]);
}

// Dense operator on the low `n` bits, restricted to indices where the
// control bit is set. Blocks of length 2^n are contiguous by layout.
inline void apply_controlled_operator(StateVec& amp, int control_bit, int n,
                                      const ComplexMatrix& u) {
    const std::size_t dim = std::size_t{1} << n;
    const std::size_t cmask = std::size_t{1} << control_bit;
    ComplexVector block(dim);
    for (std::size_t base = 0; base < amp.size(); base += dim) {
        if (!(base & cmask)) continue;
        Eigen::Map<ComplexVector> slice(amp.data() + base, dim);
        block.noalias() = u * slice;
        slice = block;
    }
}

}  // namespace detail

// Inverse QFT over the t bits starting at lsb_offset, with the register
// integer read MSB-first (register qubit 0 is the highest of those bits).
// Maps amplitudes a(m) to 2^{-t/2} sum_m e^{-2 pi i j m / 2^t} a(m).
inline void apply_inverse_qft(detail::StateVec& amp, int t, int lsb_offset) {
    const auto bit_of = [&](int q) { return lsb_offset + (t - 1 - q); };  // register qubit -> bit
    for (int q = 0; q < t / 2; ++q)
        detail::apply_swap(amp, bit_of(q), bit_of(t - 1 - q));
    for (int q = t - 1; q >= 0; --q) {
        for (int p = t - 1; p > q; --p) {
            const double angle = -2.0 * std::numbers::pi / std::pow(2.0, p - q + 1);
            detail::apply_controlled_phase(amp, bit_of(p), bit_of(q), angle);
        }
        detail::apply_hadamard(amp, bit_of(q));
    }
}

// Full statevector simulation of the phase-estimation circuit: Hadamards on
// the readout register, controlled U^{2^k} with U = exp(i 2 pi map(H)) built
// from the eigendecomposition, inverse QFT, then the readout marginal.
inline ParentDistribution circuit_distribution(const ComplexMatrix& h, const ComplexVector& psi,
                                               const PhaseMap& map, const ReadoutGrid& grid) {
    const Eigen::Index dim = h.rows();
    int n = 0;
    while ((Eigen::Index{1} << n) < dim) ++n;
    if ((Eigen::Index{1} << n) != dim)
        throw std::invalid_argument("circuit_distribution: dimension must be a power of 2");
    if (grid.t + n > 24)
        throw std::invalid_argument("circuit_distribution: register too large (t + n > 24)");
    if (psi.size() != dim)
        throw std::invalid_argument("circuit_distribution: state dimension mismatch");
    if (std::abs(psi.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("circuit_distribution: state is not normalized");

    const EigenSystem eig = eigendecompose(h);
    RealVector phases(dim);
    for (Eigen::Index u = 0; u < dim; ++u)
        phases[u] = map.phase_of_energy(eig.eigenvalues[u]);

    const int t = grid.t;
    detail::StateVec amp(std::size_t{1} << (t + n), Complex(0.0, 0.0));
    for (Eigen::Index s = 0; s < dim; ++s) amp[static_cast<std::size_t>(s)] = psi[s];

    for (int q = 0; q < t; ++q) detail::apply_hadamard(amp, n + (t - 1 - q));

    // Readout qubit q (MSB-first) carries integer weight 2^{t-1-q}.
    for (int q = 0; q < t; ++q) {
        const double power = std::pow(2.0, t - 1 - q);
        ComplexVector diag(dim);
        for (Eigen::Index u = 0; u < dim; ++u)
            diag[u] = std::polar(1.0, 2.0 * std::numbers::pi * power * phases[u]);
        const ComplexMatrix u_pow =
            eig.eigenvectors * diag.asDiagonal() * eig.eigenvectors.adjoint();
        detail::apply_controlled_operator(amp, n + (t - 1 - q), n, u_pow);
    }

    apply_inverse_qft(amp, t, n);

    RealVector p = RealVector::Zero(grid.size());
    const std::size_t block = std::size_t{1} << n;
    for (int j = 0; j < grid.size(); ++j) {
        double acc = 0.0;
        const std::size_t base = static_cast<std::size_t>(j) * block;
        for (std::size_t s = 0; s < block; ++s) acc += std::norm(amp[base + s]);
        p[j] = acc;
    }
    p /= p.sum();
    return ParentDistribution(std::move(p), grid);
}

}  // namespace dqpe
