// statistics.hpp — closed-form statistics of the windowed circular estimator
// (continuum moment, limits, bias) and the sample/shot/query cost model.

#pragma once

#include "dqpe/estimator.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dqpe {

namespace detail {

// sin(pi x) and cos(pi x) with exact range reduction, so dyadic arguments
// (box-aligned windows, h = 0.5) hit the zeros of the lattice exactly.
inline double sin_pi(double x) {
    double r = x - 2.0 * std::round(x * 0.5);  // [-1, 1]
    if (r > 0.5)
        r = 1.0 - r;
    else if (r < -0.5)
        r = -1.0 - r;
    return std::sin(std::numbers::pi * r);
}

inline double cos_pi(double x) {
    const double r = std::abs(x - 2.0 * std::round(x * 0.5));  // [0, 1]
    if (r <= 0.5) return std::sin(std::numbers::pi * (0.5 - r));
    return -std::sin(std::numbers::pi * (r - 0.5));
}

inline Complex cis_pi(double x) { return {cos_pi(x), sin_pi(x)}; }

// 10-point Gauss-Legendre rule on [-1, 1].
inline constexpr double gl10_nodes[10] = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244,
    -0.4333953941292472, -0.1488743389816312, 0.1488743389816312,
    0.4333953941292472,  0.6794095682990244,  0.8650633666889845,
    0.9739065285171717};
inline constexpr double gl10_weights[10] = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820,
    0.2692667193099963, 0.2955242247147529, 0.2955242247147529,
    0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
    0.0666713443086881};

// Squared-Dirichlet lobe, g(y) = sin^2(N pi y) / sin^2(pi y) in [0, N^2].
inline double dirichlet_sq(double y, int t) {
    const double n = static_cast<double>(1 << t);
    return n * n * kernel_pair(circular_delta(y), t).probability;
}

inline void check_window(double h) {
    if (!(h > 0.0) || h > 0.5)
        throw std::invalid_argument("window half-width must lie in (0, 0.5]");
}

// Smallest integer >= r, tolerant of rounding fuzz just above an integer.
inline std::int64_t ceil_count(double r) {
    const double c = std::ceil(r);
    if (c >= 2.0 && c - r > 1.0 - std::max(1e-9, 1e-12 * r))
        return static_cast<std::int64_t>(c) - 1;
    return static_cast<std::int64_t>(c);
}

}  // namespace detail

class QuadratureError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Continuum-limit windowed moment in closed form. The double sum over grid
// harmonics is grouped by n + n', which keeps the evaluation O(2^t):
//   theta = w e^{i 2 pi dphi} / (pi 2^t)
//           [ 2 pi (2^t - 1) h + sum_m mult(m) e^{i 2 pi m dphi} sin(2 pi m h)/m ]
// with m = (n + n') - 2^t ranging over [-2^t, 2^t - 2] \ {0} and
// mult(m) the number of (n, n') pairs at that value.
inline Complex theta_closed_form(int t, double dphi, double h, double overlap) {
    detail::check_window(h);
    if (t < 1 || t > 24)
        throw std::invalid_argument("theta_closed_form: t must be in [1, 24]");
    if (overlap == 0.0) return {0.0, 0.0};

    const double n = static_cast<double>(1 << t);
    Complex bracket(2.0 * std::numbers::pi * (n - 1.0) * h, 0.0);
    const std::int64_t nn = std::int64_t{1} << t;
    for (std::int64_t m = -nn; m <= nn - 2; ++m) {
        if (m == 0) continue;
        const double mult = m < 0 ? static_cast<double>(nn + m + 1)
                                  : static_cast<double>(nn - 1 - m);
        const double md = static_cast<double>(m);
        bracket += mult * detail::cis_pi(2.0 * md * dphi) *
                   (detail::sin_pi(2.0 * md * h) / md);
    }
    return overlap * detail::cis_pi(2.0 * dphi) /
           (std::numbers::pi * n) * bracket;
}

// Same moment by direct quadrature of the continuum integral,
//   theta = w / 2^t  int_{-h}^{h} g(dphi - x) e^{i 2 pi x} dx,
// using panels aligned to the kernel oscillation. Kept independent of the
// closed form so the two can cross-check each other.
inline Complex theta_numeric(int t, double dphi, double h, double overlap) {
    detail::check_window(h);
    if (t < 1 || t > 24)
        throw std::invalid_argument("theta_numeric: t must be in [1, 24]");
    if (overlap == 0.0) return {0.0, 0.0};

    const double n = static_cast<double>(1 << t);
    const auto integrate = [&](std::int64_t panels) {
        Complex acc(0.0, 0.0);
        const double width = 2.0 * h / static_cast<double>(panels);
        for (std::int64_t c = 0; c < panels; ++c) {
            const double lo = -h + width * static_cast<double>(c);
            const double mid = lo + 0.5 * width;
            Complex cell(0.0, 0.0);
            for (int q = 0; q < 10; ++q) {
                const double x = mid + 0.5 * width * detail::gl10_nodes[q];
                cell += detail::gl10_weights[q] * detail::dirichlet_sq(dphi - x, t) *
                        detail::cis_pi(2.0 * x);
            }
            acc += 0.5 * width * cell;
        }
        return Complex(overlap / n * acc);
    };

    const std::int64_t panels =
        std::max<std::int64_t>(16, static_cast<std::int64_t>(std::ceil(2.0 * h * n * 4.0)));
    const Complex coarse = integrate(panels);
    const Complex fine = integrate(2 * panels);
    if (std::abs(fine - coarse) > 1e-9 * (std::abs(fine) + 1e-30))
        throw QuadratureError("theta_numeric: quadrature did not converge");
    return fine;
}

// Bias factor of the narrow-window expansion,
//   B = |B| e^{-i alpha} = (1 - i 2 pi dphi) 2^t + (2^t - 1) / 2^t.
// |B| grows like 2^t, so alpha -> 0 as the readout register grows.
inline std::pair<double, double> bias_term(int t, double dphi) {
    if (t < 1 || t > 30) throw std::invalid_argument("bias_term: t must be in [1, 30]");
    const double n = static_cast<double>(1 << t);
    const Complex b = Complex(1.0, -2.0 * std::numbers::pi * dphi) * n + (n - 1.0) / n;
    return {std::abs(b), -std::arg(b)};
}

struct MomentAnalysis {
    Complex theta_closed;
    double bias_magnitude;
    double bias_phase;   // alpha, radians
    double half_width;
    double mismatch;     // dphi, phase units
    double overlap;
};

inline MomentAnalysis analyze_moment(int t, double dphi, double h, double overlap) {
    const auto [bmag, alpha] = bias_term(t, dphi);
    return {theta_closed_form(t, dphi, h, overlap), bmag, alpha, h, dphi, overlap};
}

// Circular-statistics variance of the moment, Var = 1 - |theta|.
inline double variance_theta(double theta_magnitude) {
    if (theta_magnitude < 0.0 || theta_magnitude > 1.0)
        throw std::invalid_argument("variance_theta: magnitude must lie in [0, 1]");
    return 1.0 - theta_magnitude;
}

// Variance of the mean direction by error propagation through arg(theta)/2pi,
// closed form (1 - |theta|) / (8 pi^2 |theta|^2).
inline double variance_mu(const TrigMoment& theta) {
    double mag = theta.magnitude();
    if (mag <= 0.0)
        throw std::invalid_argument("variance_mu: zero-magnitude moment");
    if (mag > 1.0 && mag < 1.0 + 1e-12) mag = 1.0;  // rounding slack only
    return variance_theta(mag) /
           (8.0 * std::numbers::pi * std::numbers::pi * mag * mag);
}

// The same propagation written out through both partial derivatives; used to
// cross-check the closed form.
inline double variance_mu_from_partials(const TrigMoment& theta) {
    double mag = theta.magnitude();
    if (mag <= 0.0)
        throw std::invalid_argument("variance_mu_from_partials: zero-magnitude moment");
    if (mag > 1.0 && mag < 1.0 + 1e-12) mag = 1.0;
    const double re = theta.value.real();
    const double im = theta.value.imag();
    const double denom = 2.0 * std::numbers::pi * mag * mag;
    const double dmu_dre = -im / denom;
    const double dmu_dim = re / denom;
    return 0.5 * (dmu_dre * dmu_dre + dmu_dim * dmu_dim) * variance_theta(mag);
}

// Sample count from Chebyshev's inequality: N >= Var(mu) / eps^2.
inline std::int64_t chebyshev_samples(double var_mu, double epsilon) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("chebyshev_samples: epsilon must be positive");
    if (var_mu < 0.0)
        throw std::invalid_argument("chebyshev_samples: negative variance");
    return std::max<std::int64_t>(1, detail::ceil_count(var_mu / (epsilon * epsilon)));
}

// Shot budget for a stencil-combined derivative: Var(mu) ||y||_1^2 / eps^2.
inline std::int64_t gradient_shot_budget(double var_mu, double stencil_one_norm,
                                         double epsilon) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("gradient_shot_budget: epsilon must be positive");
    if (var_mu < 0.0 || stencil_one_norm < 0.0)
        throw std::invalid_argument("gradient_shot_budget: negative input");
    return std::max<std::int64_t>(
        1, detail::ceil_count(var_mu * stencil_one_norm * stencil_one_norm /
                              (epsilon * epsilon)));
}

// Total query count G * t * M * n_shots.
inline std::int64_t total_cost(std::int64_t gate_count, int t, std::int64_t n_parameters,
                               std::int64_t n_shots) {
    if (gate_count < 1 || t < 1 || n_parameters < 1 || n_shots < 1)
        throw std::invalid_argument("total_cost: all factors must be at least 1");
    const auto guard = [](std::int64_t a, std::int64_t b) {
        if (a > std::numeric_limits<std::int64_t>::max() / b)
            throw std::overflow_error("total_cost: query count overflows 64 bits");
        return a * b;
    };
    return guard(guard(guard(gate_count, static_cast<std::int64_t>(t)), n_parameters),
                 n_shots);
}

// Full width at half maximum of the readout kernel's main lobe.
inline double fwhm(int t) {
    if (t < 1) throw std::invalid_argument("fwhm: t must be at least 1");
    return 1.0 / static_cast<double>(std::int64_t{1} << t);
}

// Smallest window half-width (a multiple of the grid spacing) whose
// integrated kernel area reaches the requested fraction of the total.
inline double window_for_coverage(int t, double fraction) {
    if (t < 1 || t > 24)
        throw std::invalid_argument("window_for_coverage: t must be in [1, 24]");
    if (!(fraction > 0.0) || fraction >= 1.0)
        throw std::invalid_argument("window_for_coverage: fraction must lie in (0, 1)");

    const std::int64_t n = std::int64_t{1} << t;
    const double spacing = 1.0 / static_cast<double>(n);
    const std::int64_t half = n / 2;

    std::vector<double> cell(static_cast<std::size_t>(half));
    for (std::int64_t k = 0; k < half; ++k) {
        const double lo = static_cast<double>(k) * spacing;
        const double mid = lo + 0.5 * spacing;
        double acc = 0.0;
        for (int q = 0; q < 10; ++q)
            acc += detail::gl10_weights[q] *
                   detail::dirichlet_sq(mid + 0.5 * spacing * detail::gl10_nodes[q], t);
        cell[static_cast<std::size_t>(k)] = 0.5 * spacing * acc;
    }
    double total = 0.0;
    for (double c : cell) total += c;

    double prefix = 0.0;
    for (std::int64_t k = 1; k <= half; ++k) {
        prefix += cell[static_cast<std::size_t>(k - 1)];
        if (prefix / total >= fraction) return static_cast<double>(k) * spacing;
    }
    throw std::runtime_error("window_for_coverage: fraction unreachable");
}

// Sample counts, shot budgets, and the query-cost estimate for one run.
struct CostReport {
    double variance_theta = 0.0;
    double variance_mu = 0.0;
    std::int64_t n_samples_estimate = 0;
    std::int64_t n_shots_gradient = 0;
    std::int64_t total_queries = 0;
    // echoed inputs
    int t = 0;
    double epsilon = 0.0;        // phase units
    std::int64_t gate_count = 0;
    std::int64_t n_parameters = 0;
    double stencil_one_norm = 0.0;
    double theta_magnitude = 0.0;
};

inline CostReport make_cost_report(int t, double epsilon, std::int64_t gate_count,
                                   std::int64_t n_parameters, double stencil_one_norm,
                                   double theta_magnitude) {
    CostReport r;
    r.t = t;
    r.epsilon = epsilon;
    r.gate_count = gate_count;
    r.n_parameters = n_parameters;
    r.stencil_one_norm = stencil_one_norm;
    r.theta_magnitude = theta_magnitude;
    r.variance_theta = variance_theta(theta_magnitude);
    r.variance_mu = variance_mu(TrigMoment{Complex(theta_magnitude, 0.0)});
    r.n_samples_estimate = chebyshev_samples(r.variance_mu, epsilon);
    r.n_shots_gradient = gradient_shot_budget(r.variance_mu, stencil_one_norm, epsilon);
    r.total_queries = total_cost(gate_count, t, n_parameters, r.n_shots_gradient);
    return r;
}

}  // namespace dqpe
