// estimator.hpp — phase estimators over readout distributions: majority rule,
// circular-moment estimators, and the smooth softmax/boxcar pipeline.

#pragma once

#include "dqpe/qpe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dqpe {

// Smoothing hyperparameters of the windowed circular estimator.
struct GceConfig {
    double temperature = 0.0035;  // softmax temperature
    double steepness = 1000.0;    // boxcar edge steepness
    double half_width = 0.0;      // window half-width, phase units

    GceConfig(double t_softmax, double k_box, double h)
        : temperature(t_softmax), steepness(k_box), half_width(h) {
        validate();
    }

    // Window sized in grid strings: h = window_strings / 2^t.
    static GceConfig for_grid(const ReadoutGrid& grid, int window_strings = 8,
                              double t_softmax = 0.0035, double k_box = 1000.0) {
        return GceConfig(t_softmax, k_box,
                         static_cast<double>(window_strings) / grid.size());
    }

    void validate() const {
        if (!(temperature > 0.0))
            throw std::invalid_argument("GceConfig: temperature must be positive");
        if (!(steepness > 0.0))
            throw std::invalid_argument("GceConfig: steepness must be positive");
        if (steepness > 5000.0)
            throw std::invalid_argument(
                "GceConfig: steepness above 5000 is numerically unstable");
        if (!(half_width > 0.0) || half_width > 0.5)
            throw std::invalid_argument("GceConfig: half_width must lie in (0, 0.5]");
    }
};

// First trigonometric moment. The argument encodes the phase estimate, the
// magnitude the concentration of the averaged distribution.
struct TrigMoment {
    Complex value{0.0, 0.0};

    double magnitude() const { return std::abs(value); }

    double mean_direction() const {
        if (magnitude() < 1e-12)
            throw std::domain_error("TrigMoment: direction undefined, resultant magnitude " +
                                    std::to_string(magnitude()));
        double mu = std::arg(value) / (2.0 * std::numbers::pi);
        if (mu < 0.0) mu += 1.0;
        return mu;
    }
};

// Grid phase of the most probable bitstring. Ties break toward the lowest index.
inline double majority_rule(const ParentDistribution& dist) {
    if (dist.probabilities.size() == 0)
        throw std::invalid_argument("majority_rule: empty distribution");
    int best = 0;
    for (int j = 1; j < dist.grid.size(); ++j)
        if (dist.probabilities[j] > dist.probabilities[best]) best = j;
    return dist.grid.phase(best);
}

namespace detail {

inline Complex circular_moment(const ParentDistribution& dist) {
    Complex acc(0.0, 0.0);
    for (int j = 0; j < dist.grid.size(); ++j)
        acc += dist.probabilities[j] *
               std::polar(1.0, 2.0 * std::numbers::pi * dist.grid.phase(j));
    return acc;
}

}  // namespace detail

// Circular average of a (near) single-eigenstate distribution.
inline TrigMoment cruz_moment(const ParentDistribution& dist) {
    return {detail::circular_moment(dist)};
}

// Same circular average over an arbitrary multi-peak distribution; the mean
// direction then estimates the phase-mapped expectation value.
inline TrigMoment expectation_moment(const ParentDistribution& dist) {
    return {detail::circular_moment(dist)};
}

// exp(P/T) reweighting, computed with max subtraction. Low temperatures
// concentrate the output on the most probable bitstring.
inline ParentDistribution tempered_softmax(const ParentDistribution& dist, double temperature) {
    if (!(temperature > 0.0))
        throw std::invalid_argument("tempered_softmax: temperature must be positive");
    const double pmax = dist.probabilities.maxCoeff();
    RealVector q(dist.grid.size());
    for (int j = 0; j < dist.grid.size(); ++j)
        q[j] = std::exp((dist.probabilities[j] - pmax) / temperature);
    q /= q.sum();
    return ParentDistribution(std::move(q), dist.grid);
}

// Circular weighted mean of a softened distribution. Reduces to the plain
// weighted average when the mass sits away from the 0/1 seam, and wraps
// correctly when it does not.
inline double peak_location(const ParentDistribution& softened) {
    const Complex r = detail::circular_moment(softened);
    if (std::abs(r) < 1e-12)
        throw std::domain_error("peak_location: resultant magnitude below 1e-12");
    double c = std::arg(r) / (2.0 * std::numbers::pi);
    if (c < 0.0) c += 1.0;
    return c;
}

// Smooth window built from two tanh edges, evaluated with circular distance:
// ~1 inside [center - h, center + h], ~0 outside, smooth everywhere.
// 0.5 [tanh(a) - tanh(b)] is evaluated as 0.5 sinh(a - b) / (cosh(a) cosh(b))
// in log space; the direct difference rounds to zero a short way past the
// window edge, while the product form keeps the tails positive.
inline double boxcar(double phase, double center, const GceConfig& config) {
    const double d = circular_delta(phase - center);
    const double a = config.steepness * (d + config.half_width);
    const double b = config.steepness * (d - config.half_width);
    const auto log_cosh = [](double x) {
        const double ax = std::abs(x);
        return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
    };
    const double width = a - b;  // 2 k h
    const double log_sinh =
        width > 36.0 ? width - std::numbers::ln2 : std::log(std::sinh(width));
    return 0.5 * std::exp(log_sinh - log_cosh(a) - log_cosh(b));
}

// d(boxcar)/d(center), from the sech^2 edge derivatives.
inline double boxcar_center_derivative(double phase, double center, const GceConfig& config) {
    const double d = circular_delta(phase - center);
    const auto sech2 = [](double x) {
        const double e = std::exp(-2.0 * std::abs(x));
        const double s = 2.0 * std::sqrt(e) / (1.0 + e);
        return s * s;
    };
    const double k = config.steepness;
    return 0.5 * k *
           (sech2(k * (d - config.half_width)) - sech2(k * (d + config.half_width)));
}

// Intermediate stages of the smooth pipeline, exposed for reuse by the
// gradient chain and for stage-level tests.
struct GceStages {
    RealVector softened;   // tempered softmax of the input
    double center;         // circular mean of the softened distribution
    RealVector weights;    // boxcar weights at each grid phase
    TrigMoment moment;     // windowed circular moment
};

inline GceStages gce_stages(const ParentDistribution& dist, const GceConfig& config) {
    config.validate();
    const ParentDistribution softened = tempered_softmax(dist, config.temperature);
    const double center = peak_location(softened);

    RealVector w(dist.grid.size());
    Complex theta(0.0, 0.0);
    for (int j = 0; j < dist.grid.size(); ++j) {
        w[j] = boxcar(dist.grid.phase(j), center, config);
        theta += w[j] * dist.probabilities[j] *
                 std::polar(1.0, 2.0 * std::numbers::pi * dist.grid.phase(j));
    }
    if (std::abs(theta) < 1e-12)
        throw std::domain_error("gce_moment: resultant magnitude below 1e-12");
    return {softened.probabilities, center, std::move(w), TrigMoment{theta}};
}

// Windowed circular moment: softmax locates the dominant peak, the boxcar
// suppresses the rest of the distribution, and the circular average of what
// remains estimates the peak's phase. Every stage is smooth in the inputs.
inline TrigMoment gce_moment(const ParentDistribution& dist, const GceConfig& config) {
    return gce_stages(dist, config).moment;
}

// Phase map whose lower edge is padded so the tracked eigenvalue lands a
// quarter cell off the readout lattice. The discrete circular mean carries a
// grid-periodic bias of amplitude 1/(2 pi 2^t) whose slope vanishes at the
// quarter-cell offsets; anchoring there keeps the estimate and its gradient
// faithful for the state being followed.
inline PhaseMap aligned_phase_map(const RealVector& spectrum, double e_target,
                                  const ReadoutGrid& grid, double margin = 0.05) {
    const double lo = spectrum.minCoeff();
    const double hi = spectrum.maxCoeff();
    const double slack = 1e-9 * std::max(hi - lo, 1.0);
    if (e_target < lo - slack || e_target > hi + slack)
        throw std::invalid_argument("aligned_phase_map: target outside the spectrum");
    e_target = std::clamp(e_target, lo, hi);
    double span = std::max(hi - lo, 1e-8);
    double e_min = lo;
    const double n = static_cast<double>(grid.size());
    PhaseMap map(e_min, span, margin);
    // The pad that moves the target onto the next quarter-cell anchor solves a
    // linear equation; two passes absorb rounding.
    for (int it = 0; it < 3; ++it) {
        const double scaled = map.phase_of_energy(e_target) * n;
        double anchor_cells = std::floor(scaled) + 0.25;
        if (anchor_cells < scaled - 1e-12) anchor_cells += 1.0;  // pad only raises the phase
        if (std::abs(anchor_cells - scaled) < 1e-11) break;
        const double phi_star = anchor_cells / n;
        const double denom = (1.0 - margin) - phi_star;
        if (denom < 1e-9)
            throw std::invalid_argument(
                "aligned_phase_map: target too close to the upper map edge");
        const double pad = ((phi_star - margin) * span -
                            (e_target - e_min) * (1.0 - 2.0 * margin)) /
                           denom;
        e_min -= pad;  // the upper edge stays fixed
        span += pad;
        map = PhaseMap(e_min, span, margin);
    }
    return map;
}

}  // namespace dqpe
