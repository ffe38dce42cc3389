// optimizer.hpp — geometry optimization over the differentiable pipeline:
// gradient descent and BFGS over nuclear coordinates, eigenstate targeting by
// dominant overlap, and the two molecular energy models (estimator-driven and
// exact-diagonalization reference).

#pragma once

#include "dqpe/chem.hpp"
#include "dqpe/gradients.hpp"
#include "dqpe/sampling.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dqpe {

struct EnergyModel {
    std::function<double(const RealVector&)> energy;
    std::function<RealVector(const RealVector&)> gradient;
};

// Mutable run metadata the molecular models stamp on every evaluation.
struct ModelDiagnostics {
    int t = 0;
    std::int64_t shots = 0;
    std::uint64_t seed = 0;
    double dominant_overlap = 1.0;
    bool overlap_warning = false;
};

struct TraceRecord {
    int iteration = 0;
    RealVector coordinates;  // parameter units (angstrom for molecules)
    double energy = 0.0;
    double gradient_norm = 0.0;
    bool line_search_fallback = false;
    double dominant_overlap = 1.0;
    bool overlap_warning = false;
};

struct OptimizationTrace {
    std::vector<TraceRecord> records;
    std::string termination;
    bool converged = false;

    const TraceRecord& final_record() const {
        if (records.empty()) throw std::logic_error("OptimizationTrace: empty trace");
        return records.back();
    }
};

struct OptimizerOptions {
    double step = 0.01;               // gradient-descent step, parameter units
    double gradient_tolerance = 1e-4;
    double max_step = 0.5;            // line-search trust cap, parameter units
    int max_iterations = 200;
    // optional gradient projector, e.g. rigid-body removal: (x, g) -> g'
    std::function<RealVector(const RealVector&, const RealVector&)> project;
    std::shared_ptr<ModelDiagnostics> diagnostics;  // stamped per record when set
};

namespace detail {

inline RealVector projected(const OptimizerOptions& opts, const RealVector& x,
                            const RealVector& g) {
    return opts.project ? opts.project(x, g) : g;
}

inline void stamp(TraceRecord& rec, const OptimizerOptions& opts) {
    if (opts.diagnostics) {
        rec.dominant_overlap = opts.diagnostics->dominant_overlap;
        rec.overlap_warning = opts.diagnostics->overlap_warning;
    }
}

}  // namespace detail

inline OptimizationTrace gradient_descent(const EnergyModel& model, RealVector x,
                                          const OptimizerOptions& opts = {}) {
    if (!(opts.step > 0.0))
        throw std::invalid_argument("gradient_descent: step must be positive");
    OptimizationTrace trace;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        const double e = model.energy(x);
        const RealVector g = detail::projected(opts, x, model.gradient(x));
        TraceRecord rec{iter, x, e, g.norm(), false, 1.0, false};
        detail::stamp(rec, opts);
        trace.records.push_back(std::move(rec));
        if (g.norm() <= opts.gradient_tolerance) {
            trace.converged = true;
            trace.termination = "converged";
            return trace;
        }
        x -= opts.step * g;
    }
    trace.termination = "max_iterations";
    return trace;
}

inline OptimizationTrace bfgs(const EnergyModel& model, RealVector x,
                              const OptimizerOptions& opts = {}) {
    const Eigen::Index n = x.size();
    RealMatrix h_inv = RealMatrix::Identity(n, n);

    OptimizationTrace trace;
    double e = model.energy(x);
    RealVector g = detail::projected(opts, x, model.gradient(x));

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        TraceRecord rec{iter, x, e, g.norm(), false, 1.0, false};
        detail::stamp(rec, opts);
        trace.records.push_back(std::move(rec));
        if (g.norm() <= opts.gradient_tolerance) {
            trace.converged = true;
            trace.termination = "converged";
            return trace;
        }

        RealVector p = -(h_inv * g);
        if (p.dot(g) >= 0.0) {
            h_inv = RealMatrix::Identity(n, n);
            p = -g;
        }

        // cubic/quadratic backtracking with the Armijo condition
        const double slope = g.dot(p);
        const double c1 = 1e-4;
        double alpha = std::min(1.0, opts.max_step / std::max(p.norm(), 1e-30));
        double alpha_prev = 0.0, phi_prev = 0.0;
        bool accepted = false;
        double phi = 0.0;
        for (int trial = 0; trial < 30; ++trial) {
            bool evaluated = true;
            try {
                phi = model.energy(x + alpha * p);
            } catch (const std::exception&) {
                evaluated = false;  // unevaluable trial point: back off
                phi = e + 1.0;
            }
            if (evaluated && phi <= e + c1 * alpha * slope) {
                accepted = true;
                break;
            }
            if (!evaluated) {
                alpha *= 0.3;
                if (alpha < 1e-12) break;
                continue;
            }
            double alpha_next;
            if (trial == 0) {
                // quadratic through phi(0), phi'(0), phi(alpha)
                alpha_next = -slope * alpha * alpha / (2.0 * (phi - e - slope * alpha));
            } else {
                // cubic through the last two trials
                const double r1 = phi - e - slope * alpha;
                const double r2 = phi_prev - e - slope * alpha_prev;
                const double det = alpha * alpha * alpha_prev * alpha_prev *
                                   (alpha - alpha_prev);
                const double ca = (alpha_prev * alpha_prev * r1 - alpha * alpha * r2) / det;
                const double cb =
                    (-alpha_prev * alpha_prev * alpha_prev * r1 + alpha * alpha * alpha * r2) /
                    det;
                const double disc = cb * cb - 3.0 * ca * slope;
                alpha_next = ca != 0.0 && disc >= 0.0
                                 ? (-cb + std::sqrt(disc)) / (3.0 * ca)
                                 : 0.5 * alpha;
            }
            alpha_prev = alpha;
            phi_prev = phi;
            alpha = std::clamp(alpha_next, 0.1 * alpha, 0.5 * alpha);
            if (alpha < 1e-12) break;
        }

        RealVector x_new;
        if (accepted) {
            x_new = x + alpha * p;
        } else {
            // steepest-descent fallback step, logged on the next record
            x_new = x - std::min(opts.step, 0.01) * g / std::max(g.norm(), 1e-30);
            phi = model.energy(x_new);
            trace.records.back().line_search_fallback = true;
        }

        const RealVector g_new = detail::projected(opts, x_new, model.gradient(x_new));
        const RealVector s = x_new - x;
        const RealVector y = g_new - g;
        const double ys = y.dot(s);
        if (ys > 1e-10 * y.norm() * s.norm()) {
            const double rho = 1.0 / ys;
            const RealMatrix left =
                RealMatrix::Identity(n, n) - rho * s * y.transpose();
            h_inv = left * h_inv * left.transpose() + rho * s * s.transpose();
        }
        x = x_new;
        e = phi;
        g = g_new;
    }
    trace.termination = "max_iterations";
    return trace;
}

// Projector removing rigid translations and rotations from a molecular
// gradient; prevents center-of-mass and orientation drift.
inline RealVector remove_rigid_body(const RealVector& x_angstrom, const RealVector& grad) {
    const int n_atoms = static_cast<int>(x_angstrom.size()) / 3;
    std::vector<RealVector> basis;
    for (int k = 0; k < 3; ++k) {
        RealVector t = RealVector::Zero(x_angstrom.size());
        for (int a = 0; a < n_atoms; ++a) t[3 * a + k] = 1.0;
        basis.push_back(std::move(t));
    }
    Eigen::Vector3d com = Eigen::Vector3d::Zero();
    for (int a = 0; a < n_atoms; ++a)
        com += Eigen::Vector3d(x_angstrom[3 * a], x_angstrom[3 * a + 1], x_angstrom[3 * a + 2]);
    com /= n_atoms;
    for (int k = 0; k < 3; ++k) {
        Eigen::Vector3d axis = Eigen::Vector3d::Zero();
        axis[k] = 1.0;
        RealVector r = RealVector::Zero(x_angstrom.size());
        for (int a = 0; a < n_atoms; ++a) {
            const Eigen::Vector3d rel(x_angstrom[3 * a] - com[0], x_angstrom[3 * a + 1] - com[1],
                                      x_angstrom[3 * a + 2] - com[2]);
            const Eigen::Vector3d v = axis.cross(rel);
            for (int c = 0; c < 3; ++c) r[3 * a + c] = v[c];
        }
        basis.push_back(std::move(r));
    }

    RealVector g = grad;
    std::vector<RealVector> ortho;
    for (auto& v : basis) {
        RealVector u = v;
        for (const auto& o : ortho) u -= o.dot(u) * o;
        const double norm = u.norm();
        if (norm < 1e-8) continue;  // linear molecules drop one rotation
        u /= norm;
        ortho.push_back(u);
    }
    for (const auto& o : ortho) g -= o.dot(g) * o;
    return g;
}

// Electronic state specification: a determinant or a weighted combination.
struct StateSpec {
    std::vector<std::pair<std::string, double>> determinants;

    static StateSpec single(std::string bits) { return {{{std::move(bits), 1.0}}}; }

    ComplexVector build(int n_qubits) const { return chem::csf_state(determinants, n_qubits); }

    int n_electrons() const {
        if (determinants.empty()) throw std::invalid_argument("StateSpec: empty");
        int count = -1;
        for (const auto& [bits, w] : determinants) {
            int ones = 0;
            for (char c : bits) ones += c == '1';
            if (count < 0) count = ones;
            if (ones != count)
                throw std::invalid_argument(
                    "StateSpec: determinants with mixed electron counts");
        }
        return count;
    }
};

struct TargetState {
    ComplexVector psi;
    double dominant_overlap = 0.0;  // aggregated over a degenerate cluster
    int dominant_index = -1;
    bool warned = false;
};

// QPE input state plus its eigenstate-overlap diagnostics. The estimator
// pipeline tracks the dominant peak automatically; this guard only reports
// how trustworthy that lock is. Cluster-aggregated overlaps keep exactly
// degenerate multiplets (spin components) from diluting the check.
inline TargetState excited_state_target(const EigenSystem& eig, ComplexVector psi,
                                        double gap_tol = 1e-9) {
    TargetState out;
    out.psi = std::move(psi);
    const RealVector w = overlaps(out.psi, eig);
    const auto clusters = degenerate_clusters(eig.eigenvalues, gap_tol);
    double best = -1.0;
    for (const auto& [begin, end] : clusters) {
        double total = 0.0;
        int arg = begin;
        for (int u = begin; u < end; ++u) {
            total += w[u];
            if (w[u] > w[arg]) arg = u;
        }
        if (total > best) {
            best = total;
            out.dominant_index = arg;
        }
    }
    out.dominant_overlap = best;
    if (best < 0.1)
        throw std::invalid_argument(
            "excited_state_target: specified state has overlap " + std::to_string(best) +
            " (< 0.1) with every eigenstate cluster");
    out.warned = best < 0.5;
    return out;
}

inline TargetState excited_state_target(const EigenSystem& eig, const StateSpec& spec,
                                        int n_qubits, double gap_tol = 1e-9) {
    return excited_state_target(eig, spec.build(n_qubits), gap_tol);
}

struct QpeModelOptions {
    int t = 13;
    double softmax_temperature = 0.0035;
    double boxcar_steepness = 1000.0;
    int window_strings = 8;
    std::int64_t shots = 0;  // 0 = exact parent distribution
    std::uint64_t seed = 1;
    double map_margin = 0.05;
    double degeneracy_gap = 1e-9;
};

namespace detail {

inline std::uint64_t coordinate_seed(std::uint64_t base, const RealVector& x) {
    SplitMix64 h(base);
    std::uint64_t acc = h.next();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(double));
        const double v = x[i];
        std::memcpy(&bits, &v, sizeof(bits));
        acc = SplitMix64(acc ^ bits).next();
    }
    return acc;
}

}  // namespace detail

// Highest full-spectrum eigenstate living in the given particle-number
// sector, identified by the number-operator expectation of its eigenvector.
inline int sector_upper_index(const EigenSystem& eig, int n_electrons) {
    int best = -1;
    for (int u = 0; u < eig.dimension(); ++u) {
        double n_exp = 0.0;
        for (Eigen::Index i = 0; i < eig.eigenvectors.rows(); ++i)
            n_exp += std::norm(eig.eigenvectors(i, u)) *
                     std::popcount(static_cast<std::uint32_t>(i));
        if (std::abs(n_exp - n_electrons) < 1e-6) best = u;
    }
    if (best < 0)
        throw std::runtime_error("sector_upper_index: empty particle-number sector");
    return best;
}

struct MolecularQpeContext {
    chem::MolecularSystem system;
    EigenSystem eig;
    TargetState target;
    PhaseMap map;
    int upper_index;

    MolecularQpeContext(const chem::Geometry& geom, const StateSpec& spec,
                        const ReadoutGrid& grid, double margin, double gap_tol)
        : system(chem::build_molecular_system(geom)),
          eig(eigendecompose(system.qubit.matrix)),
          target(excited_state_target(eig, spec, system.qubit.n_qubits, gap_tol)),
          map(aligned_phase_map(chem::sector_eigenvalues(system.qubit, spec.n_electrons()),
                                eig.eigenvalues[target.dominant_index], grid, margin)),
          upper_index(sector_upper_index(eig, spec.n_electrons())) {}
};

// Estimator-driven molecular energy model: total energy = phase-decoded
// electronic estimate + nuclear repulsion. The phase map is rebuilt from the
// state's particle-number sector at each geometry and held fixed within one
// evaluation, which is also the frozen-map convention of the gradient chain.
inline EnergyModel make_qpe_energy_model(const chem::Geometry& templ, const StateSpec& spec,
                                         const QpeModelOptions& opts,
                                         std::shared_ptr<ModelDiagnostics> diagnostics = {}) {
    const ReadoutGrid grid(opts.t);
    const GceConfig config = GceConfig::for_grid(grid, opts.window_strings,
                                                 opts.softmax_temperature,
                                                 opts.boxcar_steepness);
    if (diagnostics) {
        diagnostics->t = opts.t;
        diagnostics->shots = opts.shots;
        diagnostics->seed = opts.seed;
    }

    const auto distribution_at = [=](const MolecularQpeContext& ctx,
                                     const RealVector& x) {
        const SpectralView view = spectral_view(ctx.eig, ctx.target.psi, ctx.map);
        ParentDistribution parent = spectral_distribution(view.phases, view.weights, grid);
        if (opts.shots > 0) {
            const auto emp = sample(parent, opts.shots,
                                    detail::coordinate_seed(opts.seed, x));
            parent = frequencies(emp);
        }
        return parent;
    };

    const auto note = [diagnostics](const MolecularQpeContext& ctx) {
        if (diagnostics) {
            diagnostics->dominant_overlap = ctx.target.dominant_overlap;
            diagnostics->overlap_warning = ctx.target.warned;
        }
    };

    EnergyModel model;
    model.energy = [=](const RealVector& x) {
        const auto geom = templ.with_coordinates_angstrom(x);
        const MolecularQpeContext ctx(geom, spec, grid, opts.map_margin,
                                              opts.degeneracy_gap);
        note(ctx);
        const double mu = gce_moment(distribution_at(ctx, x), config).mean_direction();
        return ctx.map.energy_of_phase(mu) + geom.nuclear_repulsion();
    };
    model.gradient = [=](const RealVector& x) {
        const auto geom = templ.with_coordinates_angstrom(x);
        const MolecularQpeContext ctx(geom, spec, grid, opts.map_margin,
                                              opts.degeneracy_gap);
        note(ctx);
        const ParametrizedHamiltonian ham = chem::molecular_hamiltonian(templ);

        EstimatorGradientOptions gopts;
        gopts.degeneracy_gap = opts.degeneracy_gap;
        gopts.differentiate_map = true;
        gopts.target_index = ctx.target.dominant_index;
        gopts.upper_edge_index = ctx.upper_index;
        ParentDistribution sampled = distribution_at(ctx, x);
        if (opts.shots > 0) gopts.empirical = &sampled;

        const RealVector elec =
            estimator_gradient(ham, x, ctx.target.psi, ctx.map, grid, config, gopts);
        return RealVector(elec + geom.nuclear_repulsion_gradient());
    };
    return model;
}

// Reference model: exact diagonalization for the energy, the eigenstate
// expectation of dH/dx for the gradient. Tracks the same dominant-overlap
// cluster as the estimator model.
inline EnergyModel make_exact_energy_model(const chem::Geometry& templ, const StateSpec& spec,
                                           double gap_tol = 1e-9,
                                           std::shared_ptr<ModelDiagnostics> diagnostics = {}) {
    EnergyModel model;
    model.energy = [=](const RealVector& x) {
        const auto geom = templ.with_coordinates_angstrom(x);
        const auto sys = chem::build_molecular_system(geom);
        const auto eig = eigendecompose(sys.qubit.matrix);
        const auto target = excited_state_target(eig, spec, sys.qubit.n_qubits, gap_tol);
        if (diagnostics) {
            diagnostics->dominant_overlap = target.dominant_overlap;
            diagnostics->overlap_warning = target.warned;
        }
        return eig.eigenvalues[target.dominant_index] + geom.nuclear_repulsion();
    };
    model.gradient = [=](const RealVector& x) {
        const auto geom = templ.with_coordinates_angstrom(x);
        const auto sys = chem::build_molecular_system(geom);
        const auto eig = eigendecompose(sys.qubit.matrix);
        const auto target = excited_state_target(eig, spec, sys.qubit.n_qubits, gap_tol);
        const ParametrizedHamiltonian ham = chem::molecular_hamiltonian(templ);
        return RealVector(
            hellmann_feynman_oracle(ham, x, target.dominant_index, gap_tol) +
            geom.nuclear_repulsion_gradient());
    };
    return model;
}

}  // namespace dqpe
