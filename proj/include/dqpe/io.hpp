// io.hpp — CSV and JSON serialization for distributions, estimates, cost
// reports, and optimization traces.

#pragma once

#include "dqpe/optimizer.hpp"
#include "dqpe/sampling.hpp"
#include "dqpe/statistics.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dqpe::io {

using json = nlohmann::json;

inline void write_distribution_csv(std::ostream& out, const ParentDistribution& dist) {
    out << "index,phase,probability\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int j = 0; j < dist.grid.size(); ++j)
        out << j << "," << dist.grid.phase(j) << "," << dist.probabilities[j] << "\n";
}

inline void write_empirical_csv(std::ostream& out, const EmpiricalDistribution& emp) {
    out << "index,count,frequency\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int j = 0; j < emp.grid.size(); ++j)
        out << j << "," << emp.counts[static_cast<std::size_t>(j)] << ","
            << static_cast<double>(emp.counts[static_cast<std::size_t>(j)]) /
                   static_cast<double>(emp.shots)
            << "\n";
}

inline json empirical_sidecar(const EmpiricalDistribution& emp) {
    return json{{"shots", emp.shots},
                {"seed", emp.seed},
                {"rng", SplitMix64::name},
                {"t", emp.grid.t}};
}

inline json estimate_record(const TrigMoment& moment, const std::string& estimator_name) {
    return json{{"theta_re", moment.value.real()},
                {"theta_im", moment.value.imag()},
                {"magnitude", moment.magnitude()},
                {"mu", moment.mean_direction()},
                {"estimator_name", estimator_name}};
}

inline json cost_report_json(const CostReport& r) {
    return json{{"variance_theta", r.variance_theta},
                {"variance_mu", r.variance_mu},
                {"n_samples_estimate", r.n_samples_estimate},
                {"n_shots_gradient", r.n_shots_gradient},
                {"total_queries", r.total_queries},
                {"inputs",
                 {{"t", r.t},
                  {"epsilon", r.epsilon},
                  {"gate_count", r.gate_count},
                  {"n_parameters", r.n_parameters},
                  {"stencil_one_norm", r.stencil_one_norm},
                  {"theta_magnitude", r.theta_magnitude}}}};
}

inline void write_trace_csv(std::ostream& out, const OptimizationTrace& trace,
                            const chem::Geometry& templ) {
    out << "iteration,energy,gradient_norm";
    const int n_atoms = static_cast<int>(templ.atoms.size());
    for (int i = 0; i < n_atoms; ++i)
        for (int j = i + 1; j < n_atoms; ++j) out << ",bond_" << i << "_" << j;
    out << "\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& rec : trace.records) {
        out << rec.iteration << "," << rec.energy << "," << rec.gradient_norm;
        const auto geom = templ.with_coordinates_angstrom(rec.coordinates);
        for (int i = 0; i < n_atoms; ++i)
            for (int j = i + 1; j < n_atoms; ++j) out << "," << geom.bond_angstrom(i, j);
        out << "\n";
    }
}

inline void write_trace_frames_xyz(std::ostream& out, const OptimizationTrace& trace,
                                   const chem::Geometry& templ) {
    for (const auto& rec : trace.records)
        chem::write_xyz(out, templ.with_coordinates_angstrom(rec.coordinates),
                        "iteration=" + std::to_string(rec.iteration));
}

inline json trace_metadata(const OptimizationTrace& trace, const ModelDiagnostics* diag) {
    json meta{{"termination", trace.termination},
              {"converged", trace.converged},
              {"iterations", trace.records.size()}};
    if (!trace.records.empty()) {
        meta["final_energy"] = trace.final_record().energy;
        meta["final_gradient_norm"] = trace.final_record().gradient_norm;
    }
    if (diag) {
        meta["estimator"] = {{"t", diag->t},
                             {"shots", diag->shots},
                             {"seed", diag->seed},
                             {"rng", SplitMix64::name},
                             {"dominant_overlap", diag->dominant_overlap},
                             {"overlap_warning", diag->overlap_warning}};
    }
    return meta;
}

inline void save_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

inline void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace dqpe::io
