// dqpe — command-line front end: exact readout distributions, phase/energy
// estimation, cost reports, gradients, geometry optimization, and the named
// reproduction studies. Outputs are CSV/JSON; every run writes its resolved
// configuration beside its artifacts.

#include "dqpe/io.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace dqpe;
using dqpe::io::json;

namespace {

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // molecule source (choose one)
    std::string xyz;
    std::string fcidump;
    std::string phases;  // "0.31:0.7,0.52:0.3"

    int charge = 0;
    bool charge_set = false;
    int multiplicity = 1;
    std::string state = "hf";  // determinant bits, or "bits:w,bits:w" combinations

    int t = 13;
    std::int64_t shots = 0;
    std::uint64_t seed = 1;
    std::string estimator = "gce";
    double temperature = 0.0035;
    double steepness = 1000.0;
    double window_strings = 8.0;
    double margin = 0.05;

    // optimize
    std::string method = "bfgs";
    double step = 0.01;
    double tolerance = 1e-4;
    int max_iterations = 200;

    // grad
    std::string grad_method = "smooth";
    int fd_degree = 1;
    double fd_step = 1e-3;

    // stats
    double epsilon = 1e-3;
    std::int64_t gate_count = 100;
    std::int64_t n_parameters = 9;
    double stencil_one_norm = 0.0;
    double theta_magnitude = 0.0;
    double mismatch = 0.0;

    std::string out = "runs";
    std::string study;
};

json config_json(const RunConfig& c) {
    return json{{"xyz", c.xyz},
                {"fcidump", c.fcidump},
                {"phases", c.phases},
                {"charge", c.charge},
                {"multiplicity", c.multiplicity},
                {"state", c.state},
                {"t", c.t},
                {"shots", c.shots},
                {"seed", c.seed},
                {"estimator", c.estimator},
                {"temperature", c.temperature},
                {"steepness", c.steepness},
                {"window_strings", c.window_strings},
                {"margin", c.margin},
                {"method", c.method},
                {"step", c.step},
                {"tolerance", c.tolerance},
                {"max_iterations", c.max_iterations},
                {"grad_method", c.grad_method},
                {"fd_degree", c.fd_degree},
                {"fd_step", c.fd_step},
                {"epsilon", c.epsilon},
                {"gate_count", c.gate_count},
                {"n_parameters", c.n_parameters},
                {"stencil_one_norm", c.stencil_one_norm},
                {"theta_magnitude", c.theta_magnitude},
                {"mismatch", c.mismatch},
                {"out", c.out},
                {"study", c.study},
                {"rng", SplitMix64::name}};
}

void apply_config_file(RunConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    const auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("xyz", c.xyz);
    get("fcidump", c.fcidump);
    get("phases", c.phases);
    if (j.contains("charge")) {
        c.charge = j.at("charge").get<int>();
        c.charge_set = true;
    }
    get("multiplicity", c.multiplicity);
    get("state", c.state);
    get("t", c.t);
    get("shots", c.shots);
    get("seed", c.seed);
    get("estimator", c.estimator);
    get("temperature", c.temperature);
    get("steepness", c.steepness);
    get("window_strings", c.window_strings);
    get("margin", c.margin);
    get("method", c.method);
    get("step", c.step);
    get("tolerance", c.tolerance);
    get("max_iterations", c.max_iterations);
    get("grad_method", c.grad_method);
    get("fd_degree", c.fd_degree);
    get("fd_step", c.fd_step);
    get("epsilon", c.epsilon);
    get("gate_count", c.gate_count);
    get("n_parameters", c.n_parameters);
    get("stencil_one_norm", c.stencil_one_norm);
    get("theta_magnitude", c.theta_magnitude);
    get("mismatch", c.mismatch);
    get("out", c.out);
    get("study", c.study);
}

void validate_common(const RunConfig& c) {
    if (c.t < 1 || c.t > 24) throw ConfigError("t must lie in [1, 24]");
    if (c.shots < 0) throw ConfigError("shots must be >= 0 (0 = exact distribution)");
    if (!(c.margin >= 0.0 && c.margin < 0.5)) throw ConfigError("margin must lie in [0, 0.5)");
    if (c.estimator != "gce" && c.estimator != "majority" && c.estimator != "expectation")
        throw ConfigError("estimator must be gce | majority | expectation");
    const int sources = !c.xyz.empty() + !c.fcidump.empty() + !c.phases.empty();
    if (sources > 1) throw ConfigError("choose a single molecule source");
}

fs::path prepare_outdir(const RunConfig& c, const std::string& name) {
    fs::path dir = fs::path(c.out) / name;
    fs::create_directories(dir);
    io::save_json((dir / "resolved_config.json").string(), config_json(c));
    return dir;
}

StateSpec parse_state(const std::string& text, int n_electrons, int n_qubits) {
    if (text == "hf") return StateSpec::single(chem::hf_determinant(n_electrons, n_qubits));
    StateSpec spec;
    std::istringstream terms(text);
    std::string term;
    while (std::getline(terms, term, ',')) {
        const auto colon = term.find(':');
        if (colon == std::string::npos) {
            spec.determinants.emplace_back(term, 1.0);
        } else {
            spec.determinants.emplace_back(term.substr(0, colon),
                                           std::stod(term.substr(colon + 1)));
        }
    }
    if (spec.determinants.empty()) throw ConfigError("empty state specification");
    return spec;
}

std::pair<RealVector, RealVector> parse_phases(const std::string& text) {
    std::vector<double> phases, weights;
    std::istringstream terms(text);
    std::string term;
    while (std::getline(terms, term, ',')) {
        const auto colon = term.find(':');
        if (colon == std::string::npos) throw ConfigError("phases need phi:weight pairs");
        phases.push_back(std::stod(term.substr(0, colon)));
        weights.push_back(std::stod(term.substr(colon + 1)));
    }
    if (phases.empty()) throw ConfigError("empty phase list");
    RealVector p(phases.size()), w(weights.size());
    for (std::size_t i = 0; i < phases.size(); ++i) {
        p[static_cast<Eigen::Index>(i)] = phases[i];
        w[static_cast<Eigen::Index>(i)] = weights[i];
    }
    return {p, w};
}

chem::Geometry load_geometry(const RunConfig& c) {
    std::ifstream in(c.xyz);
    if (!in) throw ConfigError("cannot open XYZ file " + c.xyz);
    auto geom = chem::read_xyz(in);
    if (c.charge_set) geom.charge = c.charge;
    if (c.multiplicity != 1) geom.multiplicity = c.multiplicity;
    return geom;
}

GceConfig gce_config(const RunConfig& c) {
    return GceConfig(c.temperature, c.steepness,
                     c.window_strings / static_cast<double>(1 << c.t));
}

QpeModelOptions model_options(const RunConfig& c) {
    QpeModelOptions opts;
    opts.t = c.t;
    opts.softmax_temperature = c.temperature;
    opts.boxcar_steepness = c.steepness;
    opts.window_strings = static_cast<int>(c.window_strings);
    opts.shots = c.shots;
    opts.seed = c.seed;
    opts.map_margin = c.margin;
    return opts;
}

// One prepared estimation problem: a parent distribution, optionally a
// sampled one, and (for Hamiltonian-backed sources) the map and eigensystem.
struct Prepared {
    ParentDistribution parent;
    std::optional<EmpiricalDistribution> empirical;
    std::optional<PhaseMap> map;
    std::optional<double> nuclear_repulsion;
    std::optional<double> dominant_overlap;
};

Prepared prepare_from_spectrum(const chem::QubitHamiltonian& qubit, const StateSpec& spec,
                               const RunConfig& c, double e_nuc) {
    const ReadoutGrid grid(c.t);
    const auto eig = eigendecompose(qubit.matrix);
    const auto target = excited_state_target(eig, spec, qubit.n_qubits);
    const auto map =
        aligned_phase_map(chem::sector_eigenvalues(qubit, spec.n_electrons()),
                          eig.eigenvalues[target.dominant_index], grid, c.margin);
    const auto view = spectral_view(eig, target.psi, map);
    Prepared out{spectral_distribution(view.phases, view.weights, grid),
                 std::nullopt, map, e_nuc, target.dominant_overlap};
    if (c.shots > 0) out.empirical = sample(out.parent, c.shots, c.seed);
    return out;
}

Prepared prepare(const RunConfig& c) {
    if (!c.phases.empty()) {
        const auto [p, w] = parse_phases(c.phases);
        const ReadoutGrid grid(c.t);
        Prepared out{spectral_distribution(p, w, grid), std::nullopt, std::nullopt,
                     std::nullopt, std::nullopt};
        if (c.shots > 0) out.empirical = sample(out.parent, c.shots, c.seed);
        return out;
    }
    if (!c.fcidump.empty()) {
        const auto sq = chem::fcidump_read_file(c.fcidump);
        const auto qubit = chem::jordan_wigner(sq);
        const int n_elec = sq.n_electrons_hint >= 0 ? sq.n_electrons_hint : 0;
        const auto spec = parse_state(c.state, n_elec, qubit.n_qubits);
        return prepare_from_spectrum(qubit, spec, c, 0.0);
    }
    if (!c.xyz.empty()) {
        const auto geom = load_geometry(c);
        const auto sys = chem::build_molecular_system(geom);
        const auto spec = parse_state(c.state, geom.n_electrons(), sys.qubit.n_qubits);
        return prepare_from_spectrum(sys.qubit, spec, c, geom.nuclear_repulsion());
    }
    throw ConfigError("no molecule source: pass --xyz, --fcidump, or --phases");
}

// bounded deterministic parallel map; results land by index
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = std::max(
        1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                               static_cast<unsigned>(n)));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- commands

int cmd_distribution(const RunConfig& c) {
    const auto dir = prepare_outdir(c, "distribution");
    const auto prep = prepare(c);
    {
        std::ofstream out(dir / "parent.csv");
        io::write_distribution_csv(out, prep.parent);
    }
    if (prep.empirical) {
        std::ofstream out(dir / "empirical.csv");
        io::write_empirical_csv(out, *prep.empirical);
        io::save_json((dir / "empirical.json").string(),
                      io::empirical_sidecar(*prep.empirical));
    }
    std::cout << "wrote " << (dir / "parent.csv").string() << "\n";
    return 0;
}

int cmd_estimate(const RunConfig& c) {
    const auto dir = prepare_outdir(c, "estimate");
    const auto prep = prepare(c);
    const ParentDistribution dist =
        prep.empirical ? frequencies(*prep.empirical) : prep.parent;

    json record;
    double mu = 0.0;
    if (c.estimator == "majority") {
        mu = majority_rule(dist);
        record = json{{"mu", mu}, {"estimator_name", "majority"}};
    } else if (c.estimator == "expectation") {
        const auto m = expectation_moment(dist);
        mu = m.mean_direction();
        record = io::estimate_record(m, "expectation");
    } else {
        const auto m = gce_moment(dist, gce_config(c));
        mu = m.mean_direction();
        record = io::estimate_record(m, "gce");
    }

    json out{{"estimate", record}};
    if (prep.map) {
        const double e_elec = prep.map->energy_of_phase(mu);
        out["electronic_energy"] = e_elec;
        out["map"] = {{"e_min", prep.map->e_min},
                      {"delta_e", prep.map->delta_e},
                      {"margin", prep.map->margin}};
        if (prep.nuclear_repulsion) {
            out["nuclear_repulsion"] = *prep.nuclear_repulsion;
            out["total_energy"] = e_elec + *prep.nuclear_repulsion;
        }
        if (prep.dominant_overlap) out["dominant_overlap"] = *prep.dominant_overlap;
    }
    io::save_json((dir / "estimate.json").string(), out);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_stats(const RunConfig& c) {
    const auto dir = prepare_outdir(c, "stats");
    double magnitude = c.theta_magnitude;
    if (magnitude <= 0.0) {
        const double h = c.window_strings / static_cast<double>(1 << c.t);
        magnitude = std::abs(theta_closed_form(c.t, c.mismatch, h, 1.0));
    }
    double norm1 = c.stencil_one_norm;
    if (norm1 <= 0.0) norm1 = fd_stencil(c.fd_degree, c.fd_step).one_norm;

    const auto report =
        make_cost_report(c.t, c.epsilon, c.gate_count, c.n_parameters, norm1, magnitude);
    const json j = io::cost_report_json(report);
    io::save_json((dir / "cost_report.json").string(), j);

    std::cout << "query cost = gate_count x t x n_parameters x n_shots_gradient\n"
              << "           = " << report.gate_count << " x " << report.t << " x "
              << report.n_parameters << " x " << report.n_shots_gradient << " = "
              << report.total_queries << "\n"
              << "variance_theta = " << report.variance_theta
              << ", variance_mu = " << report.variance_mu
              << ", n_samples_estimate = " << report.n_samples_estimate << "\n";
    return 0;
}

int cmd_grad(const RunConfig& c) {
    if (c.xyz.empty())
        throw ConfigError("grad needs an --xyz source (gradients need a geometry)");
    const auto dir = prepare_outdir(c, "grad");
    const auto geom = load_geometry(c);
    const auto sys = chem::build_molecular_system(geom);
    const auto spec = parse_state(c.state, geom.n_electrons(), sys.qubit.n_qubits);
    const RealVector x = geom.coordinates_angstrom();

    const auto diag = std::make_shared<ModelDiagnostics>();
    const auto oracle_model = make_exact_energy_model(geom, spec);
    const RealVector oracle = oracle_model.gradient(x);

    RealVector values;
    json extra;
    if (c.grad_method == "smooth") {
        const auto model = make_qpe_energy_model(geom, spec, model_options(c), diag);
        values = model.gradient(x);
    } else if (c.grad_method == "fd") {
        const auto model = make_qpe_energy_model(geom, spec, model_options(c), diag);
        const auto st = fd_stencil(c.fd_degree, c.fd_step);
        values = RealVector(x.size());
        for (Eigen::Index d = 0; d < x.size(); ++d) {
            RealVector dir_vec = RealVector::Zero(x.size());
            dir_vec[d] = 1.0;
            values[d] = fd_gradient(model.energy, st, x, dir_vec);
        }
        extra["stencil"] = {{"degree", 2 * c.fd_degree},
                            {"step", c.fd_step},
                            {"one_norm", st.one_norm}};
    } else if (c.grad_method == "hellmann-feynman") {
        values = oracle;
    } else {
        throw ConfigError("grad_method must be smooth | fd | hellmann-feynman");
    }

    json j{{"method", c.grad_method},
           {"units", "hartree_per_angstrom"},
           {"values", std::vector<double>(values.data(), values.data() + values.size())},
           {"residuals",
            {{"vs_hellmann_feynman", (values - oracle).norm()},
             {"oracle_norm", oracle.norm()}}}};
    if (!extra.empty()) j.update(extra);
    if (c.grad_method != "hellmann-feynman")
        j["estimator"] = {{"t", diag->t},
                          {"shots", diag->shots},
                          {"seed", diag->seed},
                          {"dominant_overlap", diag->dominant_overlap}};
    io::save_json((dir / "gradient.json").string(), j);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_optimize(const RunConfig& c) {
    if (c.xyz.empty())
        throw ConfigError("optimize needs an --xyz source");
    const auto dir = prepare_outdir(c, "optimize");
    const auto geom = load_geometry(c);
    {
        const auto probe = chem::build_molecular_system(geom);
        (void)probe;
    }
    const auto sys = chem::build_molecular_system(geom);
    const auto spec = parse_state(c.state, geom.n_electrons(), sys.qubit.n_qubits);

    const auto diag = std::make_shared<ModelDiagnostics>();
    const auto model = make_qpe_energy_model(geom, spec, model_options(c), diag);

    OptimizerOptions opts;
    opts.step = c.step;
    opts.gradient_tolerance = c.tolerance;
    opts.max_iterations = c.max_iterations;
    opts.project = remove_rigid_body;
    opts.diagnostics = diag;

    OptimizationTrace trace;
    if (c.method == "gd")
        trace = gradient_descent(model, geom.coordinates_angstrom(), opts);
    else if (c.method == "bfgs")
        trace = bfgs(model, geom.coordinates_angstrom(), opts);
    else
        throw ConfigError("method must be gd | bfgs");

    {
        std::ofstream out(dir / "trace.csv");
        io::write_trace_csv(out, trace, geom);
    }
    {
        std::ofstream out(dir / "frames.xyz");
        io::write_trace_frames_xyz(out, trace, geom);
    }
    io::save_json((dir / "trace.json").string(), io::trace_metadata(trace, diag.get()));

    const auto final_geom = geom.with_coordinates_angstrom(trace.final_record().coordinates);
    std::ofstream out(dir / "final.xyz");
    chem::write_xyz(out, final_geom, "termination=" + trace.termination);
    std::cout << "termination: " << trace.termination
              << ", final energy " << trace.final_record().energy << " hartree, wrote "
              << (dir / "trace.csv").string() << "\n";
    return trace.converged ? 0 : 3;
}

// ---------------------------------------------------------------- studies

double circular_err(double a, double b) { return std::abs(circular_delta(a - b)); }

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

int study_fig4(const RunConfig& c, const fs::path& dir) {
    struct Cell {
        int t;
        int window;
        double gce_err, mr_err;
    };
    std::vector<int> ts{8, 9, 10, 11, 12, 13, 14};
    std::vector<int> windows{4, 8, 16, 32};
    std::vector<Cell> cells;
    for (int t : ts)
        for (int w : windows) cells.push_back({t, w, 0.0, 0.0});

    parallel_for(cells.size(), [&](std::size_t i) {
        auto& cell = cells[i];
        const ReadoutGrid grid(cell.t);
        const auto cfg = GceConfig::for_grid(grid, cell.window, c.temperature, c.steepness);
        SplitMix64 rng(c.seed + 1000 * static_cast<std::uint64_t>(i));
        std::vector<double> eg, em;
        for (int rep = 0; rep < 100; ++rep) {
            const double phi = rng.uniform();
            RealVector p(1), w1(1);
            p << phi;
            w1 << 1.0;
            const auto dist = spectral_distribution(p, w1, grid);
            eg.push_back(circular_err(gce_moment(dist, cfg).mean_direction(), phi));
            em.push_back(circular_err(majority_rule(dist), phi));
        }
        cell.gce_err = median_of(eg);
        cell.mr_err = median_of(em);
    });

    std::ofstream out(dir / "fig4_accuracy.csv");
    out << "t,window,gce_error,mr_error\n";
    out << std::setprecision(12);
    for (const auto& cell : cells)
        out << cell.t << "," << cell.window << "," << cell.gce_err << "," << cell.mr_err
            << "\n";
    std::cout << "wrote " << (dir / "fig4_accuracy.csv").string() << "\n";
    return 0;
}

int study_fig5(const RunConfig& c, const fs::path& dir) {
    std::ofstream out(dir / "fig5_cost.csv");
    out << "t,h,overlap,dphi,theta_magnitude,variance_mu,n_samples\n";
    out << std::setprecision(12);
    for (int t : {10, 11, 12, 13, 14}) {
        const double n = 1 << t;
        for (int strings : {2, 4, 8, 16, 32, 64}) {
            const double h = strings / n;
            for (double overlap : {0.5, 0.8, 1.0}) {
                const double dphi = 1.0 / n;
                const Complex theta = theta_closed_form(t, dphi, h, overlap);
                const double mag = std::abs(theta);
                if (mag < 1e-12) continue;
                const double var = variance_mu(TrigMoment{theta});
                out << t << "," << h << "," << overlap << "," << dphi << "," << mag << ","
                    << var << "," << chebyshev_samples(var, c.epsilon) << "\n";
            }
        }
    }
    std::cout << "wrote " << (dir / "fig5_cost.csv").string() << "\n";
    return 0;
}

int study_fig8(const RunConfig& c, const fs::path& dir) {
    const auto geom = chem::default_h3plus_ground_start();
    const auto spec = StateSpec::single("110000");
    RunConfig cc = c;
    cc.shots = 0;
    const auto model = make_qpe_energy_model(geom, spec, model_options(cc));
    const auto oracle_model = make_exact_energy_model(geom, spec);
    const RealVector x = geom.coordinates_angstrom();
    const RealVector oracle = oracle_model.gradient(x);
    const RealVector smooth = model.gradient(x);

    // majority-rule total-energy pipeline as a black box
    const ReadoutGrid grid(cc.t);
    const auto majority_energy = [&](const RealVector& xx) {
        const auto g = geom.with_coordinates_angstrom(xx);
        const MolecularQpeContext ctx(g, spec, grid, cc.margin, 1e-9);
        const auto view = spectral_view(ctx.eig, ctx.target.psi, ctx.map);
        const auto dist = spectral_distribution(view.phases, view.weights, grid);
        return ctx.map.energy_of_phase(majority_rule(dist)) + g.nuclear_repulsion();
    };

    std::ofstream out(dir / "fig8_fd.csv");
    out << "delta_x,mr_fd_norm,mr_fd_error,smooth_norm,smooth_error,oracle_norm\n";
    out << std::setprecision(12);
    for (double dx : {1e-5, 1e-4, 1e-3, 1e-2, 5e-2, 1e-1, 2e-1}) {
        const auto st = fd_stencil(1, dx);
        RealVector mr_fd(x.size());
        for (Eigen::Index d = 0; d < x.size(); ++d) {
            RealVector dir_vec = RealVector::Zero(x.size());
            dir_vec[d] = 1.0;
            mr_fd[d] = fd_gradient(majority_energy, st, x, dir_vec);
        }
        out << dx << "," << mr_fd.norm() << "," << (mr_fd - oracle).norm() << ","
            << smooth.norm() << "," << (smooth - oracle).norm() << "," << oracle.norm()
            << "\n";
    }
    std::cout << "wrote " << (dir / "fig8_fd.csv").string() << "\n";
    return 0;
}

int study_fig9(const RunConfig& c, const fs::path& dir) {
    const auto geom = chem::default_h3plus_ground_start();
    const auto spec = StateSpec::single("110000");
    RunConfig cc = c;
    cc.shots = 0;
    const auto diag = std::make_shared<ModelDiagnostics>();
    const auto model = make_qpe_energy_model(geom, spec, model_options(cc), diag);

    OptimizerOptions opts;
    opts.step = 0.01;
    opts.gradient_tolerance = c.tolerance;
    opts.max_iterations = c.max_iterations;
    opts.project = remove_rigid_body;
    opts.diagnostics = diag;
    const auto trace = gradient_descent(model, geom.coordinates_angstrom(), opts);

    const auto oracle_model = make_exact_energy_model(geom, spec);
    OptimizerOptions oopts = opts;
    oopts.gradient_tolerance = 1e-6;
    const auto oracle_trace = bfgs(oracle_model, geom.coordinates_angstrom(), oopts);

    {
        std::ofstream out(dir / "fig9_h3_gs_trace.csv");
        io::write_trace_csv(out, trace, geom);
    }
    json meta = io::trace_metadata(trace, diag.get());
    meta["oracle"] = io::trace_metadata(oracle_trace, nullptr);
    io::save_json((dir / "fig9_h3_gs.json").string(), meta);
    std::cout << "wrote " << (dir / "fig9_h3_gs_trace.csv").string() << "\n";
    return trace.converged || trace.termination == "max_iterations" ? 0 : 3;
}

int study_fig10(const RunConfig& c, const fs::path& dir) {
    const auto geom = chem::default_h3plus_triplet_start();
    const auto spec = StateSpec::single(chem::default_triplet_determinant());
    RunConfig cc = c;
    cc.shots = 0;
    const auto diag = std::make_shared<ModelDiagnostics>();
    const auto model = make_qpe_energy_model(geom, spec, model_options(cc), diag);

    OptimizerOptions opts;
    opts.gradient_tolerance = c.tolerance;
    opts.max_iterations = c.max_iterations;
    opts.project = remove_rigid_body;
    opts.diagnostics = diag;
    const auto trace = bfgs(model, geom.coordinates_angstrom(), opts);

    const auto oracle_model = make_exact_energy_model(geom, spec);
    OptimizerOptions oopts = opts;
    oopts.gradient_tolerance = 1e-6;
    const auto oracle_trace = bfgs(oracle_model, geom.coordinates_angstrom(), oopts);

    {
        std::ofstream out(dir / "fig10_h3_triplet_trace.csv");
        io::write_trace_csv(out, trace, geom);
    }
    json meta = io::trace_metadata(trace, diag.get());
    meta["oracle"] = io::trace_metadata(oracle_trace, nullptr);
    io::save_json((dir / "fig10_h3_triplet.json").string(), meta);
    std::cout << "wrote " << (dir / "fig10_h3_triplet_trace.csv").string() << "\n";
    return 0;
}

int study_appb(const RunConfig& c, const fs::path& dir) {
    const auto geom = chem::default_h3plus_ground_start();
    const auto spec = StateSpec::single("110000");

    // oracle reference geometry
    const auto oracle_model = make_exact_energy_model(geom, spec);
    OptimizerOptions oopts;
    oopts.gradient_tolerance = 1e-6;
    oopts.project = remove_rigid_body;
    const auto oracle_trace = bfgs(oracle_model, geom.coordinates_angstrom(), oopts);
    const auto oracle_geom =
        geom.with_coordinates_angstrom(oracle_trace.final_record().coordinates);
    const double oracle_energy = oracle_trace.final_record().energy;

    struct Cell {
        int t;
        std::int64_t shots;
        std::uint64_t seed;
        double bond_err = 0.0, energy_err = 0.0;
        bool prescribed = false;
    };
    std::vector<Cell> cells;
    for (int t : {11, 13}) {
        // prescribed count from the exact start-geometry moment
        const ReadoutGrid grid(t);
        RunConfig ct = c;
        ct.t = t;
        ct.shots = 0;
        const MolecularQpeContext ctx(geom, spec, grid, c.margin, 1e-9);
        const auto view = spectral_view(ctx.eig, ctx.target.psi, ctx.map);
        const auto dist = spectral_distribution(view.phases, view.weights, grid);
        const auto moment = gce_moment(dist, gce_config(ct));
        const double eps_phase = 1e-3 * ctx.map.scale();
        const std::int64_t prescribed =
            chebyshev_samples(variance_mu(moment), eps_phase);
        for (std::int64_t shots : {std::int64_t{1000}, std::int64_t{10000},
                                   std::int64_t{100000}}) {
            for (std::uint64_t seed : {1ULL, 2ULL, 3ULL})
                cells.push_back({t, shots, seed, 0.0, 0.0, false});
        }
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL})
            cells.push_back({t, prescribed, seed, 0.0, 0.0, true});
    }

    parallel_for(cells.size(), [&](std::size_t i) {
        auto& cell = cells[i];
        RunConfig ct = c;
        ct.t = cell.t;
        ct.shots = cell.shots;
        ct.seed = cell.seed;
        const auto model = make_qpe_energy_model(geom, spec, model_options(ct));
        OptimizerOptions opts;
        opts.step = 0.01;
        opts.gradient_tolerance = 1e-4;
        opts.max_iterations = 60;
        opts.project = remove_rigid_body;
        const auto trace = gradient_descent(model, geom.coordinates_angstrom(), opts);
        const auto fin = geom.with_coordinates_angstrom(trace.final_record().coordinates);
        double berr = 0.0;
        for (const auto& [a, b] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}})
            berr = std::max(berr, std::abs(fin.bond_angstrom(a, b) -
                                           oracle_geom.bond_angstrom(a, b)));
        cell.bond_err = berr;
        // exact-model energy at the final sampled-run geometry
        cell.energy_err =
            std::abs(oracle_model.energy(trace.final_record().coordinates) - oracle_energy);
    });

    std::ofstream out(dir / "appb_noise.csv");
    out << "t,shots,seed,prescribed,final_bond_error,final_energy_error\n";
    out << std::setprecision(12);
    for (const auto& cell : cells)
        out << cell.t << "," << cell.shots << "," << cell.seed << "," << cell.prescribed
            << "," << cell.bond_err << "," << cell.energy_err << "\n";
    std::cout << "wrote " << (dir / "appb_noise.csv").string() << "\n";
    return 0;
}

int cmd_reproduce(const RunConfig& c) {
    const auto dir = prepare_outdir(c, "reproduce-" + c.study);
    if (c.study == "fig4-accuracy") return study_fig4(c, dir);
    if (c.study == "fig5-cost") return study_fig5(c, dir);
    if (c.study == "fig8-fd") return study_fig8(c, dir);
    if (c.study == "fig9-h3-gs") return study_fig9(c, dir);
    if (c.study == "fig10-h3-triplet") return study_fig10(c, dir);
    if (c.study == "appB-noise") return study_appb(c, dir);
    throw ConfigError("unknown study " + c.study +
                      " (expected fig4-accuracy | fig5-cost | fig8-fd | fig9-h3-gs | "
                      "fig10-h3-triplet | appB-noise)");
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    std::string config_path;

    CLI::App app{"differentiable phase-estimation toolkit"};
    app.require_subcommand(1);

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration");
        sub->add_option("--xyz", cfg.xyz, "geometry file (angstrom)");
        sub->add_option("--fcidump", cfg.fcidump, "integral file");
        sub->add_option("--phases", cfg.phases, "synthetic phases phi:w,phi:w");
        sub->add_option("--charge", cfg.charge, "net charge override")
            ->each([&](const std::string&) { cfg.charge_set = true; });
        sub->add_option("--multiplicity", cfg.multiplicity, "spin multiplicity");
        sub->add_option("--state", cfg.state, "determinant bits, bits:w list, or hf");
        sub->add_option("-t,--t", cfg.t, "readout qubits");
        sub->add_option("--shots", cfg.shots, "samples (0 = exact)");
        sub->add_option("--seed", cfg.seed, "RNG seed");
        sub->add_option("--estimator", cfg.estimator, "gce | majority | expectation");
        sub->add_option("--temperature", cfg.temperature, "softmax temperature");
        sub->add_option("--steepness", cfg.steepness, "boxcar steepness");
        sub->add_option("--window-strings", cfg.window_strings, "window size in strings");
        sub->add_option("--margin", cfg.margin, "phase-map margin");
        sub->add_option("-o,--out", cfg.out, "output directory");
    };

    auto* sub_dist = app.add_subcommand("distribution", "parent readout distribution");
    add_common(sub_dist);
    auto* sub_est = app.add_subcommand("estimate", "phase/energy estimate");
    add_common(sub_est);
    auto* sub_stats = app.add_subcommand("stats", "sample/shot/query cost report");
    add_common(sub_stats);
    sub_stats->add_option("--epsilon", cfg.epsilon, "target accuracy, phase units");
    sub_stats->add_option("--gate-count", cfg.gate_count, "parameterized gate count G");
    sub_stats->add_option("--n-params", cfg.n_parameters, "differentiated parameters M");
    sub_stats->add_option("--stencil-one-norm", cfg.stencil_one_norm, "||y||_1 override");
    sub_stats->add_option("--theta-magnitude", cfg.theta_magnitude, "|theta| override");
    sub_stats->add_option("--mismatch", cfg.mismatch, "phase mismatch for |theta|");
    sub_stats->add_option("--fd-degree", cfg.fd_degree, "stencil m for ||y||_1");
    sub_stats->add_option("--fd-step", cfg.fd_step, "stencil step for ||y||_1");
    auto* sub_grad = app.add_subcommand("grad", "energy gradient report");
    add_common(sub_grad);
    sub_grad->add_option("--method", cfg.grad_method, "smooth | fd | hellmann-feynman");
    sub_grad->add_option("--fd-degree", cfg.fd_degree, "stencil m");
    sub_grad->add_option("--fd-step", cfg.fd_step, "stencil step, angstrom");
    auto* sub_opt = app.add_subcommand("optimize", "geometry optimization");
    add_common(sub_opt);
    sub_opt->add_option("--method", cfg.method, "gd | bfgs");
    sub_opt->add_option("--step", cfg.step, "gradient-descent step, angstrom");
    sub_opt->add_option("--tol", cfg.tolerance, "gradient norm tolerance");
    sub_opt->add_option("--max-iter", cfg.max_iterations, "iteration cap");
    auto* sub_rep = app.add_subcommand("reproduce", "named reproduction studies");
    add_common(sub_rep);
    sub_rep->add_option("study", cfg.study, "study name")->required();
    sub_rep->add_option("--tol", cfg.tolerance, "optimizer tolerance");
    sub_rep->add_option("--max-iter", cfg.max_iterations, "optimizer iteration cap");
    sub_rep->add_option("--epsilon", cfg.epsilon, "target accuracy, phase units");

    try {
        // two-pass parse: load the JSON config first, explicit flags override
        app.parse(argc, argv);
        if (!config_path.empty()) {
            RunConfig from_file = cfg;
            apply_config_file(from_file, config_path);
            // re-parse so explicit command-line flags win over file values
            cfg = from_file;
            app.clear();
            app.parse(argc, argv);
        }
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 2;
    }

    try {
        validate_common(cfg);
        if (sub_dist->parsed()) return cmd_distribution(cfg);
        if (sub_est->parsed()) return cmd_estimate(cfg);
        if (sub_stats->parsed()) return cmd_stats(cfg);
        if (sub_grad->parsed()) return cmd_grad(cfg);
        if (sub_opt->parsed()) return cmd_optimize(cfg);
        if (sub_rep->parsed()) return cmd_reproduce(cfg);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"type", "numerical"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 3;
    }
}
