#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdsim/pipeline.hpp"

namespace {

using namespace qdsim;

struct CommonFlags {
    std::string state = "psi";
    std::string q = "none";
    int m = 1;
    double alpha_sq = 10.0;
    int nmax = 0; // 0 = automatic cutoff
    double tmax = 50.0;
    int steps = 2000;
    std::string solver = "block";
    std::string observables = "purity";
    std::string out;
    double omega = 0.0;
    double detuning = 0.0;
    double lambda = 1.0;
    std::string config;
};

struct CommonOptions {
    CLI::Option* state = nullptr;
    CLI::Option* q = nullptr;
    CLI::Option* m = nullptr;
    CLI::Option* alpha_sq = nullptr;
    CLI::Option* nmax = nullptr;
    CLI::Option* tmax = nullptr;
    CLI::Option* steps = nullptr;
    CLI::Option* solver = nullptr;
    CLI::Option* observables = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* omega = nullptr;
    CLI::Option* detuning = nullptr;
    CLI::Option* lambda = nullptr;
};

CommonOptions add_common_flags(CLI::App* cmd, CommonFlags& f) {
    CommonOptions opts;
    cmd->add_option("--config", f.config, "Plain key=value file; command-line flags win");
    opts.state = cmd->add_option("--state", f.state, "Initial Bell state of the qubit pair")
                     ->check(CLI::IsMember({"psi", "phi"}));
    opts.q = cmd->add_option("--q", f.q, "Deformation parameter in (0, 1], or 'none'");
    opts.m = cmd->add_option("--m", f.m, "Photons exchanged per qubit flip (>= 1)");
    opts.alpha_sq = cmd->add_option("--alpha-sq", f.alpha_sq, "Mean photon number |alpha|^2");
    opts.nmax = cmd->add_option("--nmax", f.nmax, "Fock cutoff (0 = automatic)");
    opts.tmax = cmd->add_option("--tmax", f.tmax, "End of the scaled time axis lambda*t");
    opts.steps = cmd->add_option("--steps", f.steps, "Time samples including both endpoints");
    opts.solver =
        cmd->add_option("--solver", f.solver, "Propagator")
            ->check(CLI::IsMember(
                {"reference", "block", "analytic-corrected", "analytic-as-printed"}));
    opts.observables = cmd->add_option(
        "--observables", f.observables,
        "Comma list of purity, fidelity, pop_ee, pop_eg, pop_ge, pop_gg, populations, all");
    opts.out = cmd->add_option("--out", f.out, "Output CSV file (run) or directory (sweep)");
    opts.omega = cmd->add_option("--omega", f.omega, "Cavity frequency (atoms kept resonant)");
    opts.detuning = cmd->add_option("--detuning", f.detuning,
                                    "Common atomic detuning from m*omega");
    opts.lambda = cmd->add_option("--lambda", f.lambda, "Atom-field coupling strength");
    return opts;
}

// Plain key=value lines (# comments allowed); keys are the long option names
// without the leading dashes. Options already given on the command line keep
// their values. Applied by hand: CLI11 only reads config files on the root
// app, and sectionless keys there never reach subcommand options.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");

    auto trim = [](const std::string& text) {
        const auto first = text.find_first_not_of(" \t\r");
        if (first == std::string::npos) return std::string();
        const auto last = text.find_last_not_of(" \t\r");
        return text.substr(first, last - first + 1);
    };

    std::vector<CLI::Option*> touched;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const size_t eq = body.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument(where + ": expected key=value");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key == "config")
            throw std::invalid_argument(where + ": config files cannot nest");
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw std::invalid_argument(where + ": unknown key '" + key + "'");
        const bool from_file = std::find(touched.begin(), touched.end(), opt) != touched.end();
        if (opt->count() > 0 && !from_file) continue; // command line wins
        opt->add_result(value);
        if (!from_file) touched.push_back(opt);
    }
    for (CLI::Option* opt : touched) opt->run_callback();
}

std::vector<ObservableKind> parse_observables(const std::string& csv) {
    std::vector<ObservableKind> kinds;
    auto push = [&kinds](ObservableKind k) {
        if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
    };
    std::string token;
    std::istringstream stream(csv);
    while (std::getline(stream, token, ',')) {
        if (token == "purity") push(ObservableKind::Purity);
        else if (token == "fidelity") push(ObservableKind::Fidelity);
        else if (token == "pop_ee") push(ObservableKind::PopEE);
        else if (token == "pop_eg") push(ObservableKind::PopEG);
        else if (token == "pop_ge") push(ObservableKind::PopGE);
        else if (token == "pop_gg") push(ObservableKind::PopGG);
        else if (token == "populations") {
            push(ObservableKind::PopEE);
            push(ObservableKind::PopEG);
            push(ObservableKind::PopGE);
            push(ObservableKind::PopGG);
        } else if (token == "all") {
            push(ObservableKind::Purity);
            push(ObservableKind::Fidelity);
            push(ObservableKind::PopEE);
            push(ObservableKind::PopEG);
            push(ObservableKind::PopGE);
            push(ObservableKind::PopGG);
        } else {
            throw std::invalid_argument("unknown observable '" + token + "'");
        }
    }
    if (kinds.empty()) throw std::invalid_argument("no observables requested");
    return kinds;
}

double parse_q_flag(const std::string& text) {
    try {
        size_t used = 0;
        const double q = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return q;
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse --q value '" + text + "'");
    }
}

RunRequest build_request(const CommonFlags& f) {
    RunRequest req;
    req.config.omega = f.omega;
    req.config.coupling = f.lambda;
    req.config.multiplicity = f.m;
    const double resonant_freq = f.m * f.omega + f.detuning;
    req.config.atom_freq = {resonant_freq, resonant_freq};
    if (f.alpha_sq < 0.0) throw std::invalid_argument("--alpha-sq must be >= 0");
    req.config.alpha = std::sqrt(f.alpha_sq);
    req.config.n_max = f.nmax;
    req.config.profile = f.q == "none" ? DeformationProfile::identity(0)
                                       : DeformationProfile::q_box(parse_q_flag(f.q), 0);
    req.initial = f.state == "phi" ? InitialStateSpec::bell_phi() : InitialStateSpec::bell_psi();
    const auto solver = parse_solver(f.solver);
    if (!solver) throw std::invalid_argument("unknown solver '" + f.solver + "'");
    req.solver = *solver;
    req.observables = parse_observables(f.observables);
    req.t_max = f.tmax;
    req.steps = f.steps;
    req.output_path = f.out.empty() ? "run.csv" : f.out;
    return req;
}

int do_run(const CommonFlags& flags) {
    const RunRequest req = build_request(flags);
    const RunResult result = run(req);

    for (const ObservableSeries& s : result.series) {
        const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
        std::printf("%s: min=%.15g max=%.15g final=%.15g\n", observable_name(s.kind).c_str(),
                    *lo, *hi, s.values.back());
    }
    std::printf("truncation_deficit=%.3g (n_max=%d)\n", result.truncation_deficit,
                result.resolved.n_max);
    if (req.solver == SolverKind::AnalyticAsPrinted ||
        req.solver == SolverKind::AnalyticCorrected)
        std::printf("max_norm_defect=%.3g (renormalized per sample)\n", result.max_norm_defect);
    std::printf("wrote %s (%zu rows)\n", req.output_path.c_str(), result.times.size());
    return kExitOk;
}

int do_sweep(const CommonFlags& flags, const CommonOptions& opts, int figure,
             const std::vector<std::string>& axis_specs, int workers, int max_points,
             const CLI::Option* figure_opt, const CLI::Option* axis_opt) {
    SweepRequest req;
    if (figure_opt->count() > 0) {
        // Physics of a preset is fixed; only output/solver/grid-shape flags apply.
        for (const CLI::Option* locked : std::initializer_list<const CLI::Option*>{
                 opts.state, opts.q, opts.m, opts.alpha_sq, opts.nmax, opts.observables,
                 opts.omega, opts.detuning, opts.lambda, axis_opt})
            if (locked->count() > 0)
                throw std::invalid_argument("--figure fixes the physics flags; remove " +
                                            locked->get_name());
        req = figure_preset(figure);
        if (opts.tmax->count() > 0) req.base.t_max = flags.tmax;
        if (opts.steps->count() > 0) req.base.steps = flags.steps;
        if (opts.solver->count() > 0) {
            const auto solver = parse_solver(flags.solver);
            if (!solver) throw std::invalid_argument("unknown solver '" + flags.solver + "'");
            req.base.solver = *solver;
        }
        if (!flags.out.empty()) req.out_dir = flags.out;
    } else {
        req.base = build_request(flags);
        req.out_dir = flags.out.empty() ? "sweep_data" : flags.out;
        for (const std::string& spec : axis_specs) {
            const size_t eq = spec.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
                throw std::invalid_argument("--axis expects key=v1,v2,... got '" + spec + "'");
            std::vector<std::string> values;
            std::string token;
            std::istringstream stream(spec.substr(eq + 1));
            while (std::getline(stream, token, ',')) values.push_back(token);
            req.axes.emplace_back(spec.substr(0, eq), std::move(values));
        }
    }
    req.workers = workers;
    req.max_points = max_points;

    const SweepOutcome outcome = sweep(req);
    for (const auto& point : outcome.points) {
        if (point.ok)
            std::printf("[ok]   %s -> %s\n", point.manifest_key.c_str(),
                        point.filename.c_str());
        else
            std::printf("[fail] %s -> %s: %s\n", point.manifest_key.c_str(),
                        point.filename.c_str(), point.error.c_str());
    }
    const size_t succeeded = static_cast<size_t>(
        std::count_if(outcome.points.begin(), outcome.points.end(),
                      [](const auto& p) { return p.ok; }));
    std::printf("sweep: %zu/%zu runs ok, workers=%d, manifest=%s\n", succeeded,
                outcome.points.size(), outcome.workers_used, outcome.manifest_path.c_str());
    return outcome.exit_code;
}

int do_verify(const CommonFlags& flags, const CommonOptions& opts) {
    VerifyOverrides overrides;
    if (opts.q->count() > 0)
        overrides.q = flags.q == "none" ? -1.0 : parse_q_flag(flags.q);
    if (opts.m->count() > 0) overrides.multiplicity = flags.m;
    if (opts.alpha_sq->count() > 0) overrides.alpha_sq = flags.alpha_sq;
    if (opts.nmax->count() > 0) overrides.n_max = flags.nmax;
    if (opts.state->count() > 0)
        overrides.state = flags.state == "phi" ? InitialStateSpec::Atomic::BellPhi
                                               : InitialStateSpec::Atomic::BellPsi;

    const VerifyReport report = verify(overrides);
    std::fputs(format_verify_report(report).c_str(), stdout);
    return report.all_pass ? kExitOk : kExitCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-qubit, q-deformed multiphoton cavity dynamics"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "One evolution, one CSV");
    const CommonOptions run_opts = add_common_flags(run_cmd, run_flags);
    (void)run_opts;

    CommonFlags sweep_flags;
    int figure = 0;
    std::vector<std::string> axis_specs;
    int workers = 0;
    int max_points = 10000;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Parameter grid, one CSV per point");
    const CommonOptions sweep_opts = add_common_flags(sweep_cmd, sweep_flags);
    CLI::Option* figure_opt =
        sweep_cmd->add_option("--figure", figure, "Preset grid 1-7")->check(CLI::Range(1, 7));
    CLI::Option* axis_opt = sweep_cmd->add_option(
        "--axis", axis_specs, "Sweep axis key=v1,v2,... (q, m, alpha_sq, state); repeatable");
    sweep_cmd->add_option("--workers", workers,
                          "Worker threads (default: QDSIM_WORKERS or hardware)");
    sweep_cmd->add_option("--max-points", max_points, "Grid size cap");

    CommonFlags verify_flags;
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "Cross-solver and conservation checks");
    const CommonOptions verify_opts = add_common_flags(verify_cmd, verify_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return qdsim::kExitBadConfig;
    }

    CLI::App* active_cmd = nullptr;
    CommonFlags* active_flags = nullptr;
    if (run_cmd->parsed()) {
        active_cmd = run_cmd;
        active_flags = &run_flags;
    } else if (sweep_cmd->parsed()) {
        active_cmd = sweep_cmd;
        active_flags = &sweep_flags;
    } else if (verify_cmd->parsed()) {
        active_cmd = verify_cmd;
        active_flags = &verify_flags;
    }
    if (active_cmd != nullptr && !active_flags->config.empty()) {
        try {
            apply_config_file(active_cmd, active_flags->config);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return qdsim::kExitBadConfig;
        }
    }

    try {
        if (run_cmd->parsed()) return do_run(run_flags);
        if (sweep_cmd->parsed())
            return do_sweep(sweep_flags, sweep_opts, figure, axis_specs, workers, max_points,
                            figure_opt, axis_opt);
        if (verify_cmd->parsed()) return do_verify(verify_flags, verify_opts);
        std::fprintf(stderr, "error: no subcommand\n");
        return qdsim::kExitBadConfig;
    } catch (const qdsim::CutoffError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return qdsim::kExitCutoff;
    } catch (const qdsim::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return qdsim::kExitIo;
    } catch (const qdsim::StructuralError& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return qdsim::kExitCheckFailed;
    } catch (const qdsim::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return qdsim::kExitCheckFailed;
    } catch (const std::logic_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return qdsim::kExitBadConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return qdsim::kExitCheckFailed;
    }
}
