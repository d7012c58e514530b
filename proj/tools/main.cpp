#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbound/analytic.hpp"
#include "cbound/bayesnet.hpp"
#include "cbound/dist.hpp"
#include "cbound/io.hpp"
#include "cbound/optimizer.hpp"
#include "cbound/rng.hpp"
#include "cbound/synth.hpp"
#include "cbound/version.hpp"

namespace {

using cbound::Error;
using cbound::ErrorCategory;
using nlohmann::json;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Manifest {
    std::string command;
    std::vector<std::string> args;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::map<std::string, std::string> inputs;  // path -> digest
    std::map<std::string, double> wall_ms;

    json to_json() const {
        json doc;
        doc["command"] = command;
        doc["args"] = args;
        if (has_seed) doc["seed"] = seed;
        doc["inputs"] = inputs;
        doc["version"] = cbound::kVersion;
        doc["wall_ms"] = wall_ms;
        return doc;
    }

    std::string csv_header() const { return "# manifest: " + to_json().dump() + "\n"; }
};

std::string read_file(const std::string& path, Manifest& manifest) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(cbound::ErrorCode::ParseError, "cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    manifest.inputs[path] = cbound::content_digest(text);
    return text;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(cbound::ErrorCode::ParseError, "cannot write '" + path + "'");
    }
    out << content;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

cbound::JointDistribution load_joint(const std::string& path, Manifest& manifest) {
    const std::string text = read_file(path, manifest);
    return ends_with(path, ".csv") ? cbound::joint_from_csv(text)
                                   : cbound::joint_from_json(text);
}

cbound::Evidence parse_evidence(const std::vector<std::string>& pairs) {
    cbound::Evidence ev;
    for (const std::string& kv : pairs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size()) {
            throw Error(cbound::ErrorCode::ParseError,
                        "evidence must be var=state, got '" + kv + "'");
        }
        ev[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return ev;
}

struct SolverFlags {
    std::string formulation = "counterfactual";
    double tol = 1e-7;
    double feas_tol = 1e-6;
    int max_iterations = 100000;
    std::size_t size_limit = 100000;

    cbound::SolverConfig config(double theta) const {
        cbound::SolverConfig cfg;
        cfg.theta = theta;
        cfg.tolerance = tol;
        cfg.feasibility_tol = feas_tol;
        cfg.max_iterations = max_iterations;
        cfg.size_limit = size_limit;
        return cfg;
    }

    cbound::BoundsResult solve(const cbound::JointDistribution& j,
                               const cbound::Query& q, double theta) const {
        const cbound::SolverConfig cfg = config(theta);
        return formulation == "canonical" ? cbound::bounds_canonical(j, q, cfg)
                                          : cbound::bounds_counterfactual(j, q, cfg);
    }

    void add_to(CLI::App* cmd) {
        cmd->add_option("--formulation", formulation, "counterfactual or canonical")
            ->check(CLI::IsMember({"counterfactual", "canonical"}));
        cmd->add_option("--tol", tol, "solver convergence tolerance");
        cmd->add_option("--feas-tol", feas_tol, "constraint violation tolerance");
        cmd->add_option("--max-iterations", max_iterations, "inner iteration budget");
        cmd->add_option("--size-limit", size_limit, "max decision variables");
    }
};

// ---------------------------------------------------------------- bounds ---

struct BoundsArgs {
    std::string joint_file;
    std::string counts_file;
    std::string x_state, y_state;
    std::string x_var, y_var;
    std::vector<std::string> evidence;
    double theta = 0.0;
    SolverFlags solver;
};

int run_bounds(const BoundsArgs& a, Manifest& manifest) {
    const auto t0 = Clock::now();
    cbound::JointDistribution j = [&] {
        if (!a.counts_file.empty()) {
            const cbound::ContingencyTable table =
                cbound::counts_from_csv(read_file(a.counts_file, manifest));
            return table.joint_xy(a.x_var, a.y_var, parse_evidence(a.evidence));
        }
        return load_joint(a.joint_file, manifest);
    }();
    manifest.wall_ms["load"] = ms_since(t0);

    const cbound::Query q{j.x_index(a.x_state), j.y_index(a.y_state)};
    const auto t1 = Clock::now();
    const cbound::BoundsResult r = a.solver.solve(j, q, a.theta);
    manifest.wall_ms["solve"] = ms_since(t1);
    manifest.wall_ms["total"] = ms_since(t0);

    std::cout << cbound::bounds_to_json(r, a.x_state, a.y_state) << "\n";
    return 0;
}

// ----------------------------------------------------------------- sweep ---

struct SweepArgs {
    std::string joint_file;
    std::string x_state, y_state;
    double theta_max = 1.0;
    std::size_t steps = 11;
    bool ascending = false;
    std::string out_file;
    SolverFlags solver;
};

int run_sweep(const SweepArgs& a, Manifest& manifest) {
    if (a.steps < 2) {
        throw Error(cbound::ErrorCode::OutOfRange, "need at least 2 sweep steps");
    }
    const auto t0 = Clock::now();
    const cbound::JointDistribution j = load_joint(a.joint_file, manifest);
    manifest.wall_ms["load"] = ms_since(t0);

    const cbound::Query q{j.x_index(a.x_state), j.y_index(a.y_state)};
    std::vector<double> thetas;
    for (std::size_t i = 0; i < a.steps; ++i) {
        thetas.push_back(a.theta_max * static_cast<double>(a.steps - 1 - i) /
                         static_cast<double>(a.steps - 1));
    }
    if (a.ascending) std::reverse(thetas.begin(), thetas.end());

    const auto t1 = Clock::now();
    std::ostringstream body;
    body << std::setprecision(12) << "theta,lb,ub,tp_lb,tp_ub\n";
    for (double theta : thetas) {
        const cbound::BoundsResult r = a.solver.solve(j, q, theta);
        body << theta << "," << r.lb << "," << r.ub << "," << r.tp_lb << ","
             << r.tp_ub << "\n";
    }
    manifest.wall_ms["solve"] = ms_since(t1);
    manifest.wall_ms["total"] = ms_since(t0);

    const std::string text = manifest.csv_header() + body.str();
    if (a.out_file.empty()) {
        std::cout << text;
    } else {
        write_file(a.out_file, text);
    }
    return 0;
}

// ------------------------------------------------------------- threshold ---

struct ThresholdArgs {
    std::string joint_file;
    std::string x_state, y_state;
};

int run_threshold(const ThresholdArgs& a, Manifest& manifest) {
    const cbound::JointDistribution j = load_joint(a.joint_file, manifest);
    const cbound::Query q{j.x_index(a.x_state), j.y_index(a.y_state)};
    const cbound::ThresholdPair t = cbound::threshold_for_query(j, q);
    json doc;
    doc["query"] = {{"x", a.x_state}, {"y", a.y_state}};
    doc["threshold_lower"] = t.lower;
    doc["threshold_upper"] = t.upper;
    doc["overall"] = t.overall();
    doc["heuristic"] = t.heuristic;
    std::cout << doc.dump(2) << "\n";
    return 0;
}

// ----------------------------------------------------------------- synth ---

struct SynthArgs {
    std::string mode = "gap";
    std::size_t nx = 2, ny = 2, nz = 2;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    double alpha = 0.1;
    std::string shift = "by_jk";
    std::vector<std::size_t> sample_sizes = {10, 100, 1000, 10000};
    double bucket_width = 0.1;
    std::string query_mode = "all";
    std::size_t threads = 0;
    std::string out_prefix;
    std::string format = "csv";
};

int run_synth(const SynthArgs& a, Manifest& manifest) {
    const auto t0 = Clock::now();
    cbound::SamplerConfig cfg;
    cfg.n = a.nx;
    cfg.m = a.ny;
    cfg.k = a.nz;
    cfg.alpha = a.alpha;
    cfg.seed = a.seed;
    if (a.shift == "by_j") {
        cfg.shift = cbound::ShiftMode::ByJ;
    } else if (a.shift == "by_k") {
        cfg.shift = cbound::ShiftMode::ByK;
    } else {
        cfg.shift = cbound::ShiftMode::ByJK;
    }

    cbound::ExperimentOptions opt;
    opt.bucket_width = a.bucket_width;
    opt.query_mode = a.query_mode == "single" ? cbound::QueryMode::SinglePair
                                              : cbound::QueryMode::AllPairs;
    opt.threads = a.threads;

    std::string csv, json_text;
    if (a.mode == "gap") {
        const cbound::GapReport r = cbound::gap_experiment(cfg, a.count, opt);
        manifest.wall_ms["solve"] = ms_since(t0);
        csv = cbound::gap_report_to_csv(r);
        json_text = cbound::gap_report_to_json(r, manifest.to_json().dump());
    } else if (a.mode == "tighter") {
        const cbound::TighterReport r =
            cbound::tighter_count_experiment(cfg, a.count, opt);
        manifest.wall_ms["solve"] = ms_since(t0);
        csv = cbound::tighter_report_to_csv(r);
        json_text = cbound::tighter_report_to_json(r, manifest.to_json().dump());
    } else if (a.mode == "finite") {
        const cbound::FiniteSampleReport r =
            cbound::finite_sample_experiment(cfg, a.count, a.sample_sizes, opt);
        manifest.wall_ms["solve"] = ms_since(t0);
        csv = cbound::finite_report_to_csv(r);
        json_text = cbound::finite_report_to_json(r, manifest.to_json().dump());
    } else {
        throw Error(cbound::ErrorCode::ParseError, "unknown mode '" + a.mode + "'");
    }
    manifest.wall_ms["total"] = ms_since(t0);

    if (!a.out_prefix.empty()) {
        write_file(a.out_prefix + ".csv", manifest.csv_header() + csv);
        write_file(a.out_prefix + ".json", json_text + "\n");
    } else if (a.format == "json") {
        std::cout << json_text << "\n";
    } else {
        std::cout << manifest.csv_header() << csv;
    }
    return 0;
}

// --------------------------------------------------------------- compare ---

struct CompareArgs {
    std::size_t nx = 2, ny = 2;
    std::size_t count = 10;
    double theta = 0.5;
    std::uint64_t seed = 0;
    std::size_t size_limit = 100000;
    std::string out_file;
};

int run_compare(const CompareArgs& a, Manifest& manifest) {
    const auto t0 = Clock::now();
    const std::uint64_t cf_params =
        cbound::count_parameters(a.nx, a.ny, cbound::Formulation::Counterfactual);
    std::uint64_t cp_params = 0;
    bool canonical_ok = true;
    std::string canonical_note = "ok";
    try {
        cp_params = cbound::count_parameters(a.nx, a.ny, cbound::Formulation::Canonical);
        if (cp_params > a.size_limit) {
            canonical_ok = false;
            canonical_note = "skipped:program_too_large";
        }
    } catch (const Error&) {
        canonical_ok = false;
        canonical_note = "skipped:overflow";
    }

    cbound::SolverConfig cfg;
    cfg.theta = a.theta;
    cfg.size_limit = a.size_limit;

    cbound::Rng rng(a.seed);
    double cf_total_ms = 0.0;
    double cp_total_ms = 0.0;
    std::size_t solves = 0;
    double max_diff = 0.0;

    for (std::size_t inst = 0; inst < a.count; ++inst) {
        const std::vector<double> flat =
            rng.dirichlet(std::vector<double>(a.nx * a.ny, 1.0));
        std::vector<std::vector<double>> cells(a.ny, std::vector<double>(a.nx));
        for (std::size_t y = 0; y < a.ny; ++y) {
            for (std::size_t x = 0; x < a.nx; ++x) cells[y][x] = flat[y * a.nx + x];
        }
        const cbound::JointDistribution j =
            cbound::JointDistribution::validate(std::move(cells));
        for (std::size_t x = 0; x < a.nx; ++x) {
            for (std::size_t y = 0; y < a.ny; ++y) {
                const cbound::Query q{x, y};
                // median of 3 warm runs per instance, monotonic clock
                auto time_solve = [&](auto&& fn) {
                    std::vector<double> runs;
                    for (int rep = 0; rep < 3; ++rep) {
                        const auto s = Clock::now();
                        fn();
                        runs.push_back(ms_since(s));
                    }
                    std::sort(runs.begin(), runs.end());
                    return runs[1];
                };
                cbound::BoundsResult rcf, rcp;
                cf_total_ms += time_solve(
                    [&] { rcf = cbound::bounds_counterfactual(j, q, cfg); });
                if (canonical_ok) {
                    cp_total_ms += time_solve(
                        [&] { rcp = cbound::bounds_canonical(j, q, cfg); });
                    max_diff = std::max(max_diff, std::abs(rcf.lb - rcp.lb));
                    max_diff = std::max(max_diff, std::abs(rcf.ub - rcp.ub));
                }
                ++solves;
            }
        }
    }
    manifest.wall_ms["total"] = ms_since(t0);

    std::ostringstream body;
    body << std::setprecision(9);
    body << "formulation,num_params,mean_runtime_ms,max_abs_diff,status\n";
    const double denom = solves > 0 ? static_cast<double>(solves) : 1.0;
    body << "canonical," << cp_params << ",";
    if (canonical_ok) {
        body << (cp_total_ms / denom) << "," << max_diff << ",ok\n";
    } else {
        body << "," << "," << canonical_note << "\n";
    }
    body << "counterfactual," << cf_params << "," << (cf_total_ms / denom) << ","
         << (canonical_ok ? std::to_string(max_diff) : std::string()) << ",ok\n";

    const std::string text = manifest.csv_header() + body.str();
    if (a.out_file.empty()) {
        std::cout << text;
    } else {
        write_file(a.out_file, text);
    }
    return 0;
}

// ------------------------------------------------------------- bn-bounds ---

struct BnBoundsArgs {
    std::string net_file;
    std::string x_var, y_var, z_var;
    std::vector<std::string> evidence;
    bool assume_blocker = false;
    SolverFlags solver;
};

int run_bn_bounds(const BnBoundsArgs& a, Manifest& manifest) {
    const auto t0 = Clock::now();
    const cbound::BayesNet net =
        cbound::bayesnet_from_json(read_file(a.net_file, manifest));
    const cbound::Evidence ev = parse_evidence(a.evidence);
    if (a.z_var == a.x_var || a.z_var == a.y_var || ev.count(a.z_var)) {
        throw Error(cbound::ErrorCode::OutOfRange,
                    "confounder variable must differ from x, y and evidence");
    }
    manifest.wall_ms["load"] = ms_since(t0);

    const auto t1 = Clock::now();
    const double theta = cbound::variable_entropy(net, a.z_var, ev);
    const cbound::JointDistribution j = cbound::joint_xy(net, a.x_var, a.y_var, ev);

    json results = json::array();
    for (std::size_t x = 0; x < j.nx(); ++x) {
        for (std::size_t y = 0; y < j.ny(); ++y) {
            const cbound::BoundsResult r = a.solver.solve(j, {x, y}, theta);
            results.push_back(json::parse(
                cbound::bounds_to_json(r, j.x_labels()[x], j.y_labels()[y], -1)));
        }
    }
    manifest.wall_ms["solve"] = ms_since(t1);
    manifest.wall_ms["total"] = ms_since(t0);

    json doc;
    doc["x_var"] = a.x_var;
    doc["y_var"] = a.y_var;
    doc["z_var"] = a.z_var;
    doc["theta"] = theta;
    doc["evidence"] = ev;
    doc["assume_blocker"] = a.assume_blocker;
    doc["results"] = std::move(results);
    std::cout << doc.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bounds on causal effects under entropy-bounded confounding"};
    app.set_version_flag("--version", cbound::kVersion);
    app.require_subcommand(1);

    std::string log_base = "bits";
    app.add_option("--log-base", log_base, "entropy unit: bits or nats")
        ->check(CLI::IsMember({"bits", "nats"}));

    BoundsArgs bounds;
    CLI::App* cmd_bounds =
        app.add_subcommand("bounds", "Entropy-constrained bounds for one query");
    cmd_bounds->add_option("--joint", bounds.joint_file, "joint table (.json or .csv)");
    cmd_bounds->add_option("--counts", bounds.counts_file,
                           "contingency-table CSV (columns + count)");
    cmd_bounds->add_option("--x", bounds.x_state, "treatment state x_q")->required();
    cmd_bounds->add_option("--y", bounds.y_state, "outcome state y_p")->required();
    cmd_bounds->add_option("--theta", bounds.theta, "confounder entropy budget")
        ->required();
    cmd_bounds->add_option("--x-var", bounds.x_var, "treatment column (counts input)");
    cmd_bounds->add_option("--y-var", bounds.y_var, "outcome column (counts input)");
    cmd_bounds->add_option("--evidence", bounds.evidence,
                           "var=state filters (counts input)");
    bounds.solver.add_to(cmd_bounds);

    SweepArgs sweep;
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "Bounds along a theta grid");
    cmd_sweep->add_option("--joint", sweep.joint_file, "joint table")->required();
    cmd_sweep->add_option("--x", sweep.x_state, "treatment state")->required();
    cmd_sweep->add_option("--y", sweep.y_state, "outcome state")->required();
    cmd_sweep->add_option("--theta-max", sweep.theta_max, "sweep start")->required();
    cmd_sweep->add_option("--steps", sweep.steps, "row count (>= 2)")->required();
    cmd_sweep->add_flag("--ascending", sweep.ascending, "sweep 0 -> theta-max");
    cmd_sweep->add_option("--out", sweep.out_file, "write CSV here instead of stdout");
    sweep.solver.add_to(cmd_sweep);

    ThresholdArgs threshold;
    CLI::App* cmd_threshold =
        app.add_subcommand("threshold", "Closed-form entropy thresholds");
    cmd_threshold->add_option("--joint", threshold.joint_file, "joint table")
        ->required();
    cmd_threshold->add_option("--x", threshold.x_state, "treatment state")->required();
    cmd_threshold->add_option("--y", threshold.y_state, "outcome state")->required();

    SynthArgs synth;
    CLI::App* cmd_synth =
        app.add_subcommand("synth", "Seeded synthetic experiment pipelines");
    cmd_synth->add_option("--mode", synth.mode, "gap, tighter or finite")
        ->check(CLI::IsMember({"gap", "tighter", "finite"}))
        ->required();
    cmd_synth->add_option("--nx", synth.nx, "|X|")->required();
    cmd_synth->add_option("--ny", synth.ny, "|Y|")->required();
    cmd_synth->add_option("--nz", synth.nz, "|Z|");
    cmd_synth->add_option("--count", synth.count, "distributions to sample")
        ->required();
    cmd_synth->add_option("--seed", synth.seed, "RNG seed");
    cmd_synth->add_option("--alpha", synth.alpha, "Dirichlet concentration for P(Z)");
    cmd_synth->add_option("--shift", synth.shift, "tilt roll: by_j, by_k, by_jk")
        ->check(CLI::IsMember({"by_j", "by_k", "by_jk"}));
    cmd_synth->add_option("--sample-sizes", synth.sample_sizes,
                          "finite-sample sizes (mode finite)");
    cmd_synth->add_option("--bucket-width", synth.bucket_width, "H(Z) bucket width");
    cmd_synth->add_option("--query-mode", synth.query_mode, "all or single")
        ->check(CLI::IsMember({"all", "single"}));
    cmd_synth->add_option("--threads", synth.threads, "worker threads (0 = auto)");
    cmd_synth->add_option("--out", synth.out_prefix,
                          "write PREFIX.csv and PREFIX.json");
    cmd_synth->add_option("--format", synth.format, "stdout format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    CompareArgs compare;
    CLI::App* cmd_compare =
        app.add_subcommand("compare", "Canonical vs counterfactual formulations");
    cmd_compare->add_option("--nx", compare.nx, "|X|")->required();
    cmd_compare->add_option("--ny", compare.ny, "|Y|")->required();
    cmd_compare->add_option("--count", compare.count, "random instances")->required();
    cmd_compare->add_option("--theta", compare.theta, "entropy budget")->required();
    cmd_compare->add_option("--seed", compare.seed, "RNG seed");
    cmd_compare->add_option("--size-limit", compare.size_limit,
                            "canonical size cutoff");
    cmd_compare->add_option("--out", compare.out_file, "write CSV here");

    BnBoundsArgs bn;
    CLI::App* cmd_bn =
        app.add_subcommand("bn-bounds", "Bounds from a Bayesian-network fixture");
    cmd_bn->add_option("--net", bn.net_file, "BayesNet JSON")->required();
    cmd_bn->add_option("--x", bn.x_var, "treatment variable")->required();
    cmd_bn->add_option("--y", bn.y_var, "outcome variable")->required();
    cmd_bn->add_option("--z", bn.z_var, "entropy-budget confounder")->required();
    cmd_bn->add_option("--evidence", bn.evidence, "var=state subgroup filters");
    cmd_bn->add_flag("--assume-blocker", bn.assume_blocker,
                     "record that z is asserted to block the back-door path");
    bn.solver.add_to(cmd_bn);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    cbound::set_log_base(log_base == "nats" ? cbound::LogBase::Nats
                                            : cbound::LogBase::Bits);

    Manifest manifest;
    for (int i = 1; i < argc; ++i) manifest.args.emplace_back(argv[i]);

    try {
        if (app.got_subcommand(cmd_bounds)) {
            if (bounds.joint_file.empty() == bounds.counts_file.empty()) {
                throw Error(cbound::ErrorCode::ParseError,
                            "provide exactly one of --joint or --counts");
            }
            if (!bounds.counts_file.empty() &&
                (bounds.x_var.empty() || bounds.y_var.empty())) {
                throw Error(cbound::ErrorCode::ParseError,
                            "--counts requires --x-var and --y-var");
            }
            manifest.command = "bounds";
            return run_bounds(bounds, manifest);
        }
        if (app.got_subcommand(cmd_sweep)) {
            manifest.command = "sweep";
            return run_sweep(sweep, manifest);
        }
        if (app.got_subcommand(cmd_threshold)) {
            manifest.command = "threshold";
            return run_threshold(threshold, manifest);
        }
        if (app.got_subcommand(cmd_synth)) {
            manifest.command = "synth";
            manifest.seed = synth.seed;
            manifest.has_seed = true;
            return run_synth(synth, manifest);
        }
        if (app.got_subcommand(cmd_compare)) {
            manifest.command = "compare";
            manifest.seed = compare.seed;
            manifest.has_seed = true;
            return run_compare(compare, manifest);
        }
        if (app.got_subcommand(cmd_bn)) {
            manifest.command = "bn-bounds";
            return run_bn_bounds(bn, manifest);
        }
    } catch (const Error& e) {
        std::cerr << "error [" << cbound::error_code_name(e.code()) << "]: " << e.what()
                  << "\n";
        switch (e.category()) {
        case ErrorCategory::Solver: return 3;
        case ErrorCategory::SizeLimit: return 4;
        case ErrorCategory::Validation: default: return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
