#include "hqlab/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hqlab/errors.hpp"
#include "hqlab/estimates.hpp"
#include "hqlab/inequality.hpp"
#include "hqlab/lagrange.hpp"
#include "hqlab/presets.hpp"
#include "hqlab/random.hpp"

namespace hqlab {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + path + "'");
    f << text;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

template <class T>
T json_get(const nlohmann::json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw UsageError("config key '" + key + "' has the wrong type");
    }
}

void apply_json(RunConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "command") {
            const auto c = json_get<std::string>(v, key);
            if (c != cfg.command) throw UsageError("config is for '" + c + "', not '" + cfg.command + "'");
        } else if (key == "seed") {
            cfg.seed = json_get<std::uint64_t>(v, key);
        } else if (key == "samples") {
            cfg.samples = json_get<long>(v, key);
        } else if (key == "dims") {
            cfg.dims = v.is_string() ? parse_dims(v.get<std::string>()) : json_get<std::vector<int>>(v, key);
        } else if (key == "out") {
            cfg.out = json_get<std::string>(v, key);
        } else if (key == "report") {
            cfg.report = json_get<std::string>(v, key);
        } else if (key == "preset") {
            cfg.preset = json_get<std::string>(v, key);
        } else if (key == "grid" || key == "shape") {
            if (v.is_array()) {
                const auto s = json_get<std::vector<int>>(v, key);
                if (s.empty()) throw UsageError("config key '" + key + "' is empty");
                for (int x : s) {
                    if (x != s.front()) throw UsageError("grids are uniform: every axis needs the same point count");
                }
                cfg.grid = s.front();
            } else {
                cfg.grid = json_get<int>(v, key);
            }
        } else if (key == "dim") {
            cfg.dim = json_get<int>(v, key);
        } else if (key == "extent") {
            cfg.extent = json_get<double>(v, key);
        } else if (key == "kind") {
            cfg.kind = parse_operator_kind(json_get<std::string>(v, key));
        } else if (key == "instances") {
            cfg.instances = json_get<std::string>(v, key);
        } else if (key == "trials") {
            cfg.trials = json_get<int>(v, key);
        } else if (key == "baseline") {
            cfg.baseline = json_get<std::string>(v, key);
        } else if (key == "baseline_tolerance") {
            cfg.baseline_tolerance = json_get<double>(v, key);
        } else if (key == "workers") {
            cfg.workers = json_get<unsigned>(v, key);
        } else if (key == "residual_tol") {
            cfg.residual_tol = json_get<double>(v, key);
        } else if (key == "max_newton_iters") {
            cfg.max_newton_iters = json_get<int>(v, key);
        } else if (key == "damping") {
            cfg.damping = json_get<double>(v, key);
        } else if (key == "cone_guard") {
            cfg.cone_guard = json_get<bool>(v, key);
        } else if (key == "linear_solver_tol") {
            cfg.linear_solver_tol = json_get<double>(v, key);
        } else if (key == "initial_guess") {
            cfg.initial_guess = json_get<std::string>(v, key);
        } else if (key == "tolerances") {
            if (!v.is_object()) throw UsageError("config key 'tolerances' must be an object");
            for (const auto& [tk, tv] : v.items()) {
                if (tk == "residual_tol") {
                    cfg.residual_tol = json_get<double>(tv, tk);
                } else if (tk == "linear_solver_tol") {
                    cfg.linear_solver_tol = json_get<double>(tv, tk);
                } else {
                    throw UsageError("unknown config key 'tolerances." + tk + "'");
                }
            }
        } else {
            throw UsageError("unknown config key '" + key + "'");
        }
    }
}

SolverConfig solver_config(const RunConfig& cfg, int grid) {
    SolverConfig s;
    s.grid_points = grid;
    s.residual_tol = cfg.residual_tol;
    s.max_newton_iters = cfg.max_newton_iters;
    s.damping = cfg.damping;
    s.cone_guard = cfg.cone_guard;
    s.linear_solver_tol = cfg.linear_solver_tol;
    if (cfg.initial_guess != "quadratic_fit") {
        throw UsageError("initial_guess '" + cfg.initial_guess + "' is not available from the command line");
    }
    return s;
}

Preset configured_preset(const RunConfig& cfg, const std::string& name) {
    Preset p = find_preset(name);
    if (cfg.dim && *cfg.dim != p.dim) {
        throw UsageError("preset '" + name + "' is " + std::to_string(p.dim) + "-dimensional");
    }
    if (cfg.extent) p.domain = Box::cube(p.dim, *cfg.extent);
    return p;
}

int run_verify(const RunConfig& cfg, std::ostream& out) {
    const auto reports = run_suite(cfg.dims, cfg.samples, cfg.seed, cfg.workers);
    int failed = 0;
    for (const auto& r : reports) {
        failed += r.passed ? 0 : 1;
        out << (r.passed ? "PASS " : "FAIL ") << r.name << " n=" << r.n << " samples=" << r.samples
            << " min_margin=" << fmt(r.min_margin) << "\n";
    }
    if (!cfg.out.empty()) write_file(cfg.out, reports_to_csv(reports));
    out << "verify: " << reports.size() - failed << "/" << reports.size() << " checks passed\n";
    return failed == 0 ? 0 : 1;
}

int run_minimize(const RunConfig& cfg, std::ostream& out) {
    const auto instances =
        cfg.instances.empty() ? sample_instances(static_cast<int>(cfg.samples), cfg.seed) : parse_instances(read_file(cfg.instances));
    std::vector<MinimizeRecord> records;
    records.reserve(instances.size());
    int failed = 0;
    double worst_gap = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < instances.size(); ++m) {
        records.push_back(compare_instance(static_cast<long>(m), instances[m]));
        if (!records.back().pass) {
            ++failed;
            out << "FAIL instance " << m << " max_t_diff=" << fmt(records.back().max_t_diff)
                << " residual=" << fmt(records.back().constraint_residual) << "\n";
        }
        if (cfg.trials > 0 && instances[m].n() >= 3) {
            const double gap = feasible_sample_check(instances[m], cfg.trials, derive_seed(cfg.seed, {static_cast<std::uint64_t>(m)}));
            worst_gap = std::min(worst_gap, gap);
            if (gap < -1e-10) {
                ++failed;
                out << "FAIL instance " << m << " feasible gap=" << fmt(gap) << "\n";
            }
        }
    }
    if (!cfg.out.empty()) write_file(cfg.out, records_to_csv(records));
    out << "minimize: " << records.size() - failed << "/" << records.size() << " instances passed";
    if (cfg.trials > 0) out << ", worst feasible gap " << fmt(worst_gap);
    out << "\n";
    return failed == 0 ? 0 : 1;
}

int run_solve(const RunConfig& cfg, std::ostream& out) {
    if (cfg.preset.empty()) throw UsageError("solve needs --preset");
    const Preset p = configured_preset(cfg, cfg.preset);
    const ProblemSpec spec = make_problem(p, cfg.kind);
    const int grid = cfg.grid.value_or(p.default_grid);
    const auto res = newton_solve(spec, solver_config(cfg, grid));
    const double err = max_abs_diff(res.u, sample_field(p.exact.value, res.u));
    const auto& r = res.report;
    out << "solve " << p.name << " kind=" << to_string(spec.kind) << " grid=" << grid << " iterations=" << r.iterations
        << " final_residual=" << fmt(r.final_residual_norm) << " min_sigma2=" << fmt(r.min_sigma2_over_grid)
        << " sup_error=" << fmt(err) << " " << r.message << "\n";
    if (!cfg.out.empty()) write_file(cfg.out, field_to_csv(res.u));
    if (!cfg.report.empty()) {
        nlohmann::ordered_json j;
        j["preset"] = p.name;
        j["kind"] = to_string(spec.kind);
        j["dim"] = p.dim;
        j["grid"] = grid;
        j["h"] = res.u.h();
        j["iterations"] = r.iterations;
        j["final_residual_norm"] = r.final_residual_norm;
        j["min_sigma2_over_grid"] = r.min_sigma2_over_grid;
        j["converged"] = r.converged;
        j["message"] = r.message;
        j["residual_history"] = r.residual_history;
        j["sup_error_vs_exact"] = err;
        write_file(cfg.report, j.dump(2) + "\n");
    }
    return r.converged ? 0 : 1;
}

std::map<std::string, double> read_baseline(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::map<std::string, double> out;
    if (!std::getline(in, line) || line.rfind("instance_id,", 0) != 0) {
        throw UsageError("baseline '" + path + "' lacks the doubling CSV header");
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) throw UsageError("baseline row has " + std::to_string(cells.size()) + " columns");
        out[cells[0]] = std::stod(cells[3]);
    }
    return out;
}

int run_doubling(const RunConfig& cfg, std::ostream& out) {
    const std::vector<std::string> names =
        cfg.preset.empty() || cfg.preset == "family" ? doubling_family_names() : std::vector<std::string>{cfg.preset};
    std::map<std::string, double> baseline;
    if (!cfg.baseline.empty()) baseline = read_baseline(cfg.baseline);

    std::string csv = doubling_csv_header();
    std::string json = "[\n";
    int failed = 0;
    int flagged = 0;
    for (std::size_t k = 0; k < names.size(); ++k) {
        const Preset p = configured_preset(cfg, names[k]);
        const ProblemSpec spec = make_problem(p, cfg.kind);
        const int grid = cfg.grid.value_or(p.default_grid);
        const auto res = newton_solve(spec, solver_config(cfg, grid));
        if (!res.report.converged) {
            ++failed;
            out << "FAIL " << p.name << " solve did not converge (" << res.report.message << ")\n";
            continue;
        }
        const auto rep = doubling_report(res.u, spec);
        csv += doubling_csv_row(p.name, rep);
        json += (k ? ",\n" : "") + doubling_to_json(rep, p.name);
        const bool flag = !rep.condition_holds || !rep.two_convex;
        flagged += flag ? 1 : 0;
        out << (flag ? "FLAGGED " : "OK ") << p.name << " M1=" << fmt(rep.M1) << " M2=" << fmt(rep.M2)
            << " ratio=" << fmt(rep.ratio) << " dyn_margin=" << fmt(rep.dyn_margin)
            << " semiconvex_modulus=" << fmt(rep.semiconvex_modulus) << "\n";
        if (!cfg.baseline.empty()) {
            const auto it = baseline.find(p.name);
            if (it == baseline.end()) {
                ++failed;
                out << "FAIL " << p.name << " has no baseline row\n";
            } else if (std::abs(rep.ratio / it->second - 1.0) > cfg.baseline_tolerance) {
                ++failed;
                out << "FAIL " << p.name << " ratio " << fmt(rep.ratio) << " drifts from baseline " << fmt(it->second)
                    << "\n";
            }
        }
    }
    json += "\n]\n";
    if (!cfg.out.empty()) write_file(cfg.out, csv);
    if (!cfg.report.empty()) write_file(cfg.report, json);
    out << "doubling: " << names.size() << " instances, " << flagged << " flagged, " << failed << " failed\n";
    return failed == 0 && flagged == 0 ? 0 : 1;
}

}  // namespace

std::vector<int> parse_dims(const std::string& text) {
    std::vector<int> dims;
    std::stringstream ss(text);
    std::string part;
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty()) throw UsageError("bad dimension list '" + text + "'");
        return v;
    };
    while (std::getline(ss, part, ',')) {
        const auto dash = part.find('-');
        if (dash == std::string::npos) {
            dims.push_back(to_int(part));
        } else {
            const int lo = to_int(part.substr(0, dash));
            const int hi = to_int(part.substr(dash + 1));
            if (hi < lo) throw UsageError("bad dimension range '" + part + "'");
            for (int d = lo; d <= hi; ++d) dims.push_back(d);
        }
    }
    if (dims.empty()) throw UsageError("empty dimension list");
    for (int d : dims) {
        if (d < 2) throw UsageError("dimensions must be >= 2");
    }
    return dims;
}

RunConfig parse_config(const std::vector<std::string>& argv) {
    CLI::App app{"Hessian quotient verification laboratory", "hqlab"};
    app.require_subcommand(1, 1);
    app.fallthrough(false);

    std::string config_path, dims_text, out, report, preset, kind_text, instances, baseline, initial_guess;
    std::uint64_t seed = 0;
    long samples = 0;
    int grid = 0, dim = 0, trials = 0, max_iters = 0;
    unsigned workers = 0;
    double extent = 0, residual_tol = 0, linear_tol = 0, damping = 0, baseline_tol = 0;
    bool no_guard = false;

    struct Sub {
        CLI::App* app;
        std::map<std::string, CLI::Option*> opts;
    };
    std::map<std::string, Sub> subs;
    auto common = [&](const std::string& name, const std::string& desc) -> Sub& {
        Sub& s = subs[name];
        s.app = app.add_subcommand(name, desc);
        s.opts["config"] = s.app->add_option("--config", config_path, "JSON file with default values");
        s.opts["out"] = s.app->add_option("--out", out, "CSV output path");
        return s;
    };

    auto& verify = common("verify", "randomized inequality and identity suite");
    verify.opts["samples"] = verify.app->add_option("--samples", samples, "samples per dimension (default 100000)");
    verify.opts["dims"] = verify.app->add_option("--dims", dims_text, "dimension list, e.g. 3 or 2,4 or 2-6");
    verify.opts["seed"] = verify.app->add_option("--seed", seed, "base seed");
    verify.opts["workers"] = verify.app->add_option("--workers", workers, "worker threads (0 = all cores)");

    auto& minimize = common("minimize", "closed-form Lagrange minimum against the KKT oracle");
    minimize.opts["instances"] = minimize.app->add_option("--instances", instances, "JSON-lines instance file");
    minimize.opts["samples"] = minimize.app->add_option("--samples", samples, "random instances when no file is given");
    minimize.opts["seed"] = minimize.app->add_option("--seed", seed, "base seed");
    minimize.opts["trials"] = minimize.app->add_option("--trials", trials, "feasible-sampling trials per instance");

    auto solver_opts = [&](Sub& s) {
        s.opts["preset"] = s.app->add_option("--preset", preset, "problem preset");
        s.opts["grid"] = s.app->add_option("--grid", grid, "grid points per axis");
        s.opts["kind"] = s.app->add_option("--kind", kind_text, "quotient | sigma2");
        s.opts["dim"] = s.app->add_option("--dim", dim, "expected dimension of the preset");
        s.opts["extent"] = s.app->add_option("--extent", extent, "half width of the cube domain");
        s.opts["report"] = s.app->add_option("--report", report, "JSON report path");
        s.opts["residual_tol"] = s.app->add_option("--residual-tol", residual_tol, "Newton residual tolerance");
        s.opts["linear_solver_tol"] = s.app->add_option("--linear-tol", linear_tol, "3D linear solver tolerance");
        s.opts["max_newton_iters"] = s.app->add_option("--max-iters", max_iters, "Newton iteration cap");
        s.opts["damping"] = s.app->add_option("--damping", damping, "line-search shrink factor");
        s.opts["cone_guard"] = s.app->add_flag("--no-cone-guard", no_guard, "accept iterates outside Gamma_2");
        s.opts["initial_guess"] = s.app->add_option("--initial-guess", initial_guess, "quadratic_fit");
    };
    auto& solve = common("solve", "damped Newton solve of a preset problem");
    solver_opts(solve);
    auto& doubling = common("doubling", "doubling report on solved presets (default: the family)");
    solver_opts(doubling);
    doubling.opts["baseline"] = doubling.app->add_option("--baseline", baseline, "baseline CSV to compare ratios against");
    doubling.opts["baseline_tolerance"] =
        doubling.app->add_option("--baseline-tolerance", baseline_tol, "relative ratio tolerance (default 0.05)");

    std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
    if (!args.empty() && !args.front().empty() && args.front()[0] != '-' && !subs.count(args.front())) {
        throw UsageError("unknown command '" + args.front() + "' (expected verify|minimize|solve|doubling)");
    }
    std::reverse(args.begin(), args.end());
    RunConfig cfg;
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        cfg.command = "help";
        cfg.help_text = app.help();
        return cfg;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    for (auto& [name, s] : subs) {
        if (s.app->parsed()) {
            cfg.command = name;
            if (s.opts["config"]->count()) {
                nlohmann::json j;
                try {
                    j = nlohmann::json::parse(read_file(config_path));
                } catch (const nlohmann::json::exception& e) {
                    throw UsageError(std::string("config: ") + e.what());
                }
                apply_json(cfg, j);
            }
            auto given = [&](const char* key) {
                const auto it = s.opts.find(key);
                return it != s.opts.end() && it->second->count() > 0;
            };
            if (given("seed")) cfg.seed = seed;
            if (given("samples")) cfg.samples = samples;
            if (given("dims")) cfg.dims = parse_dims(dims_text);
            if (given("workers")) cfg.workers = workers;
            if (given("out")) cfg.out = out;
            if (given("report")) cfg.report = report;
            if (given("instances")) cfg.instances = instances;
            if (given("trials")) cfg.trials = trials;
            if (given("preset")) cfg.preset = preset;
            if (given("grid")) cfg.grid = grid;
            if (given("kind")) cfg.kind = parse_operator_kind(kind_text);
            if (given("dim")) cfg.dim = dim;
            if (given("extent")) cfg.extent = extent;
            if (given("residual_tol")) cfg.residual_tol = residual_tol;
            if (given("linear_solver_tol")) cfg.linear_solver_tol = linear_tol;
            if (given("max_newton_iters")) cfg.max_newton_iters = max_iters;
            if (given("damping")) cfg.damping = damping;
            if (given("cone_guard")) cfg.cone_guard = !no_guard;
            if (given("initial_guess")) cfg.initial_guess = initial_guess;
            if (given("baseline")) cfg.baseline = baseline;
            if (given("baseline_tolerance")) cfg.baseline_tolerance = baseline_tol;
        }
    }
    if (cfg.samples < 1) throw UsageError("--samples must be >= 1");
    if (cfg.grid && *cfg.grid < 5) throw UsageError("--grid must be >= 5");
    if (cfg.trials < 0) throw UsageError("--trials must be >= 0");
    return cfg;
}

int run(const RunConfig& cfg, std::ostream& out) {
    if (cfg.command == "help") {
        out << cfg.help_text;
        return 0;
    }
    if (cfg.command == "verify") return run_verify(cfg, out);
    if (cfg.command == "minimize") return run_minimize(cfg, out);
    if (cfg.command == "solve") return run_solve(cfg, out);
    if (cfg.command == "doubling") return run_doubling(cfg, out);
    throw UsageError("unknown command '" + cfg.command + "'");
}

int main_entry(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    try {
        return run(parse_config(argv), out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << e.name() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace hqlab
