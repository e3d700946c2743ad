#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qdetect/core.hpp"
#include "qdetect/error.hpp"
#include "qdetect/fredholm.hpp"
#include "qdetect/io.hpp"
#include "qdetect/onedim.hpp"
#include "qdetect/parallel.hpp"
#include "qdetect/pde.hpp"
#include "qdetect/simulate.hpp"

using namespace qdetect;
using json = nlohmann::ordered_json;

namespace {

struct Options {
    double lambda = 1.0, mu = 1.0, c = 1.0, p1 = 0.5, pi = 0.0;
    uint64_t seed = 1;
    int grid = 0;
    double tol = 0.0;
    int paths = 0;
    double horizon = 0.0;
    std::string out;
    int threads = 1;

    bool one_dim = false;
    std::string boundary_file;
    std::vector<std::string> points;
    std::string rule = "optimal";
    std::vector<std::string> rules;
    double dt = 1e-3;
    bool pi_given = false;
};

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ProblemParams params_of(const Options& o) {
    ProblemParams p;
    p.lambda = o.lambda;
    p.mu = o.mu;
    p.c = o.c;
    p.p1 = o.p1;
    p.pi = o.pi;
    return validate_params(p);
}

json params_json(const ProblemParams& p) {
    return {{"lambda", p.lambda}, {"mu", p.mu}, {"c", p.c}, {"p1", p.p1}, {"p2", p.p2}, {"pi", p.pi}};
}

void emit(const Options& o, const std::string& name, json j) {
    j["timestamp"] = timestamp();
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!o.out.empty()) {
        std::filesystem::create_directories(o.out);
        io::write_file(o.out + "/" + name, text);
    }
}

void emit_file(const Options& o, const std::string& name, const std::string& text) {
    if (o.out.empty()) return;
    std::filesystem::create_directories(o.out);
    io::write_file(o.out + "/" + name, text);
}

kernel::FlowSpec flow_of(const Options& o) {
    kernel::FlowSpec f;
    if (o.paths > 0) f.n_paths = o.paths;
    f.seed = o.seed;
    f.horizon = o.horizon;
    return f;
}

fredholm::PicardSpec picard_of(const Options& o, bool use_grid) {
    fredholm::PicardSpec s;
    if (use_grid && o.grid > 0) s.nodes = o.grid;
    if (o.tol > 0.0) s.tol_sup = o.tol;
    return s;
}

// boundary from --boundary or a fresh solve on the ensemble
Boundary2D boundary_for(const Options& o, const ProblemParams& p, const kernel::FlowEnsemble& ens, bool use_grid) {
    if (!o.boundary_file.empty()) return io::parse_boundary_csv(io::read_file(o.boundary_file));
    if (p.p1 == 0.0 || p.p1 == 1.0) return fredholm::one_dim_boundary(p);
    return fredholm::picard_solve(ens, picard_of(o, use_grid));
}

json boundary_summary(const Boundary2D& b) {
    return {{"phi_zero", b.phi_zero}, {"iterations", b.iteration_count}, {"sup_update", b.sup_update},
            {"flagged", b.flagged}};
}

int cmd_boundary(const Options& o) {
    const ProblemParams p = params_of(o);
    if (o.one_dim) {
        // single observed coordinate at the given p1 (rate lambda/(p1 c)); p1 = 1 is the plain 1-D problem
        const auto b = onedim::solve_phi_star_weighted(p, p.p1 > 0.0 ? p.p1 : 1.0);
        emit(o, "boundary_1d.json",
             json{{"params", params_json(p)}, {"phi_star", b.phi_star}, {"residual", b.residual}});
        return 0;
    }
    const kernel::FlowEnsemble ens(p, flow_of(o));
    const Boundary2D b = boundary_for(o, p, ens, true);
    const auto res = fredholm::fredholm_residual(b, ens);
    emit_file(o, "boundary.csv", fredholm::boundary_csv(b));
    json j = json::parse(fredholm::boundary_json(b, p, res));
    j["paths"] = ens.n_paths();
    j["seed"] = o.seed;
    emit(o, "boundary.json", j);
    return 0;
}

int cmd_value(const Options& o) {
    const ProblemParams p = params_of(o);
    const kernel::FlowEnsemble ens(p, flow_of(o));
    const Boundary2D b = boundary_for(o, p, ens, false);
    json j{{"params", params_json(p)}, {"boundary", boundary_summary(b)}};
    if (o.pi_given) {
        const auto v = fredholm::value_initial_problem(p.pi, b, ens);
        j["pi"] = p.pi;
        j["value"] = v.value;
        j["std_error"] = v.std_error;
        j["tail_bound"] = v.tail_bound;
    } else {
        std::vector<Point2> pts;
        for (const auto& s : o.points) {
            const auto k = s.find(',');
            if (k == std::string::npos) throw CLI::ValidationError("--point", "expected phi1,phi2");
            pts.push_back({std::stod(s.substr(0, k)), std::stod(s.substr(k + 1))});
        }
        if (pts.empty()) pts.push_back({0.0, 0.0});
        j["points"] = json::array();
        for (const auto& q : pts) {
            const auto v = fredholm::value_2d(q, b, ens);
            j["points"].push_back(json{{"phi1", q.phi1},
                                       {"phi2", q.phi2},
                                       {"value", v.value},
                                       {"std_error", v.std_error},
                                       {"tail_bound", v.tail_bound}});
        }
    }
    emit(o, "value.json", j);
    return 0;
}

simulate::DetectorRule rule_of(const std::string& name, const ProblemParams& p, const std::optional<Boundary2D>& b) {
    if (name == "optimal") return simulate::optimal_rule(*b);
    if (name == "sum") return simulate::sum_rule(p);
    if (name == "single" || name == "single1") return simulate::single_channel_rule(p, 1);
    if (name == "single2") return simulate::single_channel_rule(p, 2);
    if (name == "stop-at-zero") return simulate::fixed_time_rule(0.0);
    throw CLI::ValidationError("--rule", "unknown rule " + name);
}

std::optional<Boundary2D> boundary_if_needed(const Options& o, const ProblemParams& p,
                                             const std::vector<std::string>& names) {
    for (const auto& n : names)
        if (n == "optimal") {
            if (!o.boundary_file.empty()) return io::parse_boundary_csv(io::read_file(o.boundary_file));
            kernel::FlowSpec f = flow_of(o);
            f.horizon = 0.0;
            if (p.p1 == 0.0 || p.p1 == 1.0) return fredholm::one_dim_boundary(p);
            return fredholm::picard_solve(kernel::FlowEnsemble(p, f), picard_of(o, false));
        }
    return std::nullopt;
}

simulate::RiskSpec risk_of(const Options& o) {
    simulate::RiskSpec s;
    s.n_paths = o.paths > 0 ? o.paths : 100000;
    s.dt = o.dt;
    s.horizon = o.horizon;
    s.seed = o.seed;
    return s;
}

int run_rules(const Options& o, const std::vector<std::string>& names, const std::string& file) {
    const ProblemParams p = params_of(o);
    const auto b = boundary_if_needed(o, p, names);
    std::vector<simulate::DetectorRule> rules;
    for (const auto& n : names) rules.push_back(rule_of(n, p, b));
    const auto spec = risk_of(o);
    const auto reps = simulate::estimate_bayes_risk(rules, p, spec);
    json j = json::parse(simulate::risk_json(reps, p, spec));
    if (b) j["boundary"] = boundary_summary(*b);
    if (names.size() > 1) {
        // paired differences risk(row) - risk(first row)
        json t = json::array();
        for (size_t r = 0; r < reps.size(); ++r)
            t.push_back(json{{"rule", reps[r].rule},
                             {"risk", reps[r].bayes_risk.mean},
                             {"difference", reps[r].paired_difference.mean},
                             {"difference_std_error", reps[r].paired_difference.std_error}});
        j["paired"] = t;
    }
    emit(o, file, j);
    return 0;
}

int cmd_pde_check(const Options& o) {
    const ProblemParams p = params_of(o);
    const kernel::FlowEnsemble ens(p, flow_of(o));
    const Boundary2D fb = boundary_for(o, p, ens, false);
    pde::VIGridSpec gs;
    if (o.grid > 0) gs.n1 = gs.n2 = o.grid;
    const auto g = pde::solve_vi(p, gs);
    const auto pb = pde::extract_boundary(g);
    const auto chk = pde::check_vi(g, p);
    const auto agr = pde::compare_boundaries(g, pb, fb);
    emit_file(o, "pde_boundary.csv", fredholm::boundary_csv(pb));
    emit_file(o, "fredholm_boundary.csv", fredholm::boundary_csv(fb));
    const bool pass = agr.pass && chk.triangle_inactive && chk.trigon_active && chk.up_closed;
    json j{{"params", params_json(p)},
           {"grid", {g.n1(), g.n2()}},
           {"sweeps", g.sweeps},
           {"sup_distance", agr.sup_distance},
           {"worst_ratio", agr.worst_ratio},
           {"phi_zero_pde", pb.phi_zero},
           {"phi_zero_fredholm", fb.phi_zero},
           {"phi_zero_distance", agr.phi_zero_distance},
           {"compared_nodes", agr.nodes},
           {"triangle_inactive", chk.triangle_inactive},
           {"trigon_active", chk.trigon_active},
           {"up_closed", chk.up_closed},
           {"complementarity", chk.complementarity},
           {"pass", pass}};
    emit(o, "pde_check.json", j);
    return pass ? 0 : 1;
}

// bad parameter values are a usage problem, not a solver failure
bool is_usage(ErrorCode c) {
    return c == ErrorCode::NonPositiveRate || c == ErrorCode::ZeroDrift || c == ErrorCode::PriorOutOfRange ||
           c == ErrorCode::NonFinite;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-channel quickest detection: boundaries, values and Monte Carlo risk"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.set_config("--config", "", "key=value file; command-line flags take precedence");
    app.add_option("--lambda", o.lambda, "rate of the change time")->required();
    app.add_option("--mu", o.mu, "post-change drift")->required();
    app.add_option("--c", o.c, "delay cost")->required();
    app.add_option("--p1", o.p1, "probability that channel 1 changes")->capture_default_str();
    auto* pi_opt = app.add_option("--pi", o.pi, "prior mass at time zero")->capture_default_str();
    app.add_option("--seed", o.seed, "random seed")->capture_default_str();
    app.add_option("--grid", o.grid, "boundary nodes (boundary) or PDE grid size (pde-check)");
    app.add_option("--tol", o.tol, "Picard sup-norm tolerance");
    app.add_option("--paths", o.paths, "Monte Carlo paths");
    app.add_option("--horizon", o.horizon, "time horizon (0: automatic)");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(CLI::Range(1, 1024));

    auto* boundary = app.add_subcommand("boundary", "solve for the stopping boundary");
    boundary->add_flag("--one-dim", o.one_dim, "one-dimensional threshold instead");
    auto* value = app.add_subcommand("value", "value function at points or at pi");
    value->add_option("--boundary", o.boundary_file, "boundary CSV")->check(CLI::ExistingFile);
    value->add_option("--point", o.points, "phi1,phi2 (repeatable)");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo Bayes risk of one rule");
    sim->add_option("--rule", o.rule, "optimal | sum | single | single2 | stop-at-zero")->capture_default_str();
    sim->add_option("--boundary", o.boundary_file, "boundary CSV")->check(CLI::ExistingFile);
    sim->add_option("--dt", o.dt, "simulation step")->capture_default_str();
    auto* cmp = app.add_subcommand("compare", "paired Monte Carlo comparison of rules");
    cmp->add_option("--rules", o.rules, "comma-separated rules")->delimiter(',')->required();
    cmp->add_option("--boundary", o.boundary_file, "boundary CSV")->check(CLI::ExistingFile);
    cmp->add_option("--dt", o.dt, "simulation step")->capture_default_str();
    auto* pdec = app.add_subcommand("pde-check", "compare the PDE and Fredholm boundaries");
    pdec->add_option("--boundary", o.boundary_file, "Fredholm boundary CSV")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
        if (cmp->parsed() && o.rules.size() < 2) throw CLI::ValidationError("--rules", "compare needs at least two rules");
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    o.pi_given = pi_opt->count() > 0;
    set_threads(o.threads);
    try {
        if (boundary->parsed()) return cmd_boundary(o);
        if (value->parsed()) return cmd_value(o);
        if (sim->parsed()) return run_rules(o, {o.rule}, "simulate.json");
        if (cmp->parsed()) return run_rules(o, o.rules, "compare.json");
        if (pdec->parsed()) return cmd_pde_check(o);
    } catch (const Error& e) {
        json d{{"error", to_string(e.code())}, {"message", e.what()}};
        d["diagnostics"] = json::parse(e.diagnostics(), nullptr, false);
        std::cerr << d.dump(2) << "\n";
        return is_usage(e.code()) ? 2 : 1;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Failure"}, {"message", e.what()}}.dump(2) << "\n";
        return 1;
    }
    return 2;
}
