#include "qdetect/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "qdetect/error.hpp"
#include "qdetect/onedim.hpp"
#include "qdetect/parallel.hpp"
#include "qdetect/rng.hpp"

namespace qdetect::simulate {

Scenario sample_scenario(const ProblemParams& params, uint64_t seed, uint64_t index) {
    const RngStream rng(seed, stream_id(index, StreamTag::Scenario));
    double u1, u2, u3, u4;
    rng.uniforms_at(0, u1, u2);
    rng.uniforms_at(1, u3, u4);
    Scenario s;
    s.seed = seed;
    s.theta = u1 < params.pi ? 0.0 : -std::log(u2) / params.lambda;
    s.beta = u3 < params.p1 ? 1 : 2;
    return s;
}

namespace {

// drift time of [t0, t1] after theta
inline double after(double t0, double t1, double theta) { return std::max(0.0, t1 - std::max(t0, theta)); }

inline double phi_step(double phi, double dx, double dt, double lam, double mu) {
    const double a = std::exp(mu * dx + (lam - 0.5 * mu * mu) * dt);
    return a * phi + 0.5 * lam * dt * (a + 1.0);
}

}  // namespace

ObservationPath simulate_observation(const Scenario& s, const ProblemParams& params, const std::vector<double>& t_grid,
                                     uint64_t seed, uint64_t index) {
    if (t_grid.empty() || t_grid[0] != 0.0) throw Error(ErrorCode::InvalidArgument, "time grid must start at 0");
    ObservationPath o;
    o.times = t_grid;
    o.x1.assign(t_grid.size(), 0.0);
    o.x2.assign(t_grid.size(), 0.0);
    RngStream r1(seed, stream_id(index, StreamTag::Observation1));
    RngStream r2(seed, stream_id(index, StreamTag::Observation2));
    for (size_t k = 1; k < t_grid.size(); ++k) {
        const double t0 = t_grid[k - 1], t1 = t_grid[k], sd = std::sqrt(t1 - t0);
        const double d = params.mu * after(t0, t1, s.theta);
        o.x1[k] = o.x1[k - 1] + sd * r1.normal() + (s.beta == 1 ? d : 0.0);
        o.x2[k] = o.x2[k - 1] + sd * r2.normal() + (s.beta == 2 ? d : 0.0);
    }
    return o;
}

kernel::PhiPath phi_from_observations(const ObservationPath& obs, const ProblemParams& params) {
    kernel::PhiPath p;
    p.times = obs.times;
    const double phi0 = params.pi / (1.0 - params.pi);
    const size_t n = obs.times.size();
    p.phi1.assign(n, phi0);
    p.phi2.assign(n, phi0);
    for (size_t k = 1; k < n; ++k) {
        const double dt = obs.times[k] - obs.times[k - 1];
        p.phi1[k] = phi_step(p.phi1[k - 1], obs.x1[k] - obs.x1[k - 1], dt, params.lambda, params.mu);
        p.phi2[k] = phi_step(p.phi2[k - 1], obs.x2[k] - obs.x2[k - 1], dt, params.lambda, params.mu);
    }
    return p;
}

std::string DetectorRule::name() const {
    switch (kind) {
        case RuleKind::optimal_2d: return "optimal";
        case RuleKind::single_channel: return "single_channel_" + std::to_string(channel);
        case RuleKind::sum_rule: return "sum_rule";
        case RuleKind::fixed_time: {
            char buf[48];
            std::snprintf(buf, sizeof buf, "fixed_time_%g", time);
            return buf;
        }
    }
    return "unknown";
}

DetectorRule optimal_rule(const Boundary2D& b) {
    DetectorRule r;
    r.kind = RuleKind::optimal_2d;
    r.region = region_curve(b);
    r.phi_zero = b.phi_zero;
    return r;
}

DetectorRule single_channel_rule(const ProblemParams& params, int channel) {
    if (channel != 1 && channel != 2) throw Error(ErrorCode::InvalidArgument, "channel must be 1 or 2");
    DetectorRule r;
    r.kind = RuleKind::single_channel;
    r.channel = channel;
    r.threshold = onedim::solve_phi_star_weighted(params, channel == 1 ? params.p1 : params.p2).phi_star;
    return r;
}

DetectorRule sum_rule(const ProblemParams& params) {
    DetectorRule r;
    r.kind = RuleKind::sum_rule;
    ProblemParams z = params;
    z.mu = params.mu / std::sqrt(2.0);
    r.threshold = onedim::solve_phi_star(z).phi_star;
    return r;
}

DetectorRule fixed_time_rule(double t) {
    if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "fixed time must be nonnegative");
    DetectorRule r;
    r.kind = RuleKind::fixed_time;
    r.time = t;
    return r;
}

namespace {

struct State {
    double t, f1, f2, fz;
};

inline bool stops(const DetectorRule& r, const State& s) {
    switch (r.kind) {
        case RuleKind::optimal_2d: return s.f1 >= r.phi_zero || s.f2 >= r.region(s.f1);
        case RuleKind::single_channel: return (r.channel == 1 ? s.f1 : s.f2) >= r.threshold;
        case RuleKind::sum_rule: return s.fz >= r.threshold;
        case RuleKind::fixed_time: return s.t >= r.time - 1e-12;
    }
    return false;
}

// One increment of the state; dx are the channel increments.
inline void advance(State& s, double dx1, double dx2, double dt, const ProblemParams& p, double muz) {
    s.f1 = phi_step(s.f1, dx1, dt, p.lambda, p.mu);
    s.f2 = phi_step(s.f2, dx2, dt, p.lambda, p.mu);
    s.fz = phi_step(s.fz, (dx1 + dx2) / std::sqrt(2.0), dt, p.lambda, muz);
    s.t += dt;
}

}  // namespace

StopResult run_detector(const DetectorRule& rule, const ObservationPath& obs, const ProblemParams& params) {
    const double phi0 = params.pi / (1.0 - params.pi), muz = params.mu / std::sqrt(2.0);
    State s{0.0, phi0, phi0, phi0};
    if (stops(rule, s)) return {0.0, true};
    for (size_t k = 1; k < obs.times.size(); ++k) {
        advance(s, obs.x1[k] - obs.x1[k - 1], obs.x2[k] - obs.x2[k - 1], obs.times[k] - obs.times[k - 1], params,
                muz);
        s.t = obs.times[k];
        if (stops(rule, s)) return {s.t, true};
    }
    return {obs.times.back(), false};
}

namespace {

// Runs every rule on path i with step dt / 2^level up to the horizon. At
// level 1 each base increment is split by a Brownian bridge.
void run_path(const std::vector<DetectorRule>& rules, const ProblemParams& p, const Scenario& sc, double dt,
              double horizon, int level, uint64_t seed, uint64_t i, PathOutcome* out) {
    const double phi0 = p.pi / (1.0 - p.pi), muz = p.mu / std::sqrt(2.0);
    const size_t nr = rules.size();
    State s{0.0, phi0, phi0, phi0};
    size_t left = nr;
    for (size_t r = 0; r < nr; ++r) {
        out[r] = {0.0, sc.theta, false};
        if (stops(rules[r], s)) {
            out[r].stopped = true;
            --left;
        }
    }
    RngStream w1(seed, stream_id(i, StreamTag::Observation1)), w2(seed, stream_id(i, StreamTag::Observation2));
    RngStream b1(seed, stream_id(i, StreamTag::ObsBridge1)), b2(seed, stream_id(i, StreamTag::ObsBridge2));
    const long steps = long(std::ceil(horizon / dt - 1e-9));
    const double sd = std::sqrt(dt), sh = std::sqrt(dt / 4.0);
    auto check = [&](const State& st) {
        for (size_t r = 0; r < nr; ++r)
            if (!out[r].stopped && stops(rules[r], st)) {
                out[r].tau = st.t;
                out[r].stopped = true;
                --left;
            }
    };
    for (long k = 0; k < steps && left > 0; ++k) {
        const double t0 = k * dt;
        const double e1 = sd * w1.normal(), e2 = sd * w2.normal();
        const double m1 = sc.beta == 1 ? p.mu : 0.0, m2 = sc.beta == 2 ? p.mu : 0.0;
        if (level == 0) {
            const double a = after(t0, t0 + dt, sc.theta);
            advance(s, e1 + m1 * a, e2 + m2 * a, dt, p, muz);
            s.t = (k + 1) * dt;
            check(s);
        } else {
            const double d1 = sh * b1.normal(), d2 = sh * b2.normal();
            const double tm = t0 + 0.5 * dt;
            const double a0 = after(t0, tm, sc.theta), a1 = after(tm, t0 + dt, sc.theta);
            advance(s, 0.5 * e1 + d1 + m1 * a0, 0.5 * e2 + d2 + m2 * a0, 0.5 * dt, p, muz);
            s.t = tm;
            check(s);
            if (left == 0) break;
            advance(s, 0.5 * e1 - d1 + m1 * a1, 0.5 * e2 - d2 + m2 * a1, 0.5 * dt, p, muz);
            s.t = (k + 1) * dt;
            check(s);
        }
    }
    for (size_t r = 0; r < nr; ++r)
        if (!out[r].stopped) out[r].tau = steps * dt;
}

std::vector<PathOutcome> run_all(const std::vector<DetectorRule>& rules, const ProblemParams& p,
                                 const std::vector<Scenario>& sc, double dt, double horizon, int level, uint64_t seed) {
    const size_t nr = rules.size();
    std::vector<PathOutcome> out(sc.size() * nr);
    parallel_for(sc.size(), [&](size_t i) { run_path(rules, p, sc[i], dt, horizon, level, seed, i, &out[i * nr]); });
    return out;
}

Estimate mean_se(double s, double ss, size_t n) {
    const double m = s / double(n);
    return {m, std::sqrt(std::max(0.0, ss / double(n) - m * m) / double(n - 1))};
}

}  // namespace

std::vector<RiskReport> estimate_bayes_risk(const std::vector<DetectorRule>& rules, const ProblemParams& raw,
                                            const RiskSpec& spec) {
    const ProblemParams p = validate_params(raw);
    if (!(p.pi < 1.0)) throw Error(ErrorCode::PriorOutOfRange, "pi must be below 1");
    if (spec.n_paths < 1000) throw Error(ErrorCode::InvalidArgument, "risk estimation needs at least 1000 paths");
    if (rules.empty()) throw Error(ErrorCode::InvalidArgument, "no rules given");
    const size_t n = size_t(spec.n_paths), nr = rules.size();
    std::vector<Scenario> sc(n);
    for (size_t i = 0; i < n; ++i) sc[i] = sample_scenario(p, spec.seed, i);

    double horizon = spec.horizon > 0.0 ? spec.horizon : 10.0 / p.lambda;
    std::vector<PathOutcome> out;
    for (int grow = 0;; ++grow) {
        out = run_all(rules, p, sc, spec.dt, horizon, 0, spec.seed);
        size_t running = 0;
        for (size_t i = 0; i < n; ++i)
            for (size_t r = 0; r < nr; ++r)
                if (!out[i * nr + r].stopped) {
                    ++running;
                    break;
                }
        if (spec.horizon > 0.0 || double(running) <= 1e-3 * double(n) || grow == 4) break;
        horizon *= 2.0;
    }

    auto risk_of = [&](const PathOutcome& o) {
        return (o.tau < o.theta ? 1.0 : 0.0) + p.c * std::max(0.0, o.tau - o.theta);
    };
    std::vector<RiskReport> rep(nr);
    for (size_t r = 0; r < nr; ++r) {
        RiskReport& R = rep[r];
        R.rule = rules[r].name();
        R.n_paths = int(n);
        R.horizon = horizon;
        R.dt = spec.dt;
        double sf = 0, sff = 0, sd = 0, sdd = 0, sr = 0, srr = 0, sq = 0, sqq = 0;
        for (size_t i = 0; i < n; ++i) {
            const PathOutcome& o = out[i * nr + r];
            const double fa = o.tau < o.theta ? 1.0 : 0.0, d = std::max(0.0, o.tau - o.theta);
            const double rk = fa + p.c * d, q = rk - risk_of(out[i * nr]);
            sf += fa;
            sff += fa * fa;
            sd += d;
            sdd += d * d;
            sr += rk;
            srr += rk * rk;
            sq += q;
            sqq += q * q;
            if (!o.stopped) ++R.unstopped;
        }
        R.false_alarm_prob = mean_se(sf, sff, n);
        R.expected_delay = mean_se(sd, sdd, n);
        R.bayes_risk.mean = R.false_alarm_prob.mean + p.c * R.expected_delay.mean;
        R.bayes_risk.std_error = mean_se(sr, srr, n).std_error;
        R.paired_difference = mean_se(sq, sqq, n);
        if (spec.keep_outcomes) {
            R.outcomes.resize(n);
            for (size_t i = 0; i < n; ++i) R.outcomes[i] = out[i * nr + r];
        }
    }
    if (spec.half_step) {
        const auto half = run_all(rules, p, sc, spec.dt, horizon, 1, spec.seed);
        for (size_t r = 0; r < nr; ++r) {
            double sf = 0, sd = 0;
            for (size_t i = 0; i < n; ++i) {
                const PathOutcome& o = half[i * nr + r];
                sf += o.tau < o.theta ? 1.0 : 0.0;
                sd += std::max(0.0, o.tau - o.theta);
            }
            rep[r].half_step_risk = sf / double(n) + p.c * (sd / double(n));
            rep[r].half_step_done = true;
        }
    }
    return rep;
}

std::string risk_json(const std::vector<RiskReport>& reports, const ProblemParams& p, const RiskSpec& spec) {
    nlohmann::ordered_json j;
    j["params"] = {{"lambda", p.lambda}, {"mu", p.mu}, {"c", p.c}, {"p1", p.p1}, {"p2", p.p2}, {"pi", p.pi}};
    j["n_paths"] = spec.n_paths;
    j["seed"] = spec.seed;
    j["dt"] = spec.dt;
    auto est = [](const Estimate& e) { return nlohmann::ordered_json{{"mean", e.mean}, {"std_error", e.std_error}}; };
    j["rules"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json o;
        o["rule"] = r.rule;
        o["false_alarm_prob"] = est(r.false_alarm_prob);
        o["expected_delay"] = est(r.expected_delay);
        o["bayes_risk"] = est(r.bayes_risk);
        o["paired_difference_to_first"] = est(r.paired_difference);
        o["unstopped"] = r.unstopped;
        o["horizon"] = r.horizon;
        if (r.half_step_done) o["half_step_risk"] = r.half_step_risk;
        j["rules"].push_back(o);
    }
    return j.dump(2);
}

std::string outcomes_csv(const RiskReport& r) {
    std::string s = "# qdetect-outcomes-v1 rule=" + r.rule + "\npath,tau,theta,stopped\n";
    char buf[96];
    for (size_t i = 0; i < r.outcomes.size(); ++i) {
        const auto& o = r.outcomes[i];
        std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%d\n", i, o.tau, o.theta, o.stopped ? 1 : 0);
        s += buf;
    }
    return s;
}

}  // namespace qdetect::simulate
