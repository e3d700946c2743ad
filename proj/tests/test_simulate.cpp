#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "qdetect/error.hpp"
#include "qdetect/kernel.hpp"
#include "qdetect/onedim.hpp"
#include "qdetect/simulate.hpp"

using namespace qdetect;
using namespace qdetect::simulate;

namespace {

const ProblemParams fig1{1, 1, 1, 0.5, 0.5, 0};

ProblemParams with_pi(double pi) {
    ProblemParams p = fig1;
    p.pi = pi;
    return p;
}

// |p_hat - p| within z binomial standard errors
bool binomial_ok(double hits, double n, double p, double z = 4.0) {
    return std::abs(hits / n - p) <= z * std::sqrt(p * (1 - p) / n);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / double(a.size()) - double(j) / double(b.size())));
    }
    return d;
}

Boundary2D straight_boundary(double height) {
    Boundary2D b;
    b.phi1_grid = {0.0, height};
    b.b_values = {height, 0.0};
    b.std_error = {0.0, 0.0};
    b.phi_zero = height;
    return b;
}

}  // namespace

TEST_CASE("scenario law") {
    const int n = 100000;
    const ProblemParams p = with_pi(0.3);
    int atom = 0, beta1 = 0;
    for (int i = 0; i < n; ++i) {
        const Scenario s = sample_scenario(p, 3, uint64_t(i));
        if (s.theta == 0.0) ++atom;
        if (s.beta == 1) ++beta1;
        CHECK(s.theta >= 0.0);
    }
    CHECK(binomial_ok(atom, n, 0.3));
    CHECK(binomial_ok(beta1, n, 0.5));

    int late = 0;
    for (int i = 0; i < n; ++i)
        if (sample_scenario(fig1, 4, uint64_t(i)).theta > 1.0) ++late;
    CHECK(binomial_ok(late, n, std::exp(-1.0)));

    ProblemParams one = fig1;
    one.p1 = 1.0;
    one.p2 = 0.0;
    for (int i = 0; i < 2000; ++i) CHECK(sample_scenario(one, 5, uint64_t(i)).beta == 1);

    const Scenario a = sample_scenario(p, 3, 17), b = sample_scenario(p, 3, 17);
    CHECK(a.theta == b.theta);
    CHECK(a.beta == b.beta);
}

TEST_CASE("observation paths") {
    const auto grid = kernel::uniform_grid(5.0, 0.01);
    const int n = 4000;
    Scenario never{1e9, 1, 0}, now{0.0, 1, 0};
    double s_never = 0, s1 = 0, s2 = 0, sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        const auto o = simulate_observation(never, fig1, grid, 9, uint64_t(i));
        s_never += o.x1.back();
        const auto d = simulate_observation(now, fig1, grid, 10, uint64_t(i));
        s1 += d.x1.back();
        s2 += d.x2.back();
        const double u = o.x1[1] - o.x1[0], v = o.x2[1] - o.x2[0];
        sxy += u * v;
        sxx += u * u;
        syy += v * v;
    }
    const double se = std::sqrt(5.0 / n);
    CHECK(std::abs(s_never / n) < 4 * se);
    CHECK(std::abs(s1 / n - 5.0 * fig1.mu) < 4 * se);
    CHECK(std::abs(s2 / n) < 4 * se);
    CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 4 / std::sqrt(double(n)));

    // the step containing theta gets drift for the time after theta only
    Scenario mid{0.25, 2, 0};
    const std::vector<double> g2{0.0, 1.0};
    const auto base = simulate_observation(never, fig1, g2, 1, 0);
    const auto shifted = simulate_observation(mid, fig1, g2, 1, 0);
    CHECK(shifted.x2[1] - base.x2[1] == doctest::Approx(0.75 * fig1.mu));
    CHECK(shifted.x1[1] == base.x1[1]);
    CHECK_THROWS_AS(simulate_observation(now, fig1, {0.5, 1.0}, 1, 0), Error);
}

TEST_CASE("posterior ratio from observations") {
    const ProblemParams p = with_pi(0.2);
    const auto grid = kernel::uniform_grid(1.0, 1e-3);
    const auto o = simulate_observation(Scenario{1e9, 1, 0}, p, grid, 2, 0);
    const auto phi = phi_from_observations(o, p);
    CHECK(phi.phi1[0] == doctest::Approx(0.25));
    CHECK(phi.phi2[0] == doctest::Approx(0.25));

    ObservationPath flat;
    flat.times = grid;
    flat.x1.assign(grid.size(), 0.0);
    flat.x2.assign(grid.size(), 0.0);
    const auto z = phi_from_observations(flat, fig1);
    CHECK(z.phi1.back() == doctest::Approx(2 * (std::exp(0.5) - 1)).epsilon(1e-6));
    CHECK(z.phi2.back() == z.phi1.back());
}

TEST_CASE("posterior ratio law matches the exact flow without a change") {
    const auto grid = kernel::uniform_grid(1.0, 1e-3);
    const int n = 5000;
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
        const auto o = simulate_observation(Scenario{1e9, 1, 0}, fig1, grid, 21, uint64_t(i));
        a.push_back(phi_from_observations(o, fig1).phi1.back());
        b.push_back(kernel::sample_phi_exact({0, 0}, grid, fig1, 22, uint64_t(i)).phi1.back());
    }
    // 1% two-sample critical value
    CHECK(ks_statistic(a, b) < 1.628 * std::sqrt(2.0 / n));
}

TEST_CASE("rule thresholds") {
    const DetectorRule s = sum_rule(fig1);
    ProblemParams z = fig1;
    z.mu = fig1.mu / std::sqrt(2.0);
    CHECK(s.threshold == doctest::Approx(onedim::solve_phi_star(z).phi_star));
    const DetectorRule c1 = single_channel_rule(fig1, 1);
    CHECK(c1.threshold == doctest::Approx(onedim::solve_phi_star_weighted(fig1, 0.5).phi_star));
    CHECK(c1.name() == "single_channel_1");
    CHECK(fixed_time_rule(0).name() == "fixed_time_0");
    CHECK_THROWS_AS(single_channel_rule(fig1, 3), Error);
    CHECK_THROWS_AS(fixed_time_rule(-1), Error);
}

TEST_CASE("detector stopping times") {
    const auto grid = kernel::uniform_grid(10.0, 1e-3);
    for (int i = 0; i < 200; ++i) {
        const Scenario sc = sample_scenario(fig1, 8, uint64_t(i));
        const auto o = simulate_observation(sc, fig1, grid, 8, uint64_t(i));
        const StopResult lo = run_detector(optimal_rule(straight_boundary(1.5)), o, fig1);
        const StopResult hi = run_detector(optimal_rule(straight_boundary(2.5)), o, fig1);
        CHECK(hi.tau >= lo.tau);
        // the sum rule is the 1-D rule applied to the normalized sum channel
        const StopResult sr = run_detector(sum_rule(fig1), o, fig1);
        ObservationPath zpath = o;
        for (size_t k = 0; k < o.times.size(); ++k) zpath.x1[k] = (o.x1[k] + o.x2[k]) / std::sqrt(2.0);
        ProblemParams z = fig1;
        z.mu = fig1.mu / std::sqrt(2.0);
        const auto zphi = phi_from_observations(zpath, z);
        double tz = o.times.back();
        for (size_t k = 0; k < zphi.times.size(); ++k)
            if (zphi.phi1[k] >= sum_rule(fig1).threshold) {
                tz = zphi.times[k];
                break;
            }
        CHECK(sr.tau == doctest::Approx(tz));
    }
    // started inside the stopping set
    const ProblemParams p = with_pi(0.9);
    const auto o = simulate_observation(sample_scenario(p, 1, 0), p, grid, 1, 0);
    const StopResult r = run_detector(optimal_rule(straight_boundary(2.5)), o, p);
    CHECK(r.tau == 0.0);
    CHECK(r.stopped);
}

TEST_CASE("stopping at zero costs one minus pi") {
    RiskSpec spec;
    spec.n_paths = 20000;
    spec.seed = 4;
    spec.half_step = false;
    const auto rep = estimate_bayes_risk({fixed_time_rule(0.0)}, with_pi(0.3), spec);
    REQUIRE(rep.size() == 1);
    CHECK(rep[0].expected_delay.mean == 0.0);
    CHECK(binomial_ok(rep[0].false_alarm_prob.mean * spec.n_paths, spec.n_paths, 0.7));
    CHECK(rep[0].bayes_risk.mean == rep[0].false_alarm_prob.mean);
}

TEST_CASE("risk engine") {
    RiskSpec spec;
    spec.n_paths = 4000;
    spec.seed = 6;
    spec.dt = 2e-3;
    spec.horizon = 8.0;
    spec.keep_outcomes = true;
    const std::vector<DetectorRule> rules{sum_rule(fig1), single_channel_rule(fig1, 2),
                                          optimal_rule(straight_boundary(2.4))};
    const auto rep = estimate_bayes_risk(rules, fig1, spec);
    REQUIRE(rep.size() == 3);
    for (const auto& r : rep) {
        CHECK(r.bayes_risk.mean == r.false_alarm_prob.mean + fig1.c * r.expected_delay.mean);
        CHECK(r.half_step_done);
        CHECK(std::abs(r.half_step_risk - r.bayes_risk.mean) < 0.02);
        CHECK(r.outcomes.size() == 4000);
    }
    CHECK(rep[0].paired_difference.mean == 0.0);
    CHECK(rep[1].paired_difference.mean ==
          doctest::Approx(rep[1].bayes_risk.mean - rep[0].bayes_risk.mean).epsilon(1e-12));
    // the engine and the path-by-path detector agree
    const auto grid = kernel::uniform_grid(spec.horizon, spec.dt);
    for (int i = 0; i < 40; ++i) {
        const Scenario sc = sample_scenario(fig1, spec.seed, uint64_t(i));
        const auto o = simulate_observation(sc, fig1, grid, spec.seed, uint64_t(i));
        for (size_t r = 0; r < rules.size(); ++r) {
            const StopResult s = run_detector(rules[r], o, fig1);
            CHECK(s.tau == doctest::Approx(rep[r].outcomes[size_t(i)].tau).epsilon(1e-9));
            CHECK(rep[r].outcomes[size_t(i)].theta == sc.theta);
        }
    }
    // same seed, same numbers
    const auto again = estimate_bayes_risk(rules, fig1, spec);
    CHECK(again[2].bayes_risk.mean == rep[2].bayes_risk.mean);
    CHECK(outcomes_csv(again[0]) == outcomes_csv(rep[0]));
    CHECK(outcomes_csv(rep[0]).rfind("# qdetect-outcomes-v1", 0) == 0);

    RiskSpec few = spec;
    few.n_paths = 10;
    CHECK_THROWS_AS(estimate_bayes_risk(rules, fig1, few), Error);
}
