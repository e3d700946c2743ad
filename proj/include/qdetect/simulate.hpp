#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdetect/boundary.hpp"
#include "qdetect/core.hpp"
#include "qdetect/kernel.hpp"

namespace qdetect::simulate {

struct Scenario {
    double theta = 0.0;
    int beta = 1;
    uint64_t seed = 0;
};

// theta: atom pi at 0, otherwise exponential(lambda); beta = 1 with probability p1.
// Uses stream stream_id(index, Scenario).
Scenario sample_scenario(const ProblemParams& params, uint64_t seed, uint64_t index);

struct ObservationPath {
    std::vector<double> times;
    std::vector<double> x1, x2;
};

// Brownian channels with drift mu in channel beta from theta on; the step
// that straddles theta gets the drift for the part after theta only.
ObservationPath simulate_observation(const Scenario& s, const ProblemParams& params, const std::vector<double>& t_grid,
                                     uint64_t seed, uint64_t index);

// Phi^i_t = e^{mu X^i_t + (lambda - mu^2/2) t} (phi0 + lambda int_0^t e^{-mu X^i_s - (lambda - mu^2/2) s} ds),
// phi0 = pi/(1-pi), trapezoid rule per step.
kernel::PhiPath phi_from_observations(const ObservationPath& obs, const ProblemParams& params);

enum class RuleKind { optimal_2d, single_channel, sum_rule, fixed_time };

struct DetectorRule {
    RuleKind kind = RuleKind::fixed_time;
    Curve region;           // optimal_2d: stop when phi2 >= region(phi1) or phi1 >= phi_zero
    double phi_zero = 0.0;
    double threshold = 0.0;  // single_channel, sum_rule
    int channel = 1;
    double time = 0.0;       // fixed_time

    std::string name() const;
};

DetectorRule optimal_rule(const Boundary2D& b);
// 1-D rule on one channel with the threshold of that coordinate observed alone
DetectorRule single_channel_rule(const ProblemParams& params, int channel = 1);
// 1-D rule with drift mu/sqrt(2) on Z = (X1 + X2)/sqrt(2)
DetectorRule sum_rule(const ProblemParams& params);
DetectorRule fixed_time_rule(double t);

struct StopResult {
    double tau = 0.0;
    bool stopped = false;
};

// First grid time the rule's condition holds; tau = last grid time and
// stopped = false if it never does.
StopResult run_detector(const DetectorRule& rule, const ObservationPath& obs, const ProblemParams& params);

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

struct PathOutcome {
    double tau = 0.0;
    double theta = 0.0;
    bool stopped = true;
};

struct RiskReport {
    std::string rule;
    int n_paths = 0;
    Estimate false_alarm_prob, expected_delay, bayes_risk;
    int unstopped = 0;
    double horizon = 0.0, dt = 0.0;
    // the same estimate with every step halved (bridge refinement of the same paths)
    double half_step_risk = 0.0;
    bool half_step_done = false;
    // paired difference to the first rule of the batch
    Estimate paired_difference;
    std::vector<PathOutcome> outcomes;
};

struct RiskSpec {
    int n_paths = 100000;
    double dt = 1e-3;
    double horizon = 0.0;  // 0: 10/lambda, doubled while more than 0.1% of paths run on
    uint64_t seed = 1;
    bool half_step = true;
    bool keep_outcomes = false;
};

// All rules run on the same scenarios and noise.
std::vector<RiskReport> estimate_bayes_risk(const std::vector<DetectorRule>& rules, const ProblemParams& params,
                                            const RiskSpec& spec);

std::string risk_json(const std::vector<RiskReport>& reports, const ProblemParams& params, const RiskSpec& spec);
std::string outcomes_csv(const RiskReport& r);

}  // namespace qdetect::simulate
