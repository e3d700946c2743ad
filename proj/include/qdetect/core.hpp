#pragma once

namespace qdetect {

struct ProblemParams {
    double lambda = 1.0;
    double mu = 1.0;
    double c = 1.0;
    double p1 = 0.5;
    double p2 = 0.5;
    double pi = 0.0;
};

struct DerivedConstants {
    double kappa;
    double nu1;
    double nu2;
    double phi0_init;
};

struct Point2 {
    double phi1 = 0.0;
    double phi2 = 0.0;
};

// Normalizes p2 = 1 - p1 and rejects invalid inputs.
ProblemParams validate_params(const ProblemParams& raw);

DerivedConstants derive(const ProblemParams& params);

// Throws DomainError unless both coordinates are finite and nonnegative.
void check_point(const Point2& p);

double lagrangian_L(const Point2& p, const ProblemParams& params);

inline double lagrangian_L(double phi1, double phi2, const ProblemParams& params) {
    return params.p1 * phi1 + params.p2 * phi2 - params.lambda / params.c;
}

// The 1-D problem obtained by observing a single coordinate: the cost c is
// replaced by p*c (rate lambda/(p c)).
ProblemParams one_dim_params(const ProblemParams& params, double weight);

}  // namespace qdetect
