#pragma once

#include <string>
#include <vector>

#include "qdetect/boundary.hpp"
#include "qdetect/core.hpp"
#include "qdetect/kernel.hpp"

namespace qdetect::fredholm {

// Affine bounds on b: lower(phi1) = -(p1/p2) phi1 + lambda/(p2 c),
// upper(phi1) = phi2* - (phi2*/phi1*) phi1, with phi_i* the threshold of
// coordinate i observed alone.
struct Bounds {
    double phi1_star = 0.0;
    double phi2_star = 0.0;
    double lower_slope = 0.0, lower_intercept = 0.0;

    double lower(double phi1) const { return lower_intercept + lower_slope * phi1; }
    double upper(double phi1) const { return phi2_star - phi2_star / phi1_star * phi1; }
};

Bounds boundary_bounds(const ProblemParams& params);

struct PicardSpec {
    int nodes = 64;
    double tol_sup = 1e-3;
    int max_iter = 50;
    // root tolerance in phi2 units; 0 picks tol_sup/20
    double root_tol = 0.0;
    // compute the per-node Monte Carlo error of the converged boundary
    bool node_errors = true;
};

// Picard iteration on a cosine grid over [0, phi1*]. Each sweep freezes the
// current curve s and, node by node, finds the vertical shift d for which
// the integral at (phi1, s(phi1) + d), taken over the region below s + d,
// vanishes. The new node value s(phi1) + d is kept inside the affine
// bounds; the sweep ends with a nonincreasing projection. When p1 > p2 the
// mirrored problem is solved and the curve inverted, so the grid always
// runs along the flatter direction. p1 in {0, 1} goes to one_dim_boundary.
Boundary2D picard_solve(const ProblemParams& params, const PicardSpec& spec, const kernel::FlowSpec& flow);

// p1 in {0, 1}: the stopping set of the observed coordinate, from the 1-D threshold.
Boundary2D one_dim_boundary(const ProblemParams& params);

// Same on a prepared ensemble, with the ensemble's params.
Boundary2D picard_solve(const kernel::FlowEnsemble& ens, const PicardSpec& spec);

// Inverse of a decreasing boundary: D = {phi2 >= b(phi1)} read with the
// coordinates exchanged.
Boundary2D mirror(const Boundary2D& b);

struct ValueEval {
    double value = 0.0;
    double std_error = 0.0;
    double tail_bound = 0.0;
};

// int_0^T e^{-lambda t} K(t; phi) dt with the region of b.
ValueEval value_2d(const Point2& p, const Boundary2D& b, const kernel::FlowEnsemble& ens);

// (1 - pi)(1 + c V(f, f)), f = pi/(1 - pi)
ValueEval value_initial_problem(double pi, const Boundary2D& b, const kernel::FlowEnsemble& ens);

// the integral at (phi1, b(phi1)) for every grid node
std::vector<double> fredholm_residual(const Boundary2D& b, const kernel::FlowEnsemble& ens);

struct BoundaryCheck {
    bool decreasing = true;
    bool convex = true;
    bool within_bounds = true;
    bool class_condition = true;
    double max_concavity = 0.0;  // largest excess of b over the chord of its neighbours
    double max_bound_violation = 0.0;
    std::vector<int> outside;  // interior nodes not strictly between the lines

    bool ok() const { return decreasing && convex && within_bounds && class_condition; }
};

BoundaryCheck check_boundary(const Boundary2D& b, const ProblemParams& params, double tol_convex);

// max over grid nodes in [0, phi_zero] of |b(b(phi1)) - phi1|
double involution_error(const Boundary2D& b);

std::string boundary_csv(const Boundary2D& b);
std::string boundary_json(const Boundary2D& b, const ProblemParams& params, const std::vector<double>& residuals);

}  // namespace qdetect::fredholm
