#pragma once

#include <utility>

#include "qdetect/core.hpp"
#include "qdetect/quadrature.hpp"

namespace qdetect::onedim {

struct Boundary1D {
    double phi_star = 0.0;
    double residual = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};
};

double F_of(double phi, double kappa, const QuadratureSpec& quad = {});
double G_of(double phi, double kappa, double mu, double c);

// F/G = (2c/mu^2) h(phi), so the sign of F - G is that of h(phi) - mu^2/(2c).
double log_ratio_FG(double phi, double kappa, double mu, double c, const QuadratureSpec& quad = {});

// Threshold of the problem with rate lambda/c; params.p1 is ignored.
Boundary1D solve_phi_star(const ProblemParams& params, double tol = 1e-12);

// threshold of coordinate i observed alone: rate lambda/(p_i c)
Boundary1D solve_phi_star_weighted(const ProblemParams& params, double weight, double tol = 1e-12);

double value_1d(double phi, const Boundary1D& b1, const ProblemParams& params, const QuadratureSpec& quad = {});

double ode_residual_1d(double phi, const Boundary1D& b1, const ProblemParams& params, double h,
                       const QuadratureSpec& quad = {});

// (1+phi) int_{1/2}^{phi/(1+phi)} ((1-v)/v)^k e^(k/v) dv, the homogeneous
// solution multiplying A in the general solution; finite only for phi > 0.
double homogeneous_term(double phi, double kappa);

// Number of sign changes of F - G on a log grid over (lambda/c, phi_max].
int count_sign_changes(const ProblemParams& params, double phi_max, int n_points);

}  // namespace qdetect::onedim
