#pragma once

#include "qdetect/core.hpp"
#include "qdetect/quadrature.hpp"

namespace qdetect::mayer {

struct MayerEval {
    double value = 0.0;
    double est_error = 0.0;
};

// I(v) = int_0^v u^(k-1) (1-u)^-(k+2) exp(-k/u) du
double inner_integral(double v, double kappa, const QuadratureSpec& quad = {});

// h(x) = ((1-v)/v)^k exp(k/v) I(v) with v = x/(1+x). Writing y = u/(1-u)
// and k/y = k/x + s inside I gives
//   h(x) = (x/k) int_0^inf (1+bs)^-(k+1) (1 + x/(1+bs)) e^-s ds,  b = x/k,
// which stays O(x) with no overflow or cancellation.
QuadResult scaled_inner(double x, double kappa, const QuadratureSpec& quad = {});

// int_a^b h(xi)/(1+xi)^2 dxi, the outer integral written in xi = v/(1-v)
QuadResult outer_integral(double a, double b, double kappa, const QuadratureSpec& quad = {});

MayerEval mayer_m_1d(double phi, double kappa, double mu, const QuadratureSpec& quad = {});

MayerEval mayer_m_2d(const Point2& p, const ProblemParams& params, const QuadratureSpec& quad = {});

double mayer_identity_residual(const Point2& p, const ProblemParams& params, double h,
                               const QuadratureSpec& quad = {});

double ode_solution_y(double x, double kappa, double nu, const QuadratureSpec& quad = {});

// |x^2 y'' + k(1+x) y' - k y - nu x| by central differences
double ode_residual(double x, double kappa, double nu, double h, const QuadratureSpec& quad = {});

// z(u) = (1-u) y(u/(1-u)); returns |u^2(1-u) z'' + k z' - nu u/(1-u)|
double substitution_residual(double u, double kappa, double nu, double h, const QuadratureSpec& quad = {});

}  // namespace qdetect::mayer
