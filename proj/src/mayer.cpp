#include "qdetect/mayer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qdetect/error.hpp"

namespace qdetect::mayer {

namespace {

std::vector<double> sigma_breaks(double b) {
    // first panel resolves the (1+bs) decay scale, the rest double out to
    // where e^-s is negligible
    double w = b > 1.0 ? 1.0 / b : 1.0;
    std::vector<double> br{0.0, w};
    while (br.back() < 60.0) br.push_back(2.0 * br.back());
    return br;
}

const std::vector<double>& unit_breaks() {
    static const std::vector<double> br = [] {
        std::vector<double> v{0.0};
        for (int j = 20; j >= 0; --j) v.push_back(std::ldexp(1.0, -j));
        return v;
    }();
    return br;
}

}  // namespace

QuadResult scaled_inner(double x, double kappa, const QuadratureSpec& quad) {
    if (x <= 0.0) return {};
    const double b = x / kappa;
    auto f = [&](double s) {
        double l = std::log1p(b * s);
        return std::exp(-(kappa + 1.0) * l - s) * (1.0 + x * std::exp(-l));
    };
    QuadResult r = quad::panels(f, sigma_breaks(b), quad);
    return {b * r.value, b * r.error};
}

double inner_integral(double v, double kappa, const QuadratureSpec& quad) {
    if (!(v > 0.0 && v < 1.0)) throw Error(ErrorCode::DomainError, "inner_integral needs v in (0,1)");
    const double x = v / (1.0 - v);
    QuadResult h = scaled_inner(x, kappa, quad);
    return std::exp(std::log(h.value) + kappa * std::log(x) - kappa / v);
}

QuadResult outer_integral(double a, double b, double kappa, const QuadratureSpec& quad) {
    if (b == a) return {};
    const double len = b - a;
    double inner_rel = 0.0;
    auto f = [&](double t) {
        double xi = a + len * t;
        QuadResult h = scaled_inner(xi, kappa, quad);
        if (h.value > 0.0) inner_rel = std::max(inner_rel, h.error / h.value);
        return h.value / ((1.0 + xi) * (1.0 + xi));
    };
    QuadResult r = quad::panels(f, unit_breaks(), quad);
    return {len * r.value, std::abs(len) * r.error + inner_rel * std::abs(len * r.value)};
}

MayerEval mayer_m_1d(double phi, double kappa, double mu, const QuadratureSpec& quad) {
    validate_quad(quad);
    if (!(phi >= 0.0) || !std::isfinite(phi)) throw Error(ErrorCode::DomainError, "M needs phi >= 0");
    if (phi == 0.0) return {};
    const double scale = 2.0 / (mu * mu) * (1.0 + phi);
    QuadResult q = outer_integral(0.0, phi, kappa, quad);
    return {scale * q.value, scale * q.error};
}

MayerEval mayer_m_2d(const Point2& p, const ProblemParams& params, const QuadratureSpec& quad) {
    check_point(p);
    const double kappa = derive(params).kappa;
    MayerEval m1 = mayer_m_1d(p.phi1, kappa, params.mu, quad);
    MayerEval m2 = mayer_m_1d(p.phi2, kappa, params.mu, quad);
    return {params.p1 * m1.value + params.p2 * m2.value + 1.0 / params.c,
            params.p1 * m1.est_error + params.p2 * m2.est_error};
}

double mayer_identity_residual(const Point2& p, const ProblemParams& params, double h,
                               const QuadratureSpec& quad) {
    check_point(p);
    if (!(h > 0.0) || p.phi1 <= 2.0 * h || p.phi2 <= 2.0 * h)
        throw Error(ErrorCode::DomainError, "residual needs a point away from the axes");
    const double kappa = derive(params).kappa, lam = params.lambda, s2 = 0.5 * params.mu * params.mu;
    auto M = [&](double x) { return mayer_m_1d(x, kappa, params.mu, quad).value; };
    double gen = 0.0, mval = 1.0 / params.c;
    const double phis[2] = {p.phi1, p.phi2}, ws[2] = {params.p1, params.p2};
    for (int i = 0; i < 2; ++i) {
        const double x = phis[i];
        const double m0 = M(x), mp = M(x + h), mm = M(x - h);
        const double d1 = (mp - mm) / (2.0 * h), d2 = (mp - 2.0 * m0 + mm) / (h * h);
        gen += ws[i] * (lam * (1.0 + x) * d1 + s2 * x * x * d2);
        mval += ws[i] * m0;
    }
    return std::abs(gen - lam * mval - lagrangian_L(p, params));
}

double ode_solution_y(double x, double kappa, double nu, const QuadratureSpec& quad) {
    validate_quad(quad);
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorCode::DomainError, "ode_solution_y needs x > 0");
    return nu * (1.0 + x) * outer_integral(0.0, x, kappa, quad).value;
}

double ode_residual(double x, double kappa, double nu, double h, const QuadratureSpec& quad) {
    if (x <= 2.0 * h) throw Error(ErrorCode::DomainError, "ode_residual needs x > 2h");
    const double y0 = ode_solution_y(x, kappa, nu, quad), yp = ode_solution_y(x + h, kappa, nu, quad),
                 ym = ode_solution_y(x - h, kappa, nu, quad);
    const double d1 = (yp - ym) / (2.0 * h), d2 = (yp - 2.0 * y0 + ym) / (h * h);
    return std::abs(x * x * d2 + kappa * (1.0 + x) * d1 - kappa * y0 - nu * x);
}

double substitution_residual(double u, double kappa, double nu, double h, const QuadratureSpec& quad) {
    if (!(u > 2.0 * h && u < 1.0 - 2.0 * h))
        throw Error(ErrorCode::DomainError, "substitution_residual needs u inside (0,1)");
    auto z = [&](double w) { return (1.0 - w) * ode_solution_y(w / (1.0 - w), kappa, nu, quad); };
    const double z0 = z(u), zp = z(u + h), zm = z(u - h);
    const double d1 = (zp - zm) / (2.0 * h), d2 = (zp - 2.0 * z0 + zm) / (h * h);
    return std::abs(u * u * (1.0 - u) * d2 + kappa * d1 - nu * u / (1.0 - u));
}

}  // namespace qdetect::mayer
