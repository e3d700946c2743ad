#include "qdetect/onedim.hpp"

#include <cmath>
#include <sstream>

#include "qdetect/error.hpp"
#include "qdetect/mayer.hpp"

namespace qdetect::onedim {

double F_of(double phi, double kappa, const QuadratureSpec& quad) {
    if (!(phi >= 0.0)) throw Error(ErrorCode::DomainError, "F needs phi >= 0");
    if (phi == 0.0) return 0.0;
    // F(phi) = I(v) = exp(log h + k log phi - k (1+phi)/phi)
    double h = mayer::scaled_inner(phi, kappa, quad).value;
    return std::exp(std::log(h) + kappa * (std::log(phi) - (1.0 + phi) / phi));
}

double G_of(double phi, double kappa, double mu, double c) {
    if (!(phi >= 0.0)) throw Error(ErrorCode::DomainError, "G needs phi >= 0");
    if (phi == 0.0) return 0.0;
    return mu * mu / (2.0 * c) * std::exp(kappa * (std::log(phi) - (1.0 + phi) / phi));
}

double log_ratio_FG(double phi, double kappa, double mu, double c, const QuadratureSpec& quad) {
    return std::log(mayer::scaled_inner(phi, kappa, quad).value) - std::log(mu * mu / (2.0 * c));
}

Boundary1D solve_phi_star(const ProblemParams& params, double tol) {
    const ProblemParams p = validate_params(params);
    const double kappa = derive(p).kappa, rate = p.lambda / p.c;
    auto g = [&](double x) { return log_ratio_FG(x, kappa, p.mu, p.c); };
    double lo = rate * (1.0 + 1e-6), hi = 2.0 * rate;
    if (!(g(lo) < 0.0)) {
        std::ostringstream d;
        d.precision(17);
        d << "{\"lo\":" << lo << ",\"g_lo\":" << g(lo) << "}";
        throw Error(ErrorCode::BracketFailure, "F - G is not negative at lambda/c", d.str());
    }
    while (g(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300 || !std::isfinite(g(hi))) {
            std::ostringstream d;
            d.precision(17);
            d << "{\"lo\":" << lo << ",\"hi\":" << hi << "}";
            throw Error(ErrorCode::BracketFailure, "no sign change before overflow guard", d.str());
        }
    }
    const std::pair<double, double> bracket{lo, hi};
    while (hi - lo > tol * hi) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(mid) <= 0.0 ? lo : hi) = mid;
    }
    Boundary1D b;
    b.phi_star = 0.5 * (lo + hi);
    b.residual = std::abs(F_of(b.phi_star, kappa) - G_of(b.phi_star, kappa, p.mu, p.c));
    b.bracket = bracket;
    return b;
}

Boundary1D solve_phi_star_weighted(const ProblemParams& params, double weight, double tol) {
    if (!(weight > 0.0)) throw Error(ErrorCode::DomainError, "weight must be positive");
    return solve_phi_star(one_dim_params(params, weight), tol);
}

double value_1d(double phi, const Boundary1D& b1, const ProblemParams& params, const QuadratureSpec& quad) {
    if (!(phi >= 0.0)) throw Error(ErrorCode::DomainError, "value_1d needs phi >= 0");
    const double ps = b1.phi_star;
    if (phi >= ps) return 0.0;
    const double kappa = derive(params).kappa;
    const double mu2 = params.mu * params.mu;
    double integral = mayer::outer_integral(phi, ps, kappa, quad).value;
    return -(ps - phi) / (params.c * (1.0 + ps)) + 2.0 / mu2 * (1.0 + phi) * integral;
}

double ode_residual_1d(double phi, const Boundary1D& b1, const ProblemParams& params, double h,
                       const QuadratureSpec& quad) {
    if (!(phi > 0.0 && phi < b1.phi_star - 2.0 * h))
        throw Error(ErrorCode::DomainError, "ode_residual_1d needs phi inside (0, phi*)");
    const double v0 = value_1d(phi, b1, params, quad), vp = value_1d(phi + h, b1, params, quad),
                 vm = value_1d(phi - h, b1, params, quad);
    const double d1 = (vp - vm) / (2.0 * h), d2 = (vp - 2.0 * v0 + vm) / (h * h);
    const double lam = params.lambda;
    double gen = lam * (1.0 + phi) * d1 + 0.5 * params.mu * params.mu * phi * phi * d2;
    return std::abs(gen - lam * v0 + (phi - lam / params.c));
}

double homogeneous_term(double phi, double kappa) {
    if (!(phi > 0.0)) throw Error(ErrorCode::DomainError, "homogeneous term needs phi > 0");
    // s = 1/v turns the integrand into (s-1)^k e^(k s) / s^2
    const double s_end = (1.0 + phi) / phi;
    auto f = [&](double s) { return std::exp(kappa * (std::log(s - 1.0) + s)) / (s * s); };
    double a = 2.0, b = s_end, sign = 1.0;
    if (b < a) std::swap(a, b), sign = -1.0;
    std::vector<double> br{a};
    while (br.back() + 0.5 < b) br.push_back(br.back() + 0.5);
    br.push_back(b);
    QuadratureSpec q;
    q.max_subdivisions = 1024;
    double val = quad::panels(f, br, q).value;
    // dv = -ds/s^2 reverses the orientation
    return -(1.0 + phi) * sign * val;
}

int count_sign_changes(const ProblemParams& params, double phi_max, int n_points) {
    const ProblemParams p = validate_params(params);
    const double kappa = derive(p).kappa, lo = p.lambda / p.c;
    int changes = 0;
    int prev = 0;
    for (int i = 1; i <= n_points; ++i) {
        double x = lo * std::pow(phi_max / lo, double(i) / n_points);
        double g = log_ratio_FG(x, kappa, p.mu, p.c);
        int s = g > 0.0 ? 1 : (g < 0.0 ? -1 : 0);
        if (s != 0) {
            if (prev != 0 && s != prev) ++changes;
            prev = s;
        }
    }
    return changes;
}

}  // namespace qdetect::onedim
