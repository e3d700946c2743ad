#include "qdetect/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "qdetect/error.hpp"
#include "qdetect/onedim.hpp"
#include "qdetect/parallel.hpp"

namespace qdetect::pde {

std::vector<double> log_grid(double lo, double hi, int n) {
    if (n < 3 || !(lo > 0.0) || !(hi > lo)) throw Error(ErrorCode::InvalidArgument, "log grid needs 0 < lo < hi, n >= 3");
    std::vector<double> g(static_cast<size_t>(n));
    g[0] = 0.0;
    const double r = std::log(hi / lo) / (n - 2);
    for (int k = 1; k < n; ++k) g[size_t(k)] = lo * std::exp(r * (k - 1));
    g[size_t(n - 1)] = hi;
    return g;
}

namespace {

// generator coefficients of one coordinate: W_{k-1} and W_{k+1} weights
struct Coef {
    std::vector<double> m, p;
};

Coef coefficients(const std::vector<double>& g, double lam, double mu) {
    const size_t n = g.size();
    Coef c{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (size_t k = 0; k + 1 < n; ++k) {
        const double hp = g[k + 1] - g[k];
        const double drift = lam * (1.0 + g[k]);
        if (k == 0) {
            c.p[k] = drift / hp;
            continue;
        }
        const double hm = g[k] - g[k - 1];
        const double s = 0.5 * mu * mu * g[k] * g[k];
        c.m[k] = 2.0 * s / (hm * (hm + hp));
        c.p[k] = 2.0 * s / (hp * (hm + hp)) + drift / hp;
    }
    return c;
}

struct Operator {
    Coef c1, c2;
    double lam;

    double diag(size_t i, size_t j) const { return lam + c1.m[i] + c1.p[i] + c2.m[j] + c2.p[j]; }

    double off(const std::vector<double>& W, size_t n2, size_t i, size_t j) const {
        const double* r = &W[i * n2];
        double s = c1.p[i] * W[(i + 1) * n2 + j] + c2.p[j] * r[j + 1];
        if (i > 0) s += c1.m[i] * W[(i - 1) * n2 + j];
        if (j > 0) s += c2.m[j] * r[j - 1];
        return s;
    }
};

// zero of the linear extrapolation of sqrt(w) through (a, wa), (b, wb), kept in [b, e]
double sqrt_zero(double a, double wa, double b, double wb, double e) {
    const double sa = std::sqrt(wa), sb = std::sqrt(wb);
    if (!(sa > sb)) return e;
    return std::clamp(b + sb * (b - a) / (sa - sb), b, e);
}

}  // namespace

VIGrid solve_vi(const ProblemParams& raw, const VIGridSpec& spec, double omega, double tol, int max_sweeps) {
    const ProblemParams p = validate_params(raw);
    if (!(p.p1 > 0.0 && p.p1 < 1.0)) throw Error(ErrorCode::PriorOutOfRange, "the 2-D problem needs p1 in (0,1)");
    if (!(omega > 0.0 && omega < 2.0)) throw Error(ErrorCode::InvalidArgument, "omega must lie in (0,2)");
    if (!(spec.trunc_factor > 1.0)) throw Error(ErrorCode::InvalidArgument, "truncation must lie beyond phi_i*");
    VIGrid g;
    g.phi1_star = onedim::solve_phi_star_weighted(p, p.p1).phi_star;
    g.phi2_star = onedim::solve_phi_star_weighted(p, p.p2).phi_star;
    g.phi1_grid = log_grid(spec.lo, spec.trunc_factor * g.phi1_star, spec.n1);
    g.phi2_grid = log_grid(spec.lo, spec.trunc_factor * g.phi2_star, spec.n2);
    const auto& x = g.phi1_grid;
    const auto& y = g.phi2_grid;
    const size_t n1 = x.size(), n2 = y.size();
    const Operator op{coefficients(x, p.lambda, p.mu), coefficients(y, p.lambda, p.mu), p.lambda};
    const double rate = p.lambda / p.c;

    std::vector<double> W(n1 * n2, 0.0);
    std::vector<double> row_max(n1 - 1);
    int sweep = 0;
    double md = 0.0;
    for (; sweep < max_sweeps;) {
        md = 0.0;
        for (int color = 0; color < 2; ++color) {
            parallel_for(n1 - 1, [&](size_t i) {
                double m = color == 0 ? 0.0 : row_max[i];
                for (size_t j = (i + size_t(color)) % 2; j + 1 < n2; j += 2) {
                    const double L = p.p1 * x[i] + p.p2 * y[j] - rate;
                    const double gs = (op.off(W, n2, i, j) - L) / op.diag(i, j);
                    double& w = W[i * n2 + j];
                    const double nw = std::max(0.0, w + omega * (gs - w));
                    m = std::max(m, std::abs(nw - w));
                    w = nw;
                }
                row_max[i] = m;
            });
        }
        for (double m : row_max) md = std::max(md, m);
        ++sweep;
        if (md < tol) break;
        // W stays within [0, 1/c]; over-relaxed sweeps may overshoot for a while
        // before settling, so only a step far beyond that range counts as divergence
        if (!(md < 1e6 / p.c)) break;
    }
    if (!(md < tol))
        throw Error(ErrorCode::NoConvergence, md < 1e6 / p.c ? "projected SOR did not converge" : "projected SOR diverged",
                    nlohmann::json{{"sweeps", sweep}, {"max_update", md}, {"tol", tol}}.dump());
    g.sweeps = sweep;
    g.max_update = md;
    g.values.resize(n1 * n2);
    g.active_mask.resize(n1 * n2);
    for (size_t k = 0; k < W.size(); ++k) {
        g.values[k] = -W[k];
        g.active_mask[k] = W[k] <= 0.0 ? 1 : 0;
    }
    // the last interior column and row lie beyond phi_i* and must be stopped
    for (size_t i = 0; i + 1 < n1; ++i)
        if (!g.active(i, n2 - 2))
            throw Error(ErrorCode::GridTooCoarse, "continuation region reaches the phi2 truncation edge");
    for (size_t j = 0; j + 1 < n2; ++j)
        if (!g.active(n1 - 2, j))
            throw Error(ErrorCode::GridTooCoarse, "continuation region reaches the phi1 truncation edge");
    return g;
}

Boundary2D extract_boundary(const VIGrid& g) {
    const auto& x = g.phi1_grid;
    const auto& y = g.phi2_grid;
    const size_t n1 = x.size(), n2 = y.size();
    Boundary2D b;
    b.phi1_grid = x;
    b.b_values.assign(n1, 0.0);
    std::vector<size_t> first(n1, n2);
    for (size_t i = 0; i < n1; ++i) {
        size_t j = 0;
        while (j < n2 && !g.active(i, j)) ++j;
        first[i] = j;
        if (j == 0) continue;
        if (j == n2) throw Error(ErrorCode::GridTooCoarse, "column without stopping nodes");
        if (j == 1)
            b.b_values[i] = 0.5 * y[1];
        else
            b.b_values[i] = sqrt_zero(y[j - 2], -g.v(i, j - 2), y[j - 1], -g.v(i, j - 1), y[j]);
    }
    // phi0 from the axis row
    size_t i0 = 0;
    while (i0 < n1 && !g.active(i0, 0)) ++i0;
    if (i0 == 0)
        b.phi_zero = 0.0;
    else if (i0 == 1)
        b.phi_zero = 0.5 * x[1];
    else
        b.phi_zero = sqrt_zero(x[i0 - 2], -g.v(i0 - 2, 0), x[i0 - 1], -g.v(i0 - 1, 0), x[i0]);
    for (size_t i = 0; i + 1 < n1; ++i)
        if (first[i + 1] > first[i] + 1) {
            nlohmann::json d = {{"column", i}, {"phi1", x[i]}, {"first_active", first[i]},
                                {"next_first_active", first[i + 1]}};
            throw Error(ErrorCode::NonMonotoneExtraction, "extracted boundary rises by more than one cell", d.dump());
        }
    b.std_error.assign(n1, 0.0);
    b.iteration_count = g.sweeps;
    b.sup_update = g.max_update;
    return b;
}

std::vector<double> smooth_fit_check(const VIGrid& g, const Boundary2D&) {
    const auto& x = g.phi1_grid;
    const auto& y = g.phi2_grid;
    const size_t n1 = x.size(), n2 = y.size();
    std::vector<double> out;
    for (size_t i = 0; i + 1 < n1; ++i) {
        size_t j = 0;
        while (j < n2 && !g.active(i, j)) ++j;
        if (j == 0 || j == n2) continue;
        out.push_back(std::abs(g.v(i, j) - g.v(i, j - 1)) / (y[j] - y[j - 1]));
    }
    for (size_t j = 0; j + 1 < n2; ++j) {
        size_t i = 0;
        while (i < n1 && !g.active(i, j)) ++i;
        if (i == 0 || i == n1) continue;
        out.push_back(std::abs(g.v(i, j) - g.v(i - 1, j)) / (x[i] - x[i - 1]));
    }
    return out;
}

VIChecks check_vi(const VIGrid& g, const ProblemParams& raw) {
    const ProblemParams p = validate_params(raw);
    const auto& x = g.phi1_grid;
    const auto& y = g.phi2_grid;
    const size_t n1 = x.size(), n2 = y.size();
    const Operator op{coefficients(x, p.lambda, p.mu), coefficients(y, p.lambda, p.mu), p.lambda};
    std::vector<double> W(g.values.size());
    for (size_t k = 0; k < W.size(); ++k) W[k] = -g.values[k];
    VIChecks c;
    c.value_min = *std::min_element(g.values.begin(), g.values.end());
    c.value_max = *std::max_element(g.values.begin(), g.values.end());
    for (size_t i = 0; i < n1; ++i)
        for (size_t j = 0; j < n2; ++j) {
            const double L = lagrangian_L(x[i], y[j], p);
            const bool act = g.active(i, j);
            if (L < 0.0 && act) c.triangle_inactive = false;
            if (x[i] / g.phi1_star + y[j] / g.phi2_star >= 1.0 && !act) c.trigon_active = false;
            if (act && ((i + 1 < n1 && !g.active(i + 1, j)) || (j + 1 < n2 && !g.active(i, j + 1)))) c.up_closed = false;
            if (i + 1 == n1 || j + 1 == n2) continue;
            const double d = op.diag(i, j);
            const double r = (d * W[i * n2 + j] - op.off(W, n2, i, j) + L) / d;
            c.min_residual = std::min(c.min_residual, r);
            c.complementarity = std::max(c.complementarity, std::abs(std::min(W[i * n2 + j], r)));
        }
    return c;
}

namespace {

// spacing of the grid cell containing v
double cell_at(const std::vector<double>& g, double v) {
    auto it = std::upper_bound(g.begin(), g.end(), v);
    if (it == g.begin()) return g[1] - g[0];
    if (it == g.end()) return g.back() - g[g.size() - 2];
    return *it - *(it - 1);
}

}  // namespace

Agreement compare_boundaries(const VIGrid& g, const Boundary2D& pde_b, const Boundary2D& other) {
    Agreement a;
    const Curve s = region_curve(other);
    const auto& x = other.phi1_grid;
    for (size_t i = 0; i < x.size(); ++i) {
        const double bo = other.b_values[i];
        if (!(bo > 0.0) || !(x[i] < other.phi_zero)) continue;
        const size_t l = i > 0 ? i - 1 : i, r = i + 1 < x.size() ? i + 1 : i;
        const double slope = (s(x[r]) - s(x[l])) / (x[r] - x[l]);
        const double cell = std::max(cell_at(g.phi2_grid, bo), std::abs(slope) * cell_at(g.phi1_grid, x[i]));
        const double sigma = i < other.std_error.size() ? other.std_error[i] : 0.0;
        const double d = std::abs(pde_b.eval(x[i]) - bo);
        const double allow = std::max(2.0 * cell, 3.0 * sigma);
        a.sup_distance = std::max(a.sup_distance, d);
        a.worst_ratio = std::max(a.worst_ratio, d / allow);
        ++a.nodes;
    }
    if (std::isfinite(other.phi_zero) && std::isfinite(pde_b.phi_zero)) {
        // vertical error of the last positive node turned horizontal
        double sigma = 0.0;
        for (size_t i = 1; i < x.size() && i < other.std_error.size(); ++i)
            if (other.b_values[i] > 0.0 && x[i] < other.phi_zero) {
                const double slope = (s(x[i]) - s(x[i - 1])) / (x[i] - x[i - 1]);
                sigma = slope < 0.0 ? other.std_error[i] / -slope : 0.0;
            }
        a.phi_zero_distance = std::abs(pde_b.phi_zero - other.phi_zero);
        const double allow = std::max(2.0 * cell_at(g.phi1_grid, other.phi_zero), 3.0 * sigma);
        a.worst_ratio = std::max(a.worst_ratio, a.phi_zero_distance / allow);
    }
    a.pass = a.worst_ratio <= 1.0;
    return a;
}

std::string vi_csv(const VIGrid& g) {
    std::string s = "# qdetect-vigrid-v1 values of V, rows phi1, columns phi2\nphi1\\phi2";
    char buf[64];
    for (double v : g.phi2_grid) {
        std::snprintf(buf, sizeof buf, ",%.10g", v);
        s += buf;
    }
    s += '\n';
    for (size_t i = 0; i < g.n1(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", g.phi1_grid[i]);
        s += buf;
        for (size_t j = 0; j < g.n2(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.10g", g.v(i, j));
            s += buf;
        }
        s += '\n';
    }
    return s;
}

}  // namespace qdetect::pde
