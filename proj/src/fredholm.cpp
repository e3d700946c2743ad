#include "qdetect/fredholm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "qdetect/error.hpp"
#include "qdetect/onedim.hpp"
#include "qdetect/parallel.hpp"

namespace qdetect::fredholm {

using kernel::FlowEnsemble;

Bounds boundary_bounds(const ProblemParams& raw) {
    const ProblemParams p = validate_params(raw);
    if (!(p.p1 > 0.0 && p.p1 < 1.0)) throw Error(ErrorCode::PriorOutOfRange, "bounds need p1 in (0,1)");
    Bounds b;
    b.phi1_star = onedim::solve_phi_star_weighted(p, p.p1).phi_star;
    b.phi2_star = onedim::solve_phi_star_weighted(p, p.p2).phi_star;
    b.lower_slope = -p.p1 / p.p2;
    b.lower_intercept = p.lambda / (p.p2 * p.c);
    return b;
}

namespace {

struct NodeRoot {
    double value = 0.0;  // new b at the node
    double delta = 0.0;
    bool flagged = false;
};

// Root of the increasing function r on [lo, hi], started from d0. The
// bracket is grown outwards from d0 in doubling steps so that sweeps close
// to the fixed point cost few evaluations.
template <class R>
NodeRoot shift_root(R&& r, double lo, double hi, double d0, double step, double tol, double base) {
    NodeRoot out;
    d0 = std::clamp(d0, lo, hi);
    double f0 = r(d0);
    if (!std::isfinite(f0)) throw Error(ErrorCode::RootBracketFailure, "non-finite kernel integral");
    double a, fa, b, fb;
    if (f0 == 0.0) {
        out.delta = d0;
        out.value = base + d0;
        return out;
    }
    const double dir = f0 < 0.0 ? 1.0 : -1.0;
    double prev = d0, fprev = f0, s = step;
    for (;;) {
        const double edge = dir > 0 ? hi : lo;
        double next = prev + dir * s;
        if ((dir > 0 && next >= edge) || (dir < 0 && next <= edge)) next = edge;
        const double fn = r(next);
        if (!std::isfinite(fn)) throw Error(ErrorCode::RootBracketFailure, "non-finite kernel integral");
        if ((fn > 0.0) == (dir > 0) || fn == 0.0) {
            a = std::min(prev, next);
            b = std::max(prev, next);
            fa = dir > 0 ? fprev : fn;
            fb = dir > 0 ? fn : fprev;
            break;
        }
        if (next == edge) {
            out.delta = edge;
            out.value = base + edge;
            out.flagged = true;
            return out;
        }
        prev = next;
        fprev = fn;
        s *= 2.0;
    }
    // Illinois variant of regula falsi
    int side = 0;
    while (b - a > tol) {
        double m = (a * fb - b * fa) / (fb - fa);
        if (!(m > a && m < b)) m = 0.5 * (a + b);
        const double fm = r(m);
        if (fm == 0.0) {
            a = b = m;
            break;
        }
        if (fm < 0.0) {
            a = m;
            fa = fm;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = m;
            fb = fm;
            if (side == 1) fa *= 0.5;
            side = 1;
        }
    }
    out.delta = 0.5 * (a + b);
    out.value = base + out.delta;
    return out;
}

nlohmann::json iterate_json(const std::vector<double>& x, const std::vector<double>& b) {
    return {{"phi1", x}, {"b", b}};
}

}  // namespace

Boundary2D picard_solve(const FlowEnsemble& ens, const PicardSpec& spec) {
    const ProblemParams& p = ens.params();
    if (p.p1 == 0.0 || p.p1 == 1.0) return one_dim_boundary(p);
    if (p.p1 > p.p2) return mirror(picard_solve(ens.swapped(), spec));
    if (spec.nodes < 3) throw Error(ErrorCode::InvalidArgument, "boundary grid needs at least three nodes");
    if (!(spec.tol_sup > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol_sup must be positive");
    const Bounds bd = boundary_bounds(p);
    const size_t n = size_t(spec.nodes);
    const std::vector<double> x = cosine_grid(bd.phi1_star, spec.nodes);
    std::vector<double> lo(n), hi(n);
    for (size_t i = 0; i < n; ++i) {
        lo[i] = std::max(0.0, bd.lower(x[i]));
        hi[i] = std::max(lo[i], bd.upper(x[i]));
    }
    const double tol = spec.root_tol > 0.0 ? spec.root_tol : spec.tol_sup / 20.0;
    const double step0 = 0.02 * bd.phi2_star;

    std::vector<double> b = hi, prev_b;
    std::vector<double> last_delta(n, 0.0);
    std::vector<NodeRoot> roots(n);
    Boundary2D out;
    out.phi1_grid = x;
    int it = 0;
    double sup = std::numeric_limits<double>::infinity();
    while (it < spec.max_iter) {
        const Curve s = region_curve(x, b);
        parallel_for(n, [&](size_t i) {
            const double si = s(x[i]);
            auto r = [&](double d) { return kernel::discounted_K_shifted(ens, x[i], si + d, s, d).value; };
            // start from the previous sweep's shift, which tracks the local drift of the iteration
            const double guess = it == 0 ? 0.0 : 0.5 * last_delta[i];
            const double step = it == 0 ? step0 : std::max(4.0 * tol, 2.0 * std::abs(last_delta[i]) + 4.0 * tol);
            roots[i] = shift_root(r, lo[i] - si, hi[i] - si, guess, step, tol, si);
        });
        std::vector<double> nb(n);
        for (size_t i = 0; i < n; ++i) {
            nb[i] = roots[i].value;
            last_delta[i] = roots[i].value - b[i];
        }
        nb = project_nonincreasing(nb);
        for (auto& v : nb) v = std::max(v, 0.0);
        sup = 0.0;
        for (size_t i = 0; i < n; ++i) sup = std::max(sup, std::abs(nb[i] - b[i]));
        prev_b = std::move(b);
        b = std::move(nb);
        ++it;
        if (sup < spec.tol_sup) break;
    }
    if (!(sup < spec.tol_sup)) {
        nlohmann::json d = {{"iterations", it},
                            {"sup_update", sup},
                            {"tol_sup", spec.tol_sup},
                            {"previous", iterate_json(x, prev_b)},
                            {"last", iterate_json(x, b)}};
        throw Error(ErrorCode::NoConvergence, "Picard iteration did not reach tol_sup", d.dump());
    }
    out.b_values = b;
    out.iteration_count = it;
    out.sup_update = sup;
    const Curve s = region_curve(x, b);
    out.phi_zero = s.zero();
    for (size_t i = 0; i < n; ++i)
        if (roots[i].flagged && b[i] > 0.0) out.flagged.push_back(int(i));

    out.std_error.assign(n, 0.0);
    if (spec.node_errors) {
        // one-sigma root error: standard error of the integral over its slope in the shift
        const double h = 0.02 * bd.phi2_star;
        parallel_for(n, [&](size_t i) {
            if (b[i] <= 0.0) return;
            const double si = s(x[i]);
            auto r = [&](double d) { return kernel::discounted_K_shifted(ens, x[i], si + d, s, d); };
            const double dl = std::max(-h, lo[i] - si), du = std::min(h, hi[i] - si);
            if (!(du > dl)) return;
            const auto r0 = r(0.0);
            const double slope = (r(du).value - r(dl).value) / (du - dl);
            out.std_error[i] = slope > 0.0 ? r0.std_error / slope : std::numeric_limits<double>::infinity();
        });
    }
    return out;
}

Boundary2D one_dim_boundary(const ProblemParams& raw) {
    const ProblemParams p = validate_params(raw);
    if (p.p1 != 0.0 && p.p1 != 1.0) throw Error(ErrorCode::InvalidArgument, "one-dimensional boundary needs p1 in {0,1}");
    const double s = onedim::solve_phi_star(p).phi_star;
    Boundary2D b;
    if (p.p1 == 1.0) {
        // D = {phi1 >= s}: a vertical line, b huge to the left of it
        b.phi1_grid = {0.0, s};
        b.b_values = {std::numeric_limits<double>::max(), 0.0};
        b.phi_zero = s;
    } else {
        b.phi1_grid = {0.0, s};
        b.b_values = {s, s};
        b.phi_zero = std::numeric_limits<double>::infinity();
    }
    b.std_error = {0.0, 0.0};
    return b;
}

Boundary2D picard_solve(const ProblemParams& raw, const PicardSpec& spec, const kernel::FlowSpec& flow) {
    const ProblemParams p = validate_params(raw);
    if (p.p1 == 0.0 || p.p1 == 1.0) return one_dim_boundary(p);
    if (p.p1 > p.p2) {
        ProblemParams q = p;
        std::swap(q.p1, q.p2);
        return mirror(picard_solve(FlowEnsemble(q, flow), spec));
    }
    return picard_solve(FlowEnsemble(p, flow), spec);
}

Boundary2D mirror(const Boundary2D& m) {
    const auto& x = m.phi1_grid;
    const auto& b = m.b_values;
    const size_t n = x.size();
    const Curve s = region_curve(x, b);
    // original points (b(x_k), x_k) for the positive nodes, plus the zero
    struct Pt {
        double u, v, se;
        int src;
    };
    std::vector<Pt> pts;
    pts.push_back({0.0, m.phi_zero, 0.0, -1});
    for (size_t k = n; k-- > 0;) {
        if (!(b[k] > 0.0)) continue;
        double se = 0.0;
        if (k < m.std_error.size() && m.std_error[k] > 0.0) {
            // horizontal error of the source curve turned vertical
            const size_t l = k > 0 ? k - 1 : k, r = k + 1 < n ? k + 1 : k;
            const double slope = (s(x[r]) - s(x[l])) / (x[r] - x[l]);
            se = slope < 0.0 ? m.std_error[k] / -slope : std::numeric_limits<double>::infinity();
        }
        if (b[k] <= pts.back().u) continue;
        pts.push_back({b[k], x[k], se, int(k)});
    }
    Boundary2D out;
    out.iteration_count = m.iteration_count;
    out.sup_update = m.sup_update;
    for (const auto& q : pts) {
        out.phi1_grid.push_back(q.u);
        out.b_values.push_back(q.v);
        out.std_error.push_back(q.se);
    }
    // the source zero is the boundary height at phi1 = 0; its error is the nearest node's
    if (pts.size() > 1) out.std_error[0] = out.std_error[1];
    out.phi_zero = pts.back().u;
    for (int f : m.flagged)
        for (size_t j = 0; j < pts.size(); ++j)
            if (pts[j].src == f) out.flagged.push_back(int(j));
    return out;
}

ValueEval value_2d(const Point2& p, const Boundary2D& b, const FlowEnsemble& ens) {
    check_point(p);
    const auto r = kernel::discounted_K_integral(ens, p.phi1, p.phi2, region_curve(b));
    return {r.value, r.std_error, r.tail_bound};
}

ValueEval value_initial_problem(double pi, const Boundary2D& b, const FlowEnsemble& ens) {
    if (!(pi >= 0.0 && pi < 1.0)) throw Error(ErrorCode::PriorOutOfRange, "pi must lie in [0,1)");
    const double f = pi / (1.0 - pi), c = ens.params().c;
    const auto v = value_2d({f, f}, b, ens);
    return {(1.0 - pi) * (1.0 + c * v.value), (1.0 - pi) * c * v.std_error, (1.0 - pi) * c * v.tail_bound};
}

std::vector<double> fredholm_residual(const Boundary2D& b, const FlowEnsemble& ens) {
    const Curve s = region_curve(b);
    std::vector<double> r(b.phi1_grid.size());
    parallel_for(r.size(), [&](size_t i) {
        r[i] = kernel::discounted_K_integral(ens, b.phi1_grid[i], std::max(0.0, b.b_values[i]), s).value;
    });
    return r;
}

BoundaryCheck check_boundary(const Boundary2D& b, const ProblemParams& raw, double tol_convex) {
    const ProblemParams p = validate_params(raw);
    const Bounds bd = boundary_bounds(p);
    const auto& x = b.phi1_grid;
    const auto& y = b.b_values;
    const size_t n = x.size();
    BoundaryCheck c;
    for (size_t i = 0; i + 1 < n; ++i)
        if (y[i + 1] > y[i]) c.decreasing = false;
    for (size_t i = 1; i + 1 < n; ++i) {
        const double chord = ((x[i + 1] - x[i]) * y[i - 1] + (x[i] - x[i - 1]) * y[i + 1]) / (x[i + 1] - x[i - 1]);
        c.max_concavity = std::max(c.max_concavity, y[i] - chord);
    }
    c.convex = c.max_concavity <= tol_convex;
    for (size_t i = 0; i < n; ++i) {
        const double lo = bd.lower(x[i]), up = bd.upper(x[i]);
        c.max_bound_violation = std::max({c.max_bound_violation, lo - y[i], y[i] - std::max(up, 0.0)});
        const bool interior = i > 0 && i + 1 < n && x[i] < bd.phi1_star;
        if (interior && !(y[i] > lo && y[i] < up)) c.outside.push_back(int(i));
        if (x[i] < b.phi_zero && y[i] > 0.0 && lagrangian_L(x[i], y[i], p) < -1e-12) c.class_condition = false;
    }
    c.within_bounds = c.outside.empty();
    return c;
}

double involution_error(const Boundary2D& b) {
    double e = 0.0;
    for (double u : b.phi1_grid) {
        if (u > b.phi_zero) break;
        e = std::max(e, std::abs(b.eval(b.eval(u)) - u));
    }
    return e;
}

std::string boundary_csv(const Boundary2D& b) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "# qdetect-boundary-v1 phi_zero=%.17g\nphi1,b\n", b.phi_zero);
    std::string s = buf;
    for (size_t i = 0; i < b.phi1_grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", b.phi1_grid[i], b.b_values[i]);
        s += buf;
    }
    return s;
}

std::string boundary_json(const Boundary2D& b, const ProblemParams& p, const std::vector<double>& residuals) {
    nlohmann::ordered_json j;
    j["params"] = {{"lambda", p.lambda}, {"mu", p.mu}, {"c", p.c}, {"p1", p.p1}, {"p2", p.p2}, {"pi", p.pi}};
    j["phi1"] = b.phi1_grid;
    j["b"] = b.b_values;
    j["std_error"] = b.std_error;
    j["phi_zero"] = b.phi_zero;
    j["iterations"] = b.iteration_count;
    j["sup_update"] = b.sup_update;
    j["flagged"] = b.flagged;
    j["residuals"] = residuals;
    return j.dump(2);
}

}  // namespace qdetect::fredholm
