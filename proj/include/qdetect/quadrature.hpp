#pragma once

#include <cmath>
#include <vector>

namespace qdetect {

struct QuadratureSpec {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    int max_subdivisions = 64;
};

void validate_quad(const QuadratureSpec& q);

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

namespace quad {

// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};
const Rule& gauss_legendre(int n);

// 21-point Kronrod rule on [a, b]; error is |K21 - G10|.
template <class F>
QuadResult gk21(F&& f, double a, double b);

// GK21 on every panel of the given breakpoints. When the summed error misses
// the tolerance all panels are bisected together, so the layout (and hence
// the result) varies smoothly with the endpoints.
template <class F>
QuadResult panels(F&& f, const std::vector<double>& breaks, const QuadratureSpec& spec);

namespace detail {
extern const double kx[11];
extern const double kw[11];
extern const double gw[5];
bool accept(const QuadResult& r, const QuadratureSpec& spec);
[[noreturn]] void fail(const QuadResult& r, const QuadratureSpec& spec, int level);
}  // namespace detail

template <class F>
QuadResult gk21(F&& f, double a, double b) {
    const double m = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = f(m);
    double k = fc * detail::kw[0];
    double g = 0.0;
    for (int i = 1; i < 11; ++i) {
        double s = f(m + h * detail::kx[i]) + f(m - h * detail::kx[i]);
        k += s * detail::kw[i];
        if (i % 2 == 1) g += s * detail::gw[i / 2];
    }
    double err = std::abs(k - g) * std::abs(h);
    return {k * h, err};
}

template <class F>
QuadResult panels(F&& f, const std::vector<double>& breaks, const QuadratureSpec& spec) {
    int level = 0;
    for (int split = 1; split <= spec.max_subdivisions; split *= 2, ++level) {
        QuadResult tot;
        for (size_t p = 0; p + 1 < breaks.size(); ++p) {
            const double a = breaks[p], step = (breaks[p + 1] - a) / split;
            for (int s = 0; s < split; ++s) {
                QuadResult r = gk21(f, a + s * step, s + 1 == split ? breaks[p + 1] : a + (s + 1) * step);
                tot.value += r.value;
                tot.error += r.error;
            }
        }
        if (detail::accept(tot, spec)) return tot;
        if (split * 2 > spec.max_subdivisions) detail::fail(tot, spec, level);
    }
    detail::fail({}, spec, level);
}

}  // namespace quad
}  // namespace qdetect
