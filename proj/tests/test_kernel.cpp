#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qdetect/density.hpp"
#include "qdetect/error.hpp"
#include "qdetect/kernel.hpp"
#include "qdetect/onedim.hpp"
#include "qdetect/parallel.hpp"

using namespace qdetect;
using namespace qdetect::kernel;

namespace {

ProblemParams fig1() { return ProblemParams{1.0, 1.0, 1.0, 0.5, 0.5, 0.0}; }

double mean_oracle(double phi, double lam, double t) { return (1.0 + phi) * std::exp(lam * t) - 1.0; }

Curve upper_line(const ProblemParams& p) {
    const double s1 = onedim::solve_phi_star_weighted(p, p.p1).phi_star;
    const double s2 = onedim::solve_phi_star_weighted(p, p.p2).phi_star;
    return Curve({0.0, s1}, {s2, 0.0});
}

struct Moments {
    double mean, se;
};

Moments moments(const std::vector<double>& v) {
    double s = 0, ss = 0;
    for (double x : v) {
        s += x;
        ss += x * x;
    }
    const double n = double(v.size()), m = s / n;
    return {m, std::sqrt((ss / n - m * m) / (n - 1))};
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

}  // namespace

TEST_CASE("exact flow starts at the prescribed point") {
    auto path = sample_phi_exact({0.3, 1.7}, uniform_grid(0.1, 0.01), fig1(), 5, 0);
    CHECK(path.phi1[0] == 0.3);
    CHECK(path.phi2[0] == 1.7);
    CHECK(path.phi1.size() == path.times.size());
    for (size_t k = 0; k < path.times.size(); ++k) {
        CHECK(path.phi1[k] >= 0.0);
        CHECK(path.phi2[k] >= 0.0);
    }
}

TEST_CASE("exact flow mean follows the linear ODE") {
    const auto grid = uniform_grid(0.5, 1e-3);
    const int n = 100000;
    std::vector<double> end(n);
    for (int i = 0; i < n; ++i) end[i] = sample_phi_exact({0.5, 0.0}, grid, fig1(), 11, i).phi1.back();
    auto m = moments(end);
    CHECK(std::abs(m.mean - mean_oracle(0.5, 1.0, 0.5)) < 3 * m.se);
}

TEST_CASE("without lambda the flow is phi times the likelihood ratio") {
    ProblemParams p = fig1();
    p.lambda = 0.0;
    const auto grid = uniform_grid(1.0, 0.01);
    auto path = sample_phi_exact({0.7, 0.0}, grid, p, 3, 4);
    RngStream rng(3, stream_id(4, StreamTag::Coord1));
    double w = 0.0;
    for (size_t k = 1; k < grid.size(); ++k) {
        w += std::sqrt(grid[k] - grid[k - 1]) * rng.normal();
        CHECK(path.phi1[k] == doctest::Approx(0.7 * std::exp(w - 0.5 * grid[k])).epsilon(1e-12));
    }
}

TEST_CASE("euler path is constant without drift and noise") {
    ProblemParams p = fig1();
    p.lambda = 0.0;
    p.mu = 0.0;
    auto path = sample_phi_euler({0.4, 2.0}, uniform_grid(1.0, 0.05), p, 1, 0);
    for (size_t k = 0; k < path.times.size(); ++k) {
        CHECK(path.phi1[k] == 0.4);
        CHECK(path.phi2[k] == 2.0);
    }
}

TEST_CASE("euler and exact marginals agree") {
    const auto grid = uniform_grid(0.25, 1e-3);
    const int n = 10000;
    std::vector<double> ex(n), eu(n);
    for (int i = 0; i < n; ++i) {
        ex[i] = sample_phi_exact({0.5, 0.5}, grid, fig1(), 21, i).phi1.back();
        eu[i] = sample_phi_euler({0.5, 0.5}, grid, fig1(), 22, i).phi1.back();
    }
    const double crit = 1.628 * std::sqrt(2.0 / n);
    CHECK(ks_two_sample(ex, eu) < crit);
    auto m = moments(eu);
    CHECK(std::abs(m.mean - mean_oracle(0.5, 1.0, 0.25)) < 3 * m.se);
}

TEST_CASE("step calibration meets its tolerance") {
    auto cal = calibrate_step(fig1(), 1.0, 0.5, 200, 1e-4, 7);
    CHECK(cal.rel_change < 1e-4);
    CHECK(cal.dt <= 1e-3);
    CHECK(cal.dt >= 1e-5);
}

TEST_CASE("fokker-planck density conserves mass and mean") {
    auto g = density::density_1d_fokker_planck(0.5, 0.5, fig1());
    CHECK(std::abs(g.mass - 1.0) < 1e-3);
    CHECK(std::abs(g.mean() / mean_oracle(0.5, 1.0, 0.5) - 1.0) < 0.01);
    for (double d : g.density) CHECK(d >= 0.0);
    CHECK(std::is_sorted(g.psi_grid.begin(), g.psi_grid.end()));
}

TEST_CASE("fokker-planck mean for other starts and times") {
    for (double t : {0.1, 1.0, 2.0})
        for (double phi : {0.0, 1.5}) {
            auto g = density::density_1d_fokker_planck(t, phi, fig1());
            CHECK(std::abs(g.mean() / mean_oracle(phi, 1.0, t) - 1.0) < 0.01);
        }
}

TEST_CASE("a clipped density domain is reported") {
    density::DensityGridSpec s;
    s.psi_max = 3.0;
    CHECK_THROWS_AS(density::density_1d_fokker_planck(2.0, 0.5, fig1(), s), Error);
}

TEST_CASE("sampled marginal matches the density in total variation") {
    const double t = 0.5, phi = 0.5;
    auto g = density::density_1d_fokker_planck(t, phi, fig1());
    const auto grid = uniform_grid(t, 1e-3);
    const int n = 100000, bins = 50;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = sample_phi_exact({phi, 0.0}, grid, fig1(), 31, i).phi1.back();
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const double hi = sorted[size_t(0.999 * n)];
    std::vector<double> count(bins + 1, 0.0);
    for (double v : x) count[std::min(bins, int(v / hi * bins))] += 1.0;
    double tv = 0.0;
    for (int k = 0; k <= bins; ++k) {
        const double a = hi * k / bins;
        const double b = k < bins ? hi * (k + 1) / bins : 1e300;
        tv += std::abs(count[k] / n - (g.cdf(b) - g.cdf(a)));
    }
    CHECK(0.5 * tv < 0.05);
}

TEST_CASE("kernel vanishes on the empty region") {
    KernelBudget bud;
    bud.n_paths = 2000;
    auto r = kernel_K(0.5, 0.2, 0.2, Curve::constant(0.0), fig1(), Method::monte_carlo, bud);
    CHECK(r.value == 0.0);
    auto d = kernel_K(0.5, 0.2, 0.2, Curve::constant(0.0), fig1(), Method::density_quadrature, bud);
    CHECK(std::abs(d.value) < 1e-12);

    FlowSpec fs;
    fs.n_paths = 500;
    FlowEnsemble ens(fig1(), fs);
    CHECK(discounted_K_integral(ens, 0.3, 0.3, Curve::constant(0.0)).value == 0.0);
}

TEST_CASE("kernel on the whole quadrant is the mean of L") {
    const ProblemParams p{1.0, 1.0, 1.0, 0.3, 0.7, 0.0};
    const double t = 0.5, f1 = 0.2, f2 = 1.1;
    const double oracle = p.p1 * mean_oracle(f1, 1.0, t) + p.p2 * mean_oracle(f2, 1.0, t) - p.lambda / p.c;
    KernelBudget bud;
    bud.n_paths = 40000;
    auto r = kernel_K(t, f1, f2, Curve::constant(1e300), p, Method::monte_carlo, bud);
    CHECK(std::abs(r.value - oracle) < 3 * r.std_error);
    auto d = kernel_K(t, f1, f2, Curve::constant(1e300), p, Method::density_quadrature, bud);
    CHECK(std::abs(d.value - oracle) < 0.01 * std::abs(oracle) + 3 * d.std_error);
}

TEST_CASE("monte carlo and density kernels agree") {
    const ProblemParams p = fig1();
    const Curve b = upper_line(p);
    KernelBudget bud;
    bud.n_paths = 40000;
    auto mc = kernel_K(0.5, 0.2, 0.2, b, p, Method::monte_carlo, bud);
    auto dq = kernel_K(0.5, 0.2, 0.2, b, p, Method::density_quadrature, bud);
    CHECK(mc.method == Method::monte_carlo);
    CHECK(dq.method == Method::density_quadrature);
    CHECK(std::abs(mc.value - dq.value) < 3 * std::hypot(mc.std_error, dq.std_error));
}

TEST_CASE("budget target is enforced") {
    KernelBudget bud;
    bud.n_paths = 200;
    bud.target_std_error = 1e-6;
    CHECK_THROWS_AS(kernel_K(0.5, 0.2, 0.2, upper_line(fig1()), fig1(), Method::monte_carlo, bud), Error);
}

TEST_CASE("discounted kernel is negative deep in the continuation set") {
    FlowSpec fs;
    fs.n_paths = 4000;
    FlowEnsemble ens(fig1(), fs);
    auto r = discounted_K_integral(ens, 0.1, 0.1, upper_line(fig1()));
    CHECK(r.value + 3 * r.std_error < 0.0);
}

TEST_CASE("doubling the horizon stays within the tail bound") {
    const ProblemParams p = fig1();
    const Curve b = upper_line(p);
    FlowSpec fs;
    fs.n_paths = 4000;
    FlowEnsemble e1(p, fs);
    fs.horizon = 2 * e1.horizon();
    FlowEnsemble e2(p, fs);
    for (double f : {0.1, 0.8}) {
        auto r1 = discounted_K_integral(e1, f, f, b);
        auto r2 = discounted_K_integral(e2, f, f, b);
        CHECK(r1.tail_bound > 0.0);
        CHECK(std::abs(r2.value - r1.value) < r1.tail_bound);
    }
}

TEST_CASE("common random numbers make kernels reproducible") {
    const ProblemParams p = fig1();
    const Curve b = upper_line(p);
    FlowSpec fs;
    fs.n_paths = 3000;
    fs.horizon = 2.0;
    set_threads(1);
    FlowEnsemble e1(p, fs);
    set_threads(4);
    FlowEnsemble e2(p, fs);
    set_threads(1);
    for (size_t i = 0; i < e1.n_paths(); i += 97)
        for (size_t j = 0; j < 4 * e1.n_nodes(); ++j) REQUIRE(e1.coeffs(i)[j] == e2.coeffs(i)[j]);
    auto a = discounted_K_integral(e1, 0.4, 0.6, b);
    auto c = discounted_K_integral(e1, 0.4, 0.6, b);
    CHECK(a.value == c.value);
    CHECK(a.std_error == c.std_error);
    CHECK(kernel_K(e1, 10, 0.4, 0.6, b).value == kernel_K(e2, 10, 0.4, 0.6, b).value);
}

TEST_CASE("flow is increasing and affine in the start point") {
    const ProblemParams p = fig1();
    const auto grid = uniform_grid(1.0, 0.01);
    const Point2 lo{0.3, 0.2}, hi{0.5, 0.9};
    const double al = 0.35;
    const Point2 mid{al * lo.phi1 + (1 - al) * hi.phi1, al * lo.phi2 + (1 - al) * hi.phi2};
    for (int i = 0; i < 100; ++i) {
        auto a = sample_phi_exact(lo, grid, p, 41, i);
        auto b = sample_phi_exact(hi, grid, p, 41, i);
        auto m = sample_phi_exact(mid, grid, p, 41, i);
        for (size_t k = 0; k < grid.size(); ++k) {
            REQUIRE(a.phi1[k] < b.phi1[k]);
            REQUIRE(a.phi2[k] < b.phi2[k]);
            const double c1 = al * a.phi1[k] + (1 - al) * b.phi1[k];
            const double c2 = al * a.phi2[k] + (1 - al) * b.phi2[k];
            REQUIRE(std::abs(m.phi1[k] - c1) <= 1e-12 * (1 + c1));
            REQUIRE(std::abs(m.phi2[k] - c2) <= 1e-12 * (1 + c2));
        }
    }
}

TEST_CASE("ensemble nodes reproduce the sampled flow") {
    const ProblemParams p = fig1();
    FlowSpec fs;
    fs.n_paths = 50;
    fs.dt = 0.01;
    FlowEnsemble ens(p, fs, {0.25, 0.5, 1.0});
    for (size_t i = 0; i < ens.n_paths(); ++i) {
        const double* q = ens.coeffs(i);
        for (size_t j = 0; j < 3; ++j) {
            CHECK(q[4 * j] > 0.0);
            CHECK(q[4 * j + 1] >= 0.0);
            CHECK(q[4 * j + 2] > 0.0);
        }
    }
    CHECK_THROWS_AS(FlowEnsemble(p, fs, {0.5, 0.25}), Error);
}
