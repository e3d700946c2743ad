#include <cmath>
#include <vector>

#include "doctest.h"
#include "qdetect/error.hpp"
#include "qdetect/mayer.hpp"
#include "qdetect/quadrature.hpp"

using namespace qdetect;
using namespace qdetect::mayer;

namespace {

// Midpoint rule in w with u = k/(k - log w); the factor e^-k/u becomes w e^-k
// and the integrand is bounded on (0, w_v].
double inner_oracle(double v, double k) {
    const double wv = std::exp(k - k / v);
    const long n = 1000000;
    const double dw = wv / n;
    double s = 0.0;
    for (long i = 0; i < n; ++i) {
        double w = (i + 0.5) * dw;
        double lw = std::log(w);
        double u = k / (k - lw);
        s += std::pow(u, k - 1) * std::pow(1 - u, -(k + 2)) * k / ((k - lw) * (k - lw));
    }
    return s * dw * std::exp(-k);
}

// Composite Gauss in v (outer) and y = -log s (inner). With w = w_v e^-y the
// inner integral scaled by ((1-v)/v)^k e^(k/v) becomes
//   ((1-v)/v)^k k int_0^inf e^-y u^(k-1) (1-u)^-(k+2) / (k/v + y)^2 dy,
// u = k/(k/v + y).
double mayer_oracle(double phi, double k, double mu) {
    const auto& g = quad::gauss_legendre(16);
    const int panels = 625;  // 10^4 nodes per direction
    const double ymax = 45.0;
    auto hv = [&](double v) {
        double s = 0.0;
        const double dy = ymax / panels;
        for (int p = 0; p < panels; ++p) {
            double a = p * dy;
            for (size_t j = 0; j < g.x.size(); ++j) {
                double y = a + 0.5 * dy * (1 + g.x[j]);
                double den = k / v + y;
                double u = k / den;
                s += 0.5 * dy * g.w[j] * std::exp(-y + (k - 1) * std::log(u) - (k + 2) * std::log1p(-u)) /
                     (den * den);
            }
        }
        return std::pow((1 - v) / v, k) * k * s;
    };
    const double vmax = phi / (1 + phi);
    const double dv = vmax / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
        double a = p * dv;
        for (size_t j = 0; j < g.x.size(); ++j) s += 0.5 * dv * g.w[j] * hv(a + 0.5 * dv * (1 + g.x[j]));
    }
    return 2.0 / (mu * mu) * (1 + phi) * s;
}

const ProblemParams fig1{1, 1, 1, 0.5, 0.5, 0};

}  // namespace

TEST_CASE("inner integral vanishes at zero and increases") {
    CHECK(inner_integral(1e-3, 2.0) < 1e-300);
    CHECK(inner_integral(0.6, 2.0) > inner_integral(0.4, 2.0));
    double prev = 0.0;
    for (int i = 1; i < 100; ++i) {
        double v = i / 100.0;
        double cur = inner_integral(v, 2.0);
        CHECK(cur > prev);
        prev = cur;
    }
    CHECK_THROWS_AS(inner_integral(0.0, 2.0), Error);
    CHECK_THROWS_AS(inner_integral(1.0, 2.0), Error);
}

TEST_CASE("inner integral matches the midpoint oracle") {
    for (double v : {0.2, 0.5, 0.8}) {
        for (double k : {0.5, 2.0, 5.0}) {
            double ref = inner_oracle(v, k);
            CHECK(inner_integral(v, k) == doctest::Approx(ref).epsilon(1e-8));
        }
    }
}

TEST_CASE("M at the origin and monotonicity") {
    CHECK(mayer_m_1d(0.0, 2.0, 1.0).value == 0.0);
    CHECK(mayer_m_1d(2.0, 2.0, 1.0).value > mayer_m_1d(1.0, 2.0, 1.0).value);
}

TEST_CASE("M matches the nested Gauss oracle") {
    for (double phi : {1.0, 2.0}) {
        MayerEval m = mayer_m_1d(phi, 2.0, 1.0);
        double ref = mayer_oracle(phi, 2.0, 1.0);
        CHECK(m.value == doctest::Approx(ref).epsilon(1e-6));
        CHECK(m.est_error >= 0.0);
        CHECK(m.est_error < 1e-8);
    }
    CHECK(mayer_m_1d(0.7, 0.5, 2.0).value == doctest::Approx(mayer_oracle(0.7, 0.5, 2.0)).epsilon(1e-6));
}

TEST_CASE("M is nonnegative, increasing and continuous") {
    for (double k : {0.5, 1.0, 2.0, 5.0}) {
        double prev = -1.0;
        double max_jump = 0.0;
        for (int i = 0; i < 100; ++i) {
            double phi = 0.05 * i;
            double m = mayer_m_1d(phi, k, 1.0).value;
            CHECK(m >= 0.0);
            if (i > 0) {
                CHECK(m > prev);
                max_jump = std::max(max_jump, m - prev);
            }
            prev = m;
        }
        // M' grows at most linearly here, so jumps of a 0.05 step stay small
        CHECK(max_jump < 0.5);
    }
}

TEST_CASE("two-dimensional Mayer function") {
    CHECK(mayer_m_2d({0, 0}, fig1).value == 1.0);
    double m15 = mayer_m_1d(1.5, 2.0, 1.0).value;
    CHECK(mayer_m_2d({1.5, 1.5}, fig1).value == doctest::Approx(m15 + 1.0).epsilon(1e-14));
    double ref = 0.5 * mayer_oracle(1.0, 2.0, 1.0) + 0.5 * mayer_oracle(2.0, 2.0, 1.0) + 1.0;
    CHECK(mayer_m_2d({1, 2}, fig1).value == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("Mayer identity residual") {
    CHECK(mayer_identity_residual({1, 1}, fig1, 1e-4) < 1e-5);
    CHECK(mayer_identity_residual({0.5, 2.0}, fig1, 1e-4) < 1e-5);
    CHECK_THROWS_AS(mayer_identity_residual({1e-4, 1}, fig1, 1e-4), Error);
}

TEST_CASE("Mayer residual is second order in h") {
    // at h near 1e-4 rounding dominates, so the order shows at larger steps
    ProblemParams p{1, 1, 1, 0.3, 0.7, 0};
    p = validate_params(p);
    double r1 = mayer_identity_residual({0.5, 2.0}, p, 0.04);
    double r2 = mayer_identity_residual({0.5, 2.0}, p, 0.02);
    double r3 = mayer_identity_residual({0.5, 2.0}, p, 0.01);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
    CHECK(r2 / r3 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("ODE solution") {
    CHECK(ode_residual(1.0, 2.0, 2.0, 1e-4) < 1e-5);
    for (double x : {0.3, 1.0, 4.0}) {
        CHECK(ode_solution_y(x, 2.0, 2.0) == doctest::Approx(mayer_m_1d(x, 2.0, 1.0).value).epsilon(1e-14));
        CHECK(ode_solution_y(x, 1.0, 0.5) == doctest::Approx(mayer_m_1d(x, 1.0, 2.0).value).epsilon(1e-14));
    }
    CHECK(ode_solution_y(1e-8, 2.0, 2.0) == doctest::Approx(0.5e-16).epsilon(1e-6));
    CHECK(ode_solution_y(1e-3, 2.0, 2.0) < ode_solution_y(1e-2, 2.0, 2.0));
}

TEST_CASE("substitution keeps z free of the zeroth-order term") {
    for (double u : {0.2, 0.5, 0.7}) {
        CHECK(substitution_residual(u, 2.0, 2.0, 1e-4) < 1e-5);
        CHECK(substitution_residual(u, 1.0, 0.5, 1e-4) < 1e-5);
    }
}

TEST_CASE("quadrature failure is reported") {
    QuadratureSpec q{1e-30, 1e-300, 16};
    try {
        mayer_m_1d(1.0, 2.0, 1.0, q);
        FAIL("expected QuadratureFailure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::QuadratureFailure);
        CHECK(e.diagnostics().find("est_error") != std::string::npos);
    }
    CHECK_THROWS_AS(mayer_m_1d(1.0, 2.0, 1.0, QuadratureSpec{1e-9, 1e-12, 8}), Error);
}
