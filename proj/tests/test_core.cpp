#include <cmath>
#include "doctest.h"
#include "qdetect/core.hpp"
#include "qdetect/error.hpp"

using namespace qdetect;

static ErrorCode code_of(const ProblemParams& p) {
    try {
        validate_params(p);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected rejection");
    return ErrorCode::InvalidArgument;
}

TEST_CASE("figure-one parameters are valid") {
    ProblemParams p = validate_params({1, 1, 1, 0.5, 0.7, 0});
    CHECK(p.p2 == 0.5);
    auto d = derive(p);
    CHECK(d.kappa == 2.0);
    CHECK(d.nu1 == 1.0);
    CHECK(d.nu2 == 1.0);
    CHECK(d.phi0_init == 0.0);
}

TEST_CASE("rejections") {
    CHECK(code_of({1, 1, 1, 0.5, 0.5, 1.0}) == ErrorCode::PriorOutOfRange);
    CHECK(code_of({1, 1, 1, 0.5, 0.5, -0.1}) == ErrorCode::PriorOutOfRange);
    CHECK(code_of({1, 1, 1, 1.5, 0.5, 0.0}) == ErrorCode::PriorOutOfRange);
    CHECK(code_of({0, 1, 1, 0.5, 0.5, 0.0}) == ErrorCode::NonPositiveRate);
    CHECK(code_of({1, 1, -1, 0.5, 0.5, 0.0}) == ErrorCode::NonPositiveRate);
    CHECK(code_of({1, 0, 1, 0.5, 0.5, 0.0}) == ErrorCode::ZeroDrift);
    CHECK(code_of({1, 1, 1, 0.5, 0.5, std::nan("")}) == ErrorCode::NonFinite);
}

TEST_CASE("degenerate weights") {
    ProblemParams p = validate_params({2, 2, 1, 1.0, 0.3, 0});
    auto d = derive(p);
    CHECK(d.kappa == 1.0);
    CHECK(d.nu1 == 0.5);
    CHECK(d.nu2 == 0.0);
    CHECK(p.p1 + p.p2 == 1.0);
}

TEST_CASE("p2 is exactly 1 - p1 and validation is idempotent") {
    for (double p1 : {0.0, 0.1, 0.3, 0.5, 0.7, 0.999, 1.0}) {
        ProblemParams p = validate_params({1.3, -0.7, 0.4, p1, 0.0, 0.2});
        CHECK(p.p2 == 1.0 - p1);
        ProblemParams q = validate_params(p);
        CHECK(q.p2 == p.p2);
        CHECK(derive(q).kappa == derive(p).kappa);
        CHECK(derive(p).kappa == doctest::Approx(2 * 1.3 / 0.49).epsilon(1e-15));
    }
}

TEST_CASE("lagrangian") {
    ProblemParams p = validate_params({1, 1, 1, 1.0, 0, 0});
    CHECK(lagrangian_L({2, 0}, p) == 1.0);
    ProblemParams q = validate_params({1, 1, 1, 0.25, 0, 0});
    CHECK(lagrangian_L({1.0 / 0.25, 0}, q) == doctest::Approx(0.0));
    ProblemParams s = validate_params({1, 1, 1, 0.5, 0, 0});
    CHECK(lagrangian_L({1, 1}, s) == 0.0);
    // symmetric exactly when p1 = p2
    CHECK(lagrangian_L({0.3, 1.7}, s) == lagrangian_L({1.7, 0.3}, s));
    CHECK(lagrangian_L({0.3, 1.7}, q) != lagrangian_L({1.7, 0.3}, q));
}

TEST_CASE("points off the state space are rejected") {
    CHECK_THROWS_AS(check_point({-1e-9, 0}), Error);
    CHECK_THROWS_AS(check_point({0, INFINITY}), Error);
    CHECK_NOTHROW(check_point({0, 0}));
}
