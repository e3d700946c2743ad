#include "qdetect/core.hpp"

#include <cmath>
#include <string>

#include "qdetect/error.hpp"

namespace qdetect {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonPositiveRate: return "NonPositiveRate";
        case ErrorCode::ZeroDrift: return "ZeroDrift";
        case ErrorCode::PriorOutOfRange: return "PriorOutOfRange";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::BracketFailure: return "BracketFailure";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::BudgetExhausted: return "BudgetExhausted";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::RootBracketFailure: return "RootBracketFailure";
        case ErrorCode::NonMonotoneExtraction: return "NonMonotoneExtraction";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string diagnostics)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      diagnostics_(std::move(diagnostics)) {}

ProblemParams validate_params(const ProblemParams& raw) {
    for (double v : {raw.lambda, raw.mu, raw.c, raw.p1, raw.pi})
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "parameters must be finite");
    if (raw.lambda <= 0.0) throw Error(ErrorCode::NonPositiveRate, "lambda must be positive");
    if (raw.c <= 0.0) throw Error(ErrorCode::NonPositiveRate, "c must be positive");
    if (raw.mu == 0.0) throw Error(ErrorCode::ZeroDrift, "mu must be nonzero");
    if (raw.pi < 0.0 || raw.pi >= 1.0) throw Error(ErrorCode::PriorOutOfRange, "pi must lie in [0,1)");
    if (raw.p1 < 0.0 || raw.p1 > 1.0) throw Error(ErrorCode::PriorOutOfRange, "p1 must lie in [0,1]");
    ProblemParams p = raw;
    p.p2 = 1.0 - raw.p1;
    return p;
}

DerivedConstants derive(const ProblemParams& params) {
    const double mu2 = params.mu * params.mu;
    return {2.0 * params.lambda / mu2, 2.0 * params.p1 / mu2, 2.0 * params.p2 / mu2,
            params.pi / (1.0 - params.pi)};
}

void check_point(const Point2& p) {
    if (!std::isfinite(p.phi1) || !std::isfinite(p.phi2) || p.phi1 < 0.0 || p.phi2 < 0.0)
        throw Error(ErrorCode::DomainError, "point must be finite and nonnegative");
}

double lagrangian_L(const Point2& p, const ProblemParams& params) {
    return lagrangian_L(p.phi1, p.phi2, params);
}

ProblemParams one_dim_params(const ProblemParams& params, double weight) {
    ProblemParams q = params;
    q.c = params.c * weight;
    q.p1 = 1.0;
    q.p2 = 0.0;
    return q;
}

}  // namespace qdetect
