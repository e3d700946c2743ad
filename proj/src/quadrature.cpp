#include "qdetect/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "qdetect/error.hpp"

namespace qdetect {

void validate_quad(const QuadratureSpec& q) {
    if (!(q.rel_tol > 0.0) || !(q.abs_tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "quadrature tolerances must be positive");
    if (q.max_subdivisions < 16)
        throw Error(ErrorCode::InvalidArgument, "max_subdivisions must be at least 16");
}

namespace quad {
namespace detail {

using KR = boost::math::quadrature::gauss_kronrod<double, 21>;
using GR = boost::math::quadrature::gauss<double, 10>;

// Kronrod abscissae are ordered 0, g1, k1, g2, ...; the odd entries are the
// embedded Gauss nodes.
const double kx[11] = {KR::abscissa()[0], KR::abscissa()[1], KR::abscissa()[2], KR::abscissa()[3],
                       KR::abscissa()[4], KR::abscissa()[5], KR::abscissa()[6], KR::abscissa()[7],
                       KR::abscissa()[8], KR::abscissa()[9], KR::abscissa()[10]};
const double kw[11] = {KR::weights()[0], KR::weights()[1], KR::weights()[2], KR::weights()[3],
                       KR::weights()[4], KR::weights()[5], KR::weights()[6], KR::weights()[7],
                       KR::weights()[8], KR::weights()[9], KR::weights()[10]};
const double gw[5] = {GR::weights()[0], GR::weights()[1], GR::weights()[2], GR::weights()[3],
                      GR::weights()[4]};

bool accept(const QuadResult& r, const QuadratureSpec& spec) {
    return std::isfinite(r.value) && r.error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(r.value));
}

void fail(const QuadResult& r, const QuadratureSpec& spec, int level) {
    std::ostringstream d;
    d.precision(17);
    d << "{\"value\":" << (std::isfinite(r.value) ? r.value : 0.0) << ",\"est_error\":" << r.error
      << ",\"rel_tol\":" << spec.rel_tol << ",\"abs_tol\":" << spec.abs_tol << ",\"levels\":" << level << "}";
    throw Error(ErrorCode::QuadratureFailure, "error estimate above tolerance", d.str());
}

}  // namespace detail

template <unsigned N>
static Rule make_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    Rule r;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    for (size_t i = a.size(); i-- > 0;) {
        if (a[i] == 0.0) continue;
        r.x.push_back(-a[i]);
        r.w.push_back(w[i]);
    }
    for (size_t i = 0; i < a.size(); ++i) {
        r.x.push_back(a[i]);
        r.w.push_back(w[i]);
    }
    return r;
}

const Rule& gauss_legendre(int n) {
    static const Rule r4 = make_rule<4>(), r8 = make_rule<8>(), r16 = make_rule<16>(), r20 = make_rule<20>(),
                      r32 = make_rule<32>();
    switch (n) {
        case 4: return r4;
        case 8: return r8;
        case 16: return r16;
        case 20: return r20;
        case 32: return r32;
        default: throw Error(ErrorCode::InvalidArgument, "unsupported Gauss-Legendre order");
    }
}

}  // namespace quad
}  // namespace qdetect
