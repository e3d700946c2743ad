#include "qdetect/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qdetect/error.hpp"

namespace qdetect {

double Boundary2D::eval(double phi1) const {
    if (phi1 >= phi_zero) return 0.0;
    return std::max(0.0, region_curve(*this)(phi1));
}

Curve::Curve(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.empty() || x_.size() != y_.size()) throw Error(ErrorCode::InvalidArgument, "curve needs matching nodes");
    for (size_t i = 1; i < x_.size(); ++i)
        if (!(x_[i] > x_[i - 1])) throw Error(ErrorCode::InvalidArgument, "curve nodes must increase");
}

Curve Curve::constant(double v) { return Curve({0.0}, {v}); }

double Curve::operator()(double t) const {
    const size_t n = x_.size();
    if (n == 1) return y_[0];
    size_t i;
    if (t <= x_[1]) {
        i = 0;
    } else if (t >= x_[n - 2]) {
        i = n - 2;
    } else {
        i = size_t(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin()) - 1;
    }
    const double w = (t - x_[i]) / (x_[i + 1] - x_[i]);
    return y_[i] + w * (y_[i + 1] - y_[i]);
}

double Curve::zero() const {
    const size_t n = x_.size();
    if (y_[0] <= 0.0) return 0.0;
    for (size_t i = 0; i + 1 < n; ++i)
        if (y_[i + 1] <= 0.0) return x_[i] + y_[i] * (x_[i + 1] - x_[i]) / (y_[i] - y_[i + 1]);
    if (n == 1 || y_[n - 1] >= y_[n - 2]) return std::numeric_limits<double>::infinity();
    return x_[n - 1] + y_[n - 1] * (x_[n - 1] - x_[n - 2]) / (y_[n - 2] - y_[n - 1]);
}

double Curve::max_value() const { return *std::max_element(y_.begin(), y_.end()); }

Curve region_curve(const std::vector<double>& x, const std::vector<double>& b) {
    const size_t n = x.size();
    std::vector<double> y = b;
    size_t last = n;
    for (size_t i = 0; i < n; ++i)
        if (b[i] > 0.0) last = i;
    if (last == n) return Curve(x, y);
    if (last + 1 < n) {
        // continue the last segment that ends at a positive node, but cross
        // zero no later than the next node, which is known to be in D
        double slope = -b[last] / (x[last + 1] - x[last]);
        if (last > 0) slope = std::min(slope, (b[last] - b[last - 1]) / (x[last] - x[last - 1]));
        for (size_t i = last + 1; i < n; ++i) y[i] = b[last] + slope * (x[i] - x[last]);
    }
    return Curve(x, y);
}

Curve region_curve(const Boundary2D& bd) {
    const auto& x = bd.phi1_grid;
    const auto& b = bd.b_values;
    size_t last = b.size();
    for (size_t i = 0; i < b.size(); ++i)
        if (b[i] > 0.0) last = i;
    if (last == b.size() || !std::isfinite(bd.phi_zero) || !(bd.phi_zero > x[last])) return region_curve(x, b);
    std::vector<double> u(x.begin(), x.begin() + long(last) + 1), v(b.begin(), b.begin() + long(last) + 1);
    u.push_back(bd.phi_zero);
    v.push_back(0.0);
    return Curve(u, v);
}

std::vector<double> project_nonincreasing(const std::vector<double>& y) {
    std::vector<double> val, wt;
    std::vector<size_t> len;
    for (double v : y) {
        val.push_back(v);
        wt.push_back(1.0);
        len.push_back(1);
        while (val.size() > 1 && val[val.size() - 2] < val.back()) {
            size_t k = val.size() - 1;
            double w = wt[k - 1] + wt[k];
            val[k - 1] = (wt[k - 1] * val[k - 1] + wt[k] * val[k]) / w;
            wt[k - 1] = w;
            len[k - 1] += len[k];
            val.pop_back();
            wt.pop_back();
            len.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (size_t k = 0; k < val.size(); ++k) out.insert(out.end(), len[k], val[k]);
    return out;
}

std::vector<double> cosine_grid(double L, int n) {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least two nodes");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = 0.5 * L * (1.0 - std::cos(std::numbers::pi * i / (n - 1)));
    g[0] = 0.0;
    g[n - 1] = L;
    return g;
}

}  // namespace qdetect
