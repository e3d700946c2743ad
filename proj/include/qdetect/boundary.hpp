#pragma once

#include <limits>
#include <vector>

namespace qdetect {

// Optimal stopping boundary: D = {phi2 >= b(phi1)}.
struct Boundary2D {
    std::vector<double> phi1_grid;
    std::vector<double> b_values;
    double phi_zero = 0.0;
    int iteration_count = 0;
    double sup_update = 0.0;
    // propagated one-sigma error of each node in phi2 units (Monte Carlo)
    std::vector<double> std_error;
    // nodes whose root search hit a bracket end with b > 0
    std::vector<int> flagged;

    // Piecewise-linear through the positive nodes, then straight down to
    // zero at phi_zero and zero from there on.
    double eval(double phi1) const;
};

// Signed piecewise-linear curve describing the region {phi2 < s(phi1)}.
// Values may be negative; outside the nodes the end segments are continued.
class Curve {
public:
    Curve() = default;
    Curve(std::vector<double> x, std::vector<double> y);

    static Curve constant(double v);

    double operator()(double phi1) const;

    // smallest phi1 >= 0 with s(phi1) <= 0; +inf if none
    double zero() const;
    double max_value() const;

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }

private:
    std::vector<double> x_, y_;
};

// Region curve of a boundary: nodes after the last positive one are replaced
// by the linear continuation through the last two nodes, so the curve crosses
// zero at the extrapolated phi_zero instead of running along the axis.
Curve region_curve(const std::vector<double>& x, const std::vector<double>& b);
// For a boundary with a finite phi_zero past its last positive node the
// region instead runs straight from that node to (phi_zero, 0), matching eval.
Curve region_curve(const Boundary2D& b);

// Least-squares projection onto nonincreasing sequences (pool adjacent violators).
std::vector<double> project_nonincreasing(const std::vector<double>& y);

// Nodes 0..n-1 on [0, L] clustered toward both ends.
std::vector<double> cosine_grid(double L, int n);

}  // namespace qdetect
