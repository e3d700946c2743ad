#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdetect/boundary.hpp"
#include "qdetect/core.hpp"

namespace qdetect::pde {

struct VIGridSpec {
    int n1 = 200;
    int n2 = 200;
    double lo = 1e-3;          // first positive node
    double trunc_factor = 1.5;  // coordinate i is cut at trunc_factor * phi_i*
};

// Discrete value function on a tensor grid; values and mask are stored row
// by row in phi1 (index i * n2 + j).
struct VIGrid {
    std::vector<double> phi1_grid, phi2_grid;
    std::vector<double> values;
    std::vector<uint8_t> active_mask;
    int sweeps = 0;
    double max_update = 0.0;
    double phi1_star = 0.0, phi2_star = 0.0;

    size_t n1() const { return phi1_grid.size(); }
    size_t n2() const { return phi2_grid.size(); }
    double v(size_t i, size_t j) const { return values[i * phi2_grid.size() + j]; }
    bool active(size_t i, size_t j) const { return active_mask[i * phi2_grid.size() + j] != 0; }
};

// 0 followed by a geometric grid from lo to hi
std::vector<double> log_grid(double lo, double hi, int n);

// Projected Gauss-Seidel / SOR with red-black ordering for
//   min(-(L_Phi - lambda) W - L, W) = 0,  V = -W,
// central differences for the diffusion and forward differences for the
// drift lambda(1 + phi_i) d_i. Axis nodes keep the drift term only; the
// far edges are held at V = 0. The upwind matrix is not symmetric, so
// over-relaxation much beyond omega = 1 can diverge (NoConvergence).
VIGrid solve_vi(const ProblemParams& params, const VIGridSpec& spec = {}, double omega = 1.0, double tol = 1e-11,
                int max_sweeps = 200000);

// Smallest active phi2 per phi1 column, placed between the last inactive and
// the first active node where the linear extrapolation of sqrt(-V) vanishes.
Boundary2D extract_boundary(const VIGrid& g);

// |one-sided difference quotient| of V across the boundary, in phi2 along each
// column with a positive boundary, then in phi1 along each row below b(0).
std::vector<double> smooth_fit_check(const VIGrid& g, const Boundary2D& b);

struct VIChecks {
    bool triangle_inactive = true;
    bool trigon_active = true;
    bool up_closed = true;
    double complementarity = 0.0;  // max |min(W, residual/diag)| over nodes
    double min_residual = 0.0;     // most negative residual/diag
    double value_min = 0.0, value_max = 0.0;
};

VIChecks check_vi(const VIGrid& g, const ProblemParams& params);

// Sup-norm agreement of the extracted boundary with another boundary at the
// other's nodes with b > 0. Node i passes when
//   |b_pde - b| <= max(2 cell_i, 3 sigma_i),
// cell_i = max(phi2 spacing at b, |slope| * phi1 spacing at phi1) of the
// PDE grid and sigma_i the other boundary's standard error. phi_zero is
// compared the same way along phi1.
struct Agreement {
    double sup_distance = 0.0;
    double worst_ratio = 0.0;  // max distance / allowance
    double phi_zero_distance = 0.0;
    int nodes = 0;
    bool pass = true;
};

Agreement compare_boundaries(const VIGrid& g, const Boundary2D& pde_b, const Boundary2D& other);

std::string vi_csv(const VIGrid& g);

}  // namespace qdetect::pde
