#pragma once

#include <cstdint>
#include <vector>

#include "qdetect/boundary.hpp"
#include "qdetect/core.hpp"
#include "qdetect/rng.hpp"

namespace qdetect::kernel {

struct PhiPath {
    std::vector<double> times;
    std::vector<double> phi1;
    std::vector<double> phi2;
    uint64_t seed = 0;
};

// Exact flow: Phi_t = A_t (phi + lambda int_0^t ds/A_s), A_t = e^{lambda t} L_t,
// with the time integral done by the trapezoid rule on t_grid. On each step
// this reads Phi' = a Phi + lambda dt (a + 1)/2 with a = A_{k+1}/A_k.
// The two coordinates use streams stream_id(index, Coord1/Coord2).
PhiPath sample_phi_exact(const Point2& start, const std::vector<double>& t_grid, const ProblemParams& params,
                         uint64_t seed, uint64_t index);

// Euler-Maruyama for dPhi = lambda(1+Phi)dt + mu Phi dB, clamped at zero.
PhiPath sample_phi_euler(const Point2& start, const std::vector<double>& t_grid, const ProblemParams& params,
                         uint64_t seed, uint64_t index);

// Uniform grid 0, dt, ..., t (last step shortened).
std::vector<double> uniform_grid(double t, double dt);

// Step size for the trapezoid integral: dt is halved (refining the same
// Brownian paths by bridge sampling) until the relative change of Phi_t at
// the horizon has root-mean-square below rel_tol over n_paths paths.
struct StepCalibration {
    double dt = 0.0;
    double rel_change = 0.0;
    int halvings = 0;
};
StepCalibration calibrate_step(const ProblemParams& params, double horizon, double phi_start, int n_paths,
                               double rel_tol, uint64_t seed, double dt0 = 0.01, double dt_min = 1e-5);

// One-coordinate flow on a uniform grid of step dt, sampled at the requested
// nodes: Phi_t(phi) = phi*A + C. Node times need not lie on the grid; the
// straddling step is split and its increment rescaled.
void flow_at_nodes(const ProblemParams& params, const std::vector<double>& nodes, double dt, RngStream& rng,
                   double* A, double* C);

struct FlowSpec {
    int n_paths = 20000;
    double dt = 3.125e-4;
    uint64_t seed = 1;
    double horizon = 0.0;  // 0: max(5/lambda, 5)
    int panels = 10;       // graded Gauss-Legendre panels in t
    int order = 8;
};

// Common-random-number ensemble: per path and t-node the affine flow
// coefficients of both coordinates. Every kernel evaluation reuses the same
// paths, so K and its discounted integral are deterministic in the start
// point and the boundary.
class FlowEnsemble {
public:
    // Graded t-quadrature on [0, horizon] for the discounted integral.
    FlowEnsemble(const ProblemParams& params, const FlowSpec& spec);
    // Explicit node list (no quadrature weights).
    FlowEnsemble(const ProblemParams& params, const FlowSpec& spec, std::vector<double> nodes);

    size_t n_paths() const { return n_paths_; }
    size_t n_nodes() const { return t_.size(); }
    const std::vector<double>& t() const { return t_; }
    const std::vector<double>& weights() const { return w_; }
    double horizon() const { return horizon_; }
    const ProblemParams& params() const { return params_; }
    const FlowSpec& spec() const { return spec_; }

    // coefficient block of path i: {A1, C1, A2, C2} per node
    const double* coeffs(size_t path) const { return &data_[path * t_.size() * 4]; }

    // the same paths with the coordinates (and p1, p2) exchanged
    FlowEnsemble swapped() const;

private:
    FlowEnsemble() = default;
    void build();

    ProblemParams params_;
    FlowSpec spec_;
    double horizon_ = 0.0;
    size_t n_paths_ = 0;
    std::vector<double> t_, w_;
    std::vector<double> data_;
};

std::vector<double> graded_nodes(double horizon, int panels, int order, std::vector<double>* weights);

enum class Method { monte_carlo, density_quadrature };

struct KernelEval {
    double value = 0.0;
    double std_error = 0.0;
    Method method = Method::monte_carlo;
};

struct KernelBudget {
    int n_paths = 100000;
    double dt = 3.125e-4;
    uint64_t seed = 1;
    double target_std_error = 0.0;  // 0: no target
    int density_cells = 2400;
    int density_steps = 800;
};

// K(t; phi) = E[L(Phi_t) I(Phi_t^2 < b(Phi_t^1))], the region given by a
// signed curve.
KernelEval kernel_K(double t, double phi1, double phi2, const Curve& b, const ProblemParams& params, Method method,
                    const KernelBudget& budget);

// K at node j of an ensemble.
KernelEval kernel_K(const FlowEnsemble& ens, size_t node, double phi1, double phi2, const Curve& b);

struct DiscountedK {
    double value = 0.0;
    double std_error = 0.0;
    double tail_bound = 0.0;
};

// int_0^T e^{-lambda t} K(t) dt on the ensemble's t-quadrature, plus the
// bound sup|L on region| e^{-lambda T}/lambda for the truncated tail.
DiscountedK discounted_K_integral(const FlowEnsemble& ens, double phi1, double phi2, const Curve& b);

// Same integral with the region {phi2 < b(phi1) + shift} and phi2 shifted
// likewise; the building block of the boundary iteration.
DiscountedK discounted_K_shifted(const FlowEnsemble& ens, double phi1, double phi2, const Curve& b, double shift);

}  // namespace qdetect::kernel
