#pragma once

#include <string>
#include <vector>

#include "qdetect/boundary.hpp"
#include "qdetect/core.hpp"
#include "qdetect/kernel.hpp"

namespace qdetect::density {

struct DensityGridSpec {
    int cells = 2400;
    int steps = 800;
    double psi_max = 0.0;  // 0: default_psi_max
};

// max(20, 10 g, g e^{6 |mu| sqrt(t)}) with g = (1+phi) e^{lambda t}
double default_psi_max(double t, double phi, const ProblemParams& params);

// Marginal law of one coordinate of Phi_t started at phi. Finite volumes in
// y = log psi with piecewise-constant density per cell.
struct DensityGrid1D {
    double t = 0.0;
    std::vector<double> psi_grid;   // cell centres
    std::vector<double> density;    // density in psi at the centres
    double mass = 0.0;              // trapezoid integral of density over psi_grid
    double y_lo = 0.0, dy = 0.0;
    std::vector<double> cell_mass;

    double cdf(double psi) const;
    // int_0^psi x p(x) dx
    double partial_mean(double psi) const;
    double mean() const;
    std::string to_csv() const;

    std::vector<double> cum_mass, cum_mean;  // prefix sums over cells
};

// Forward equation of dPhi = lambda(1+Phi)dt + mu Phi dB in y = log Phi:
//   dY = (lambda(1 + e^-y) - mu^2/2) dt + mu dB,
// with Scharfetter-Gummel fluxes, zero flux at both ends, one backward Euler
// step and then variable-step BDF2 on a time grid graded towards 0.
DensityGrid1D density_1d_fokker_planck(double t, double start_phi, const ProblemParams& params,
                                       const DensityGridSpec& spec = {});

// K(t; phi) as the double integral of L p1 p2 over {psi2 < b(psi1)}; the
// inner integral uses the coordinate-2 distribution function and partial
// mean. Error estimate: difference from a run at half resolution.
kernel::KernelEval kernel_density_quadrature(double t, double phi1, double phi2, const Curve& b,
                                             const ProblemParams& params, int cells, int steps);

}  // namespace qdetect::density
