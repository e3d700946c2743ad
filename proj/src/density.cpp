#include "qdetect/density.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qdetect/error.hpp"

namespace qdetect::density {

namespace {

// Bernoulli function x/(e^x - 1)
double bern(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
    if (x > 700.0) return 0.0;
    return x / std::expm1(x);
}

// Solves (diag + lower/upper) x = rhs in place; sub[i] couples i to i-1,
// sup[i] couples i to i+1.
void thomas(std::vector<double> sub, std::vector<double> dia, std::vector<double> sup, std::vector<double>& x) {
    const size_t n = dia.size();
    for (size_t i = 1; i < n; ++i) {
        double m = sub[i] / dia[i - 1];
        dia[i] -= m * sup[i - 1];
        x[i] -= m * x[i - 1];
    }
    x[n - 1] /= dia[n - 1];
    for (size_t i = n - 1; i-- > 0;) x[i] = (x[i] - sup[i] * x[i + 1]) / dia[i];
}

}  // namespace

double default_psi_max(double t, double phi, const ProblemParams& params) {
    // the mean-based bound alone clips the lognormal upper tail once mu^2 t
    // is of order one, so it is widened by six log-standard deviations
    const double growth = (1.0 + phi) * std::exp(params.lambda * t);
    return std::max({20.0, 10.0 * growth, growth * std::exp(6.0 * std::abs(params.mu) * std::sqrt(t))});
}

DensityGrid1D density_1d_fokker_planck(double t, double start_phi, const ProblemParams& params,
                                       const DensityGridSpec& spec) {
    if (!(t > 0.0)) throw Error(ErrorCode::DomainError, "density needs t > 0");
    if (!(start_phi >= 0.0)) throw Error(ErrorCode::DomainError, "density needs a nonnegative start");
    if (spec.cells < 50 || spec.steps < 10) throw Error(ErrorCode::InvalidArgument, "density grid too small");
    const double lam = params.lambda, mu = std::abs(params.mu), D = 0.5 * mu * mu;
    const double y0 = std::log(std::max(start_phi, 1e-8));
    const double psi_max = spec.psi_max > 0.0 ? spec.psi_max : default_psi_max(t, start_phi, params);
    const double y_lo = y0 - 0.5 * mu * mu * t - 8.0 * mu * std::sqrt(t) - 0.5;
    const double y_hi = std::log(psi_max);
    if (!(y_hi > y0)) throw Error(ErrorCode::GridTooCoarse, "start lies above the truncation bound");
    const int n = spec.cells;
    const double dy = (y_hi - y_lo) / n;

    // coupling between cell j and j+1: flux = al[j] m_j - be[j] m_{j+1}
    std::vector<double> al(n - 1), be(n - 1);
    for (int j = 0; j + 1 < n; ++j) {
        const double yf = y_lo + (j + 1) * dy;
        const double a = lam * (1.0 + std::exp(-yf)) - D;
        const double pe = a * dy / D;
        al[j] = D / (dy * dy) * bern(-pe);
        be[j] = D / (dy * dy) * bern(pe);
    }

    std::vector<double> m(n, 0.0), m_prev;
    {
        double s = (y0 - y_lo) / dy - 0.5;
        int j = int(std::floor(s));
        double f = s - j;
        j = std::clamp(j, 0, n - 2);
        m[j] = 1.0 - f;
        m[j + 1] = f;
    }

    // implicit step: (c0 I - h A) m_new = rhs
    auto implicit = [&](double c0, double h, std::vector<double>& rhs) {
        std::vector<double> sub(n, 0.0), dia(n, c0), sup(n, 0.0);
        for (int j = 0; j + 1 < n; ++j) {
            dia[j] += h * al[j];
            sup[j] -= h * be[j];
            sub[j + 1] -= h * al[j];
            dia[j + 1] += h * be[j];
        }
        thomas(std::move(sub), std::move(dia), std::move(sup), rhs);
    };

    const int N = spec.steps;
    auto tk = [&](int k) { return t * double(k) * double(k) / (double(N) * double(N)); };
    double h_prev = tk(1);
    m_prev = m;
    implicit(1.0, h_prev, m);
    for (int k = 1; k < N; ++k) {
        const double h = tk(k + 1) - tk(k), w = h / h_prev;
        std::vector<double> rhs(n);
        for (int j = 0; j < n; ++j) rhs[j] = (1.0 + w) * m[j] - w * w / (1.0 + w) * m_prev[j];
        implicit((1.0 + 2.0 * w) / (1.0 + w), h, rhs);
        m_prev.swap(m);
        m.swap(rhs);
        h_prev = h;
    }

    DensityGrid1D g;
    g.t = t;
    g.y_lo = y_lo;
    g.dy = dy;
    g.cell_mass.resize(n);
    g.psi_grid.resize(n);
    g.density.resize(n);
    g.cum_mass.assign(n + 1, 0.0);
    g.cum_mean.assign(n + 1, 0.0);
    double edge = 0.0;
    for (int j = 0; j < n; ++j) {
        const double mj = std::max(m[j], 0.0);
        const double yc = y_lo + (j + 0.5) * dy;
        g.cell_mass[j] = mj;
        g.psi_grid[j] = std::exp(yc);
        g.density[j] = mj / (dy * g.psi_grid[j]);
        g.cum_mass[j + 1] = g.cum_mass[j] + mj;
        g.cum_mean[j + 1] = g.cum_mean[j] + mj / dy * (std::exp(y_lo + (j + 1) * dy) - std::exp(y_lo + j * dy));
        if (j >= n - n / 50) edge += mj;
    }
    for (int j = 0; j + 1 < n; ++j)
        g.mass += 0.5 * (g.density[j] + g.density[j + 1]) * (g.psi_grid[j + 1] - g.psi_grid[j]);
    if (std::abs(g.cum_mass[n] - 1.0) > 1e-2 || edge > 1e-2) {
        std::ostringstream d;
        d << "{\"mass\":" << g.cum_mass[n] << ",\"edge_mass\":" << edge << "}";
        throw Error(ErrorCode::GridTooCoarse, "density mass leaks to the truncation edge", d.str());
    }
    return g;
}

double DensityGrid1D::cdf(double psi) const {
    if (psi <= 0.0) return 0.0;
    const int n = int(cell_mass.size());
    double s = (std::log(psi) - y_lo) / dy;
    if (s <= 0.0) return 0.0;
    if (s >= n) return cum_mass[n];
    int j = int(s);
    return cum_mass[j] + (s - j) * cell_mass[j];
}

double DensityGrid1D::partial_mean(double psi) const {
    if (psi <= 0.0) return 0.0;
    const int n = int(cell_mass.size());
    const double y = std::log(psi);
    double s = (y - y_lo) / dy;
    if (s <= 0.0) return 0.0;
    if (s >= n) return cum_mean[n];
    int j = int(s);
    return cum_mean[j] + cell_mass[j] / dy * (psi - std::exp(y_lo + j * dy));
}

double DensityGrid1D::mean() const { return cum_mean.back(); }

std::string DensityGrid1D::to_csv() const {
    std::ostringstream o;
    o.precision(12);
    o << "# qdetect-density-v1 t=" << t << "\npsi,density\n";
    for (size_t j = 0; j < psi_grid.size(); ++j) o << psi_grid[j] << ',' << density[j] << '\n';
    return o.str();
}

namespace {

double quadrature_once(double t, double phi1, double phi2, const Curve& b, const ProblemParams& p, int cells,
                       int steps) {
    DensityGridSpec s;
    s.cells = cells;
    s.steps = steps;
    // shared truncation so both coordinates see the same domain
    s.psi_max = default_psi_max(t, std::max(phi1, phi2), p);
    DensityGrid1D d1 = density_1d_fokker_planck(t, phi1, p, s);
    DensityGrid1D d2 = phi2 == phi1 ? d1 : density_1d_fokker_planck(t, phi2, p, s);
    const double rate = p.lambda / p.c;
    const double g = 0.5 / std::sqrt(3.0);
    double k = 0.0;
    for (size_t j = 0; j < d1.cell_mass.size(); ++j) {
        const double mj = d1.cell_mass[j];
        if (mj == 0.0) continue;
        for (double off : {0.5 - g, 0.5 + g}) {
            const double psi = std::exp(d1.y_lo + (double(j) + off) * d1.dy);
            const double bb = b(psi);
            if (bb <= 0.0) continue;
            k += 0.5 * mj * ((p.p1 * psi - rate) * d2.cdf(bb) + p.p2 * d2.partial_mean(bb));
        }
    }
    return k;
}

}  // namespace

kernel::KernelEval kernel_density_quadrature(double t, double phi1, double phi2, const Curve& b,
                                             const ProblemParams& params, int cells, int steps) {
    double fine = quadrature_once(t, phi1, phi2, b, params, cells, steps);
    double coarse = quadrature_once(t, phi1, phi2, b, params, cells / 2, steps / 2);
    kernel::KernelEval r;
    r.value = fine;
    r.std_error = std::abs(fine - coarse);
    r.method = kernel::Method::density_quadrature;
    return r;
}

}  // namespace qdetect::density
