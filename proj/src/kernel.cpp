#include "qdetect/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qdetect/density.hpp"
#include "qdetect/error.hpp"
#include "qdetect/parallel.hpp"
#include "qdetect/quadrature.hpp"

namespace qdetect::kernel {

namespace {

inline double normal_k(const RngStream& rng, uint64_t k) {
    double z1, z2;
    rng.normals_at(k >> 1, z1, z2);
    return (k & 1) ? z2 : z1;
}


void check_grid(const std::vector<double>& t) {
    if (t.empty() || t[0] != 0.0) throw Error(ErrorCode::InvalidArgument, "time grid must start at 0");
    for (size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw Error(ErrorCode::InvalidArgument, "time grid must increase");
}

}  // namespace

std::vector<double> uniform_grid(double t, double dt) {
    if (!(t > 0.0) || !(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid needs t, dt > 0");
    std::vector<double> g{0.0};
    const long n = long(std::ceil(t / dt - 1e-9));
    for (long k = 1; k < n; ++k) g.push_back(k * dt);
    g.push_back(t);
    return g;
}

PhiPath sample_phi_exact(const Point2& start, const std::vector<double>& t_grid, const ProblemParams& params,
                         uint64_t seed, uint64_t index) {
    check_grid(t_grid);
    PhiPath path;
    path.times = t_grid;
    path.seed = seed;
    const double lam = params.lambda, mu = params.mu;
    const double s0[2] = {start.phi1, start.phi2};
    std::vector<double>* out[2] = {&path.phi1, &path.phi2};
    const StreamTag tags[2] = {StreamTag::Coord1, StreamTag::Coord2};
    for (int c = 0; c < 2; ++c) {
        RngStream rng(seed, stream_id(index, tags[c]));
        auto& v = *out[c];
        v.resize(t_grid.size());
        v[0] = s0[c];
        double phi = s0[c];
        for (size_t k = 1; k < t_grid.size(); ++k) {
            const double dt = t_grid[k] - t_grid[k - 1];
            const double a = std::exp(mu * std::sqrt(dt) * rng.normal() + (lam - 0.5 * mu * mu) * dt);
            phi = a * phi + 0.5 * lam * dt * (a + 1.0);
            v[k] = phi;
        }
    }
    return path;
}

PhiPath sample_phi_euler(const Point2& start, const std::vector<double>& t_grid, const ProblemParams& params,
                         uint64_t seed, uint64_t index) {
    check_grid(t_grid);
    PhiPath path;
    path.times = t_grid;
    path.seed = seed;
    const double lam = params.lambda, mu = params.mu;
    const double s0[2] = {start.phi1, start.phi2};
    std::vector<double>* out[2] = {&path.phi1, &path.phi2};
    for (int c = 0; c < 2; ++c) {
        RngStream rng(seed, stream_id(index, StreamTag::Euler) + (uint64_t(c) << 60));
        auto& v = *out[c];
        v.resize(t_grid.size());
        v[0] = s0[c];
        double phi = s0[c];
        for (size_t k = 1; k < t_grid.size(); ++k) {
            const double dt = t_grid[k] - t_grid[k - 1];
            phi += lam * (1.0 + phi) * dt + mu * phi * std::sqrt(dt) * rng.normal();
            phi = std::max(phi, 0.0);
            v[k] = phi;
        }
    }
    return path;
}

StepCalibration calibrate_step(const ProblemParams& params, double horizon, double phi_start, int n_paths,
                               double rel_tol, uint64_t seed, double dt0, double dt_min) {
    const double lam = params.lambda, mu = params.mu;
    const long n0 = std::max(1L, long(std::ceil(horizon / dt0)));
    dt0 = horizon / n0;
    std::vector<std::vector<double>> inc(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        RngStream rng(seed, stream_id(uint64_t(i), StreamTag::Coord1));
        inc[i].resize(n0);
        for (long k = 0; k < n0; ++k) inc[i][k] = std::sqrt(dt0) * rng.normal();
    }
    auto terminal = [&](const std::vector<double>& dw, double dt) {
        double phi = phi_start;
        for (double w : dw) {
            double a = std::exp(mu * w + (lam - 0.5 * mu * mu) * dt);
            phi = a * phi + 0.5 * lam * dt * (a + 1.0);
        }
        return phi;
    };
    std::vector<double> coarse(n_paths);
    for (int i = 0; i < n_paths; ++i) coarse[i] = terminal(inc[i], dt0);
    StepCalibration cal;
    double dt = dt0;
    for (int level = 0; dt > dt_min; ++level) {
        double ss = 0.0;
        for (int i = 0; i < n_paths; ++i) {
            // Brownian bridge midpoints refine the same path
            RngStream br(seed, stream_id(uint64_t(i), StreamTag::Bridge1) ^ (uint64_t(level) << 56));
            std::vector<double> fine(2 * inc[i].size());
            const double sd = std::sqrt(dt / 4.0);
            for (size_t k = 0; k < inc[i].size(); ++k) {
                double dev = sd * br.normal();
                fine[2 * k] = 0.5 * inc[i][k] + dev;
                fine[2 * k + 1] = 0.5 * inc[i][k] - dev;
            }
            double f = terminal(fine, dt / 2);
            double r = (f - coarse[i]) / f;
            ss += r * r;
            coarse[i] = f;
            inc[i].swap(fine);
        }
        cal.dt = dt;
        cal.rel_change = std::sqrt(ss / n_paths);
        cal.halvings = level;
        if (cal.rel_change < rel_tol) return cal;
        dt /= 2;
    }
    throw Error(ErrorCode::BudgetExhausted, "step calibration reached the minimum step");
}

void flow_at_nodes(const ProblemParams& params, const std::vector<double>& nodes, double dt, RngStream& rng,
                   double* A, double* C) {
    const RngStream bridge(rng.seed(), rng.stream() ^ (uint64_t(1) << 62));
    const double lam = params.lambda, mu = params.mu, drift = lam - 0.5 * mu * mu;
    double a_state = 1.0, c_state = 0.0, t = 0.0;
    uint64_t k = 0;
    size_t j = 0;
    while (j < nodes.size() && nodes[j] <= 0.0) {
        A[j] = 1.0;
        C[j] = 0.0;
        ++j;
    }
    const double sdt = std::sqrt(dt);
    while (j < nodes.size()) {
        const double dw = sdt * rng.normal();
        const double t_next = t + dt;
        // nodes inside (t, t_next]: bridge from the step's endpoints
        while (j < nodes.size() && nodes[j] <= t_next) {
            const double tau = nodes[j] - t;
            double w = dw * (tau / dt);
            if (tau < dt) w += std::sqrt(tau * (dt - tau) / dt) * normal_k(bridge, k);
            const double a = std::exp(mu * w + drift * tau);
            A[j] = a_state * a;
            C[j] = a * c_state + 0.5 * lam * tau * (a + 1.0);
            ++j;
        }
        const double a = std::exp(mu * dw + drift * dt);
        a_state *= a;
        c_state = a * c_state + 0.5 * lam * dt * (a + 1.0);
        t = t_next;
        ++k;
    }
}

std::vector<double> graded_nodes(double horizon, int panels, int order, std::vector<double>* weights) {
    const auto& g = quad::gauss_legendre(order);
    std::vector<double> br{0.0};
    for (int j = panels - 1; j >= 0; --j) br.push_back(std::ldexp(horizon, -j));
    std::vector<double> t;
    if (weights) weights->clear();
    for (size_t p = 0; p + 1 < br.size(); ++p) {
        const double m = 0.5 * (br[p] + br[p + 1]), h = 0.5 * (br[p + 1] - br[p]);
        for (size_t i = 0; i < g.x.size(); ++i) {
            t.push_back(m + h * g.x[i]);
            if (weights) weights->push_back(h * g.w[i]);
        }
    }
    return t;
}

FlowEnsemble::FlowEnsemble(const ProblemParams& params, const FlowSpec& spec) : params_(params), spec_(spec) {
    horizon_ = spec.horizon > 0.0 ? spec.horizon : std::max(5.0 / params.lambda, 5.0);
    t_ = graded_nodes(horizon_, spec.panels, spec.order, &w_);
    build();
}

FlowEnsemble::FlowEnsemble(const ProblemParams& params, const FlowSpec& spec, std::vector<double> nodes)
    : params_(params), spec_(spec), t_(std::move(nodes)) {
    for (size_t i = 1; i < t_.size(); ++i)
        if (!(t_[i] > t_[i - 1])) throw Error(ErrorCode::InvalidArgument, "ensemble nodes must increase");
    horizon_ = t_.empty() ? 0.0 : t_.back();
    w_.assign(t_.size(), 0.0);
    build();
}

void FlowEnsemble::build() {
    if (spec_.n_paths < 2) throw Error(ErrorCode::InvalidArgument, "ensemble needs at least two paths");
    if (!(spec_.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "ensemble needs dt > 0");
    n_paths_ = size_t(spec_.n_paths);
    const size_t nt = t_.size();
    data_.assign(n_paths_ * nt * 4, 0.0);
    parallel_for(n_paths_, [&](size_t i) {
        std::vector<double> a(nt), c(nt);
        double* blk = &data_[i * nt * 4];
        const StreamTag tags[2] = {StreamTag::Coord1, StreamTag::Coord2};
        for (int co = 0; co < 2; ++co) {
            RngStream rng(spec_.seed, stream_id(i, tags[co]));
            flow_at_nodes(params_, t_, spec_.dt, rng, a.data(), c.data());
            for (size_t j = 0; j < nt; ++j) {
                blk[4 * j + 2 * co] = a[j];
                blk[4 * j + 2 * co + 1] = c[j];
            }
        }
    });
}

FlowEnsemble FlowEnsemble::swapped() const {
    FlowEnsemble e;
    e.params_ = params_;
    std::swap(e.params_.p1, e.params_.p2);
    e.spec_ = spec_;
    e.horizon_ = horizon_;
    e.n_paths_ = n_paths_;
    e.t_ = t_;
    e.w_ = w_;
    e.data_.resize(data_.size());
    for (size_t k = 0; k < data_.size(); k += 4) {
        e.data_[k] = data_[k + 2];
        e.data_[k + 1] = data_[k + 3];
        e.data_[k + 2] = data_[k];
        e.data_[k + 3] = data_[k + 1];
    }
    return e;
}

namespace {

template <class Acc>
void reduce_paths(const FlowEnsemble& ens, Acc&& per_path, double& mean, double& se) {
    // fixed-order summation; independent of the worker count
    const size_t n = ens.n_paths();
    double s = 0.0, ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double v = per_path(ens.coeffs(i));
        s += v;
        ss += v * v;
    }
    mean = s / double(n);
    double var = std::max(0.0, ss / double(n) - mean * mean) * double(n) / double(n - 1);
    se = std::sqrt(var / double(n));
}

}  // namespace

KernelEval kernel_K(const FlowEnsemble& ens, size_t node, double phi1, double phi2, const Curve& b) {
    const ProblemParams& p = ens.params();
    const double top = b.max_value(), rate = p.lambda / p.c;
    KernelEval r;
    r.method = Method::monte_carlo;
    reduce_paths(
        ens,
        [&](const double* blk) {
            const double* q = blk + 4 * node;
            const double f1 = phi1 * q[0] + q[1], f2 = phi2 * q[2] + q[3];
            if (f2 >= top || !(f2 < b(f1))) return 0.0;
            return p.p1 * f1 + p.p2 * f2 - rate;
        },
        r.value, r.std_error);
    return r;
}

KernelEval kernel_K(double t, double phi1, double phi2, const Curve& b, const ProblemParams& params, Method method,
                    const KernelBudget& budget) {
    if (!(t > 0.0)) throw Error(ErrorCode::DomainError, "kernel needs t > 0");
    KernelEval r;
    if (method == Method::monte_carlo) {
        FlowSpec fs;
        fs.n_paths = budget.n_paths;
        fs.dt = budget.dt;
        fs.seed = budget.seed;
        FlowEnsemble ens(params, fs, {t});
        r = kernel_K(ens, 0, phi1, phi2, b);
    } else {
        r = density::kernel_density_quadrature(t, phi1, phi2, b, params, budget.density_cells, budget.density_steps);
    }
    if (budget.target_std_error > 0.0 && r.std_error > budget.target_std_error)
        throw Error(ErrorCode::BudgetExhausted, "kernel standard error above target",
                    "{\"std_error\":" + std::to_string(r.std_error) +
                        ",\"target\":" + std::to_string(budget.target_std_error) + "}");
    return r;
}

DiscountedK discounted_K_shifted(const FlowEnsemble& ens, double phi1, double phi2, const Curve& b, double shift) {
    const ProblemParams& p = ens.params();
    const size_t nt = ens.n_nodes();
    std::vector<double> dw(nt);
    for (size_t j = 0; j < nt; ++j) dw[j] = ens.weights()[j] * std::exp(-p.lambda * ens.t()[j]);
    const double top = b.max_value() + shift, rate = p.lambda / p.c;
    DiscountedK r;
    reduce_paths(
        ens,
        [&](const double* q) {
            double s = 0.0;
            for (size_t j = 0; j < nt; ++j, q += 4) {
                const double f2 = phi2 * q[2] + q[3];
                if (f2 >= top) continue;
                const double f1 = phi1 * q[0] + q[1];
                if (f2 - shift < b(f1)) s += dw[j] * (p.p1 * f1 + p.p2 * f2 - rate);
            }
            return s;
        },
        r.value, r.std_error);
    const double z = b.zero();
    if (top <= 0.0) {
        r.tail_bound = 0.0;
    } else {
        double sup_l = std::max(rate, p.p1 * z + p.p2 * top - rate);
        r.tail_bound = std::isfinite(sup_l) ? sup_l * std::exp(-p.lambda * ens.horizon()) / p.lambda
                                            : std::numeric_limits<double>::infinity();
    }
    return r;
}

DiscountedK discounted_K_integral(const FlowEnsemble& ens, double phi1, double phi2, const Curve& b) {
    return discounted_K_shifted(ens, phi1, phi2, b, 0.0);
}

}  // namespace qdetect::kernel
