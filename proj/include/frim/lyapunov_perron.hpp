#pragma once

#include "frim/errors.hpp"
#include "frim/gap.hpp"
#include "frim/nonlinearity.hpp"
#include "frim/solver.hpp"
#include "frim/spectral.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace frim {

/// Discretized backward trajectory on the uniform grid
///   t_k = -T (K-k)/K,  k = 0..K,  so t_K = 0 exactly.
struct TrajectorySegment {
    double horizon = 0.0; // T
    int steps = 0;        // K
    double sigma = 0.0;
    std::vector<SpectralField> values; // K+1 fields

    static TrajectorySegment zero(double T, int K, double sigma, int modes) {
        if (!(T > 0.0)) throw ParameterError("trajectory horizon must be positive");
        if (K < 2) throw ParameterError("trajectory needs at least 2 steps");
        TrajectorySegment tr;
        tr.horizon = T;
        tr.steps = K;
        tr.sigma = sigma;
        tr.values.assign(static_cast<size_t>(K) + 1, SpectralField(modes));
        return tr;
    }

    double node_time(int k) const { return -horizon * double(steps - k) / double(steps); }
    double dt() const { return horizon / double(steps); }
    int modes() const { return values.empty() ? 0 : values.front().modes(); }
};

namespace detail {

inline double log_l2_norm_diff(const SpectralField& x, const SpectralField& y) {
    const auto& a = x.raw();
    const auto& b = y.raw();
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    if (m == 0.0) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double r = (a[i] - b[i]) / m;
        s += r * r;
    }
    return std::log(m) + 0.5 * std::log(s);
}

} // namespace detail

/// Weighted sup norm max_k e^{sigma t_k} |phi(t_k)|, evaluated through logs so
/// that backward-flow values up to e^{~700} survive without overflow.
inline double sigma_norm(const TrajectorySegment& traj) {
    double best = 0.0;
    for (int k = 0; k <= traj.steps; ++k) {
        const double ln = traj.values[static_cast<size_t>(k)].log_l2_norm();
        if (ln == -std::numeric_limits<double>::infinity()) continue;
        best = std::max(best, std::exp(traj.sigma * traj.node_time(k) + ln));
    }
    return best;
}

/// sigma-norm of the difference of two trajectories on the same grid.
inline double sigma_norm_diff(const TrajectorySegment& a, const TrajectorySegment& b) {
    if (a.steps != b.steps || a.horizon != b.horizon)
        throw ParameterError("trajectory grids differ");
    double best = 0.0;
    for (int k = 0; k <= a.steps; ++k) {
        const double ln = detail::log_l2_norm_diff(a.values[static_cast<size_t>(k)],
                                                   b.values[static_cast<size_t>(k)]);
        if (ln == -std::numeric_limits<double>::infinity()) continue;
        best = std::max(best, std::exp(a.sigma * a.node_time(k) + ln));
    }
    return best;
}

enum class TailMode { zero, frozen };

inline const char* tail_mode_name(TailMode t) {
    return t == TailMode::zero ? "zero" : "frozen";
}

/// Discretization parameters of the backward fixed-point solve.
struct LPConfig {
    double horizon = 1.0; // T
    int steps = 64;       // K
    double tol = 1e-10;   // sigma-norm update tolerance
    int max_iter = 200;
    TailMode tail = TailMode::frozen;

    /// The truncated tail must be negligible against the tolerance:
    /// e^{(sigma - lambda_{N+1}) T} < tol/10.
    void validate(double sigma, double lambda_next) const {
        if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
        if (steps < 2) throw ConfigError("need at least 2 time steps");
        if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
        if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
        if (!(lambda_next > sigma))
            throw ConfigError("sigma must lie below lambda_{N+1}");
        if (!(std::exp((sigma - lambda_next) * horizon) < tol / 10.0))
            throw ConfigError("horizon too short: tail bound e^{(sigma-lambda)T} >= tol/10");
    }

    /// Picks the shortest horizon satisfying the tail bound, with a 2% margin.
    static LPConfig with_auto_horizon(double sigma, double lambda_next, int steps,
                                      double tol, int max_iter, TailMode tail) {
        if (!(lambda_next > sigma))
            throw ConfigError("sigma must lie below lambda_{N+1}");
        LPConfig cfg;
        cfg.horizon = 1.02 * std::log(10.0 / tol) / (lambda_next - sigma);
        cfg.steps = steps;
        cfg.tol = tol;
        cfg.max_iter = max_iter;
        cfg.tail = tail;
        cfg.validate(sigma, lambda_next);
        return cfg;
    }
};

namespace detail {

/// Interval weights for integrating e^{-z(1-theta)} against linear-in-theta
/// data over a unit interval:
///   i0 = (1 - e^{-z})/z,   i1 = (z - 1 + e^{-z})/z^2.
/// The kernel is treated exactly; only the data is interpolated, so constant
/// integrands are integrated without error regardless of stiffness.
inline void exp_interval_weights(double z, double& i0, double& i1) {
    if (z < 0.1) {
        // phi1/phi2 series; truncation below 1e-18 at z = 0.1
        double term = 1.0, s0 = 0.0, s1 = 0.0;
        double fact = 1.0;
        for (int j = 0; j <= 12; ++j) {
            fact *= double(j + 1);            // (j+1)!
            s0 += term / fact;                // z^j / (j+1)!
            s1 += term / (fact * double(j + 2)); // z^j / (j+2)!
            term *= -z;
        }
        i0 = s0;
        i1 = s1;
        return;
    }
    const double em = std::exp(-z);
    i0 = -std::expm1(-z) / z;
    i1 = (z - 1.0 + em) / (z * z);
}

} // namespace detail

/// Supplies the abstract right-hand side F at a trajectory node:
/// (node index k, current field at that node) -> F value.
using NodeRhs = std::function<SpectralField(int, const SpectralField&)>;

/// One application of the backward integral map
///   J(phi,p)(t) = e^{-tA} p - int_t^0 e^{-(t-s)A} P_N F(phi(s)) ds
///                 + int_{-inf}^t e^{-(t-s)A} Q_N F(phi(s)) ds
/// on the trajectory grid. The quadrature integrates the exact semigroup
/// kernel against piecewise-linear data; both mode ranges are accumulated by
/// one-interval recurrences, so one sweep costs O(K M). The tail over
/// (-inf, -T] is dropped (zero) or closed in closed form with the integrand
/// frozen at s = -T.
inline TrajectorySegment lp_apply(const TrajectorySegment& traj, const SpectralField& p_low,
                                  const SpectrumModel& model, int N, double sigma,
                                  const LPConfig& cfg, const NodeRhs& rhs) {
    const int M = model.modes();
    const int K = traj.steps;
    if (traj.modes() != M) throw ParameterError("trajectory does not match the model");
    if (p_low.modes() != M) throw ParameterError("p does not match the model");
    if (N < 1 || N >= M)
        throw ParameterError("manifold dimension N must satisfy 1 <= N < M");
    if (K != cfg.steps || traj.horizon != cfg.horizon)
        throw ParameterError("trajectory grid does not match the configuration");
    if (model.lambda(N) * cfg.horizon > 700.0)
        throw ConfigError("backward flow e^{lambda_N T} exceeds floating-point range");

    // F at every node of the current iterate
    std::vector<SpectralField> F;
    F.reserve(static_cast<size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) {
        F.push_back(rhs(k, traj.values[static_cast<size_t>(k)]));
        if (F.back().modes() != M)
            throw ParameterError("rhs returned a field with the wrong mode count");
        if (!F.back().all_finite())
            throw NumericError("non-finite right-hand side in the integral map");
    }

    TrajectorySegment out = TrajectorySegment::zero(traj.horizon, K, sigma, M);
    const double dt = traj.dt();

    for (int n = 1; n <= M; ++n) {
        const double lam = model.lambda(n);
        const double z = lam * dt;
        double i0, i1;
        detail::exp_interval_weights(z, i0, i1);
        const double w_left = dt * (i0 - i1);
        const double w_right = dt * i1;

        if (n > N) {
            // high range: forward recurrence over [-T, t_k] plus tail closure
            const double decay = std::exp(-z);
            double q = (cfg.tail == TailMode::frozen) ? F[0].coeff(n) / lam : 0.0;
            out.values[0].set_coeff(n, q);
            for (int k = 1; k <= K; ++k) {
                q = decay * q + w_left * F[static_cast<size_t>(k - 1)].coeff(n) +
                    w_right * F[static_cast<size_t>(k)].coeff(n);
                out.values[static_cast<size_t>(k)].set_coeff(n, q);
            }
        } else {
            // low range: backward recurrence for int_{t_k}^0, then the
            // backward free flow of p
            const double grow = std::exp(z);
            const double pn = p_low.coeff(n);
            double P = 0.0;
            out.values[static_cast<size_t>(K)].set_coeff(n, pn);
            for (int k = K - 1; k >= 0; --k) {
                P = grow * (P + w_left * F[static_cast<size_t>(k)].coeff(n) +
                            w_right * F[static_cast<size_t>(k + 1)].coeff(n));
                out.values[static_cast<size_t>(k)].set_coeff(
                    n, std::exp(-lam * out.node_time(k)) * pn - P);
            }
        }
    }
    return out;
}

namespace detail {

inline void check_sigma_window(const SpectrumModel& model, int N, double sigma, double l_f) {
    const double lo = model.lambda(N) + 2.0 * l_f * model.k1();
    const double hi = model.lambda(N + 1) - 2.0 * l_f * model.k1() * model.k2();
    if (!(sigma > lo) || !(sigma < hi))
        throw ConfigError("sigma = " + std::to_string(sigma) +
                          " outside the admissible window (" + std::to_string(lo) + ", " +
                          std::to_string(hi) + ")");
}

} // namespace detail

/// Integral map for the concrete problem F(u) = g - f(u).
inline TrajectorySegment lp_map(const TrajectorySegment& traj, const SpectralField& p,
                                const SolveProblem& problem, int N, double sigma,
                                const LPConfig& cfg) {
    detail::check_sigma_window(problem.model, N, sigma, problem.f.lipschitz);
    cfg.validate(sigma, problem.model.lambda(N + 1));
    std::optional<SineTransform> plan;
    if (!problem.f.diagonal())
        plan.emplace(problem.model.modes(), problem.dealias_grid());
    const SineTransform* planp = plan ? &*plan : nullptr;
    NodeRhs rhs = [&](int, const SpectralField& v) {
        return rhs_nonlinear(v, problem, planp);
    };
    return lp_apply(traj, project(p, N, Part::low), problem.model, N, sigma, cfg, rhs);
}

struct GraphPointResult {
    SpectralField phi;           // Q_N part of phi(0)
    TrajectorySegment trajectory;
    double contraction_estimate = 0.0;
    int iterations = 0;
    std::vector<double> update_history;
};

/// Picard iteration of the integral map from a caller-supplied initial
/// trajectory. The contraction estimate is the largest ratio of successive
/// update norms measured above the noise floor.
inline GraphPointResult solve_fixed_point(TrajectorySegment initial,
                                          const SpectralField& p_low,
                                          const SpectrumModel& model, int N, double sigma,
                                          const LPConfig& cfg, const NodeRhs& rhs) {
    cfg.validate(sigma, model.lambda(N + 1));
    TrajectorySegment phi = std::move(initial);
    std::vector<double> updates;
    bool converged = false;
    int iterations = 0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        TrajectorySegment next = lp_apply(phi, p_low, model, N, sigma, cfg, rhs);
        const double delta = sigma_norm_diff(next, phi);
        updates.push_back(delta);
        phi = std::move(next);
        iterations = it;
        if (!std::isfinite(delta))
            throw NumericError("fixed-point update norm became non-finite");
        if (delta < cfg.tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("fixed-point iteration did not converge in " +
                                   std::to_string(cfg.max_iter) + " iterations",
                               updates);
    double contraction = 0.0;
    for (size_t i = 0; i + 1 < updates.size(); ++i) {
        if (updates[i] >= 10.0 * cfg.tol && updates[i] > 0.0)
            contraction = std::max(contraction, updates[i + 1] / updates[i]);
    }
    GraphPointResult res;
    res.phi = project(phi.values[static_cast<size_t>(phi.steps)], N, Part::high);
    res.trajectory = std::move(phi);
    res.contraction_estimate = contraction;
    res.iterations = iterations;
    res.update_history = std::move(updates);
    return res;
}

/// Initial iterate e^{-tA} p on the low modes (the exact fixed point when
/// F vanishes).
inline TrajectorySegment initial_trajectory(const SpectralField& p_low,
                                            const SpectrumModel& model, int N,
                                            double sigma, const LPConfig& cfg) {
    TrajectorySegment tr =
        TrajectorySegment::zero(cfg.horizon, cfg.steps, sigma, model.modes());
    for (int k = 0; k <= cfg.steps; ++k) {
        const double t = tr.node_time(k);
        for (int n = 1; n <= N; ++n)
            tr.values[static_cast<size_t>(k)].set_coeff(
                n, p_low.coeff(n) * std::exp(-model.lambda(n) * t));
    }
    return tr;
}

/// Solves for one graph point Phi(p) = Q_N phi(p)(0).
inline GraphPointResult solve_graph_point(const SpectralField& p, const SolveProblem& problem,
                                          int N, double sigma, const LPConfig& cfg) {
    detail::check_sigma_window(problem.model, N, sigma, problem.f.lipschitz);
    std::optional<SineTransform> plan;
    if (!problem.f.diagonal())
        plan.emplace(problem.model.modes(), problem.dealias_grid());
    const SineTransform* planp = plan ? &*plan : nullptr;
    NodeRhs rhs = [&](int, const SpectralField& v) {
        return rhs_nonlinear(v, problem, planp);
    };
    const SpectralField p_low = project(p, N, Part::low);
    return solve_fixed_point(initial_trajectory(p_low, problem.model, N, sigma, cfg),
                             p_low, problem.model, N, sigma, cfg, rhs);
}

/// Coordinates of low-mode sample points: a tensor grid over a box.
struct AxisSpec {
    double lo = 0.0;
    double hi = 0.0;
    int count = 1;

    double coord(int i) const {
        if (count == 1) return 0.5 * (lo + hi);
        return lo + (hi - lo) * double(i) / double(count - 1);
    }
    bool operator==(const AxisSpec&) const = default;
};

struct ChartGrid {
    std::vector<AxisSpec> axes;

    long long node_count() const {
        long long c = 1;
        for (const auto& a : axes) c *= a.count;
        return c;
    }

    /// Row-major multi-index (last axis fastest).
    std::vector<int> multi_index(long long node) const {
        std::vector<int> idx(axes.size(), 0);
        for (size_t i = axes.size(); i-- > 0;) {
            idx[i] = static_cast<int>(node % axes[i].count);
            node /= axes[i].count;
        }
        return idx;
    }

    std::vector<double> node_coords(long long node) const {
        const auto idx = multi_index(node);
        std::vector<double> p(axes.size());
        for (size_t i = 0; i < axes.size(); ++i) p[i] = axes[i].coord(idx[i]);
        return p;
    }

    /// Symmetric box [-R, R]^N with `count` nodes per axis.
    static ChartGrid box(int dim, double radius, int count) {
        if (dim < 1) throw ParameterError("grid needs at least one axis");
        if (!(radius > 0.0)) throw ParameterError("grid radius must be positive");
        if (count < 1) throw ParameterError("grid needs at least one node per axis");
        ChartGrid g;
        g.axes.assign(static_cast<size_t>(dim), AxisSpec{-radius, radius, count});
        return g;
    }

    bool operator==(const ChartGrid&) const = default;
};

struct NodeMeta {
    int iterations = 0;
    double contraction = 0.0;
    bool converged = false;
};

/// The sampled graph Phi : P_N H -> Q_N H plus the data needed to rebuild or
/// verify it.
struct ManifoldChart {
    int N = 0;
    int modes = 0;
    double sigma = 0.0;
    ChartGrid grid;
    std::vector<std::vector<double>> phi; // per node, modes N+1..M
    std::vector<NodeMeta> meta;
    double lipschitz_estimate = 0.0;
    std::vector<long long> failed_nodes;

    // provenance
    double alpha = 0.0, epsilon = 0.0, k1 = 1.0, k2 = 1.0, l_f = 0.0;
    LPConfig config;
    std::string nonlinearity;     // descriptor string
    std::vector<double> forcing;  // g coefficients

    bool partial() const { return !failed_nodes.empty(); }

    SpectralField phi_field(long long node) const {
        SpectralField out(modes);
        const auto& row = phi[static_cast<size_t>(node)];
        for (int n = N + 1; n <= modes; ++n)
            out.set_coeff(n, row[static_cast<size_t>(n - N - 1)]);
        return out;
    }

    double sup_norm() const {
        double best = 0.0;
        for (size_t i = 0; i < phi.size(); ++i) {
            double s = 0.0;
            for (double v : phi[i]) s += v * v;
            best = std::max(best, std::sqrt(s));
        }
        return best;
    }
};

struct ChartBuildResult {
    ManifoldChart chart;
    std::vector<TrajectorySegment> trajectories; // per node, empty unless kept
};

namespace detail {

inline double node_distance_sq(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace detail

/// Solves Phi at every grid node. Node solves are independent and run on
/// `threads` workers; results are assembled in node order so the outcome does
/// not depend on scheduling. A node that fails to converge marks the chart
/// partial instead of aborting the build.
inline ChartBuildResult build_chart(const ChartGrid& grid, const SolveProblem& problem,
                                    int N, double sigma, const LPConfig& cfg,
                                    int threads = 1, bool keep_trajectories = false) {
    detail::check_sigma_window(problem.model, N, sigma, problem.f.lipschitz);
    cfg.validate(sigma, problem.model.lambda(N + 1));
    if (static_cast<int>(grid.axes.size()) != N)
        throw ParameterError("grid dimension does not match N");
    const long long count = grid.node_count();
    if (count < 1) throw ParameterError("empty chart grid");
    threads = std::max(1, std::min(threads, 64));

    std::optional<SineTransform> plan;
    if (!problem.f.diagonal())
        plan.emplace(problem.model.modes(), problem.dealias_grid());
    const SineTransform* planp = plan ? &*plan : nullptr;

    struct NodeOut {
        std::vector<double> phi;
        NodeMeta meta;
        TrajectorySegment traj;
        bool failed = false;
    };
    std::vector<NodeOut> results(static_cast<size_t>(count));

    const int M = problem.model.modes();
    auto solve_node = [&](long long idx) {
        const auto coords = grid.node_coords(idx);
        SpectralField p(M);
        for (int i = 0; i < N; ++i) p.set_coeff(i + 1, coords[static_cast<size_t>(i)]);
        NodeRhs rhs = [&](int, const SpectralField& v) {
            return rhs_nonlinear(v, problem, planp);
        };
        NodeOut& out = results[static_cast<size_t>(idx)];
        try {
            GraphPointResult r =
                solve_fixed_point(initial_trajectory(p, problem.model, N, sigma, cfg), p,
                                  problem.model, N, sigma, cfg, rhs);
            out.phi.resize(static_cast<size_t>(M - N));
            for (int n = N + 1; n <= M; ++n)
                out.phi[static_cast<size_t>(n - N - 1)] = r.phi.coeff(n);
            out.meta = {r.iterations, r.contraction_estimate, true};
            if (keep_trajectories) out.traj = std::move(r.trajectory);
        } catch (const ConvergenceError&) {
            out.failed = true;
            out.meta = {cfg.max_iter, 0.0, false};
            out.phi.assign(static_cast<size_t>(M - N), 0.0);
        } catch (const NumericError&) {
            out.failed = true;
            out.meta = {0, 0.0, false};
            out.phi.assign(static_cast<size_t>(M - N), 0.0);
        }
    };

    if (threads == 1 || count == 1) {
        for (long long i = 0; i < count; ++i) solve_node(i);
    } else {
        std::atomic<long long> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(threads));
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    const long long i = next.fetch_add(1);
                    if (i >= count) return;
                    solve_node(i);
                }
            });
        for (auto& th : pool) th.join();
    }

    ChartBuildResult res;
    ManifoldChart& chart = res.chart;
    chart.N = N;
    chart.modes = M;
    chart.sigma = sigma;
    chart.grid = grid;
    chart.phi.reserve(static_cast<size_t>(count));
    chart.meta.reserve(static_cast<size_t>(count));
    for (long long i = 0; i < count; ++i) {
        auto& r = results[static_cast<size_t>(i)];
        if (r.failed) chart.failed_nodes.push_back(i);
        chart.phi.push_back(std::move(r.phi));
        chart.meta.push_back(r.meta);
        if (keep_trajectories) res.trajectories.push_back(std::move(r.traj));
    }

    chart.alpha = problem.model.alpha();
    chart.epsilon = problem.model.epsilon();
    chart.k1 = problem.model.k1();
    chart.k2 = problem.model.k2();
    chart.l_f = problem.f.lipschitz;
    chart.config = cfg;
    chart.nonlinearity = problem.f.descriptor();
    chart.forcing.assign(problem.g.coeffs().begin(), problem.g.coeffs().end());

    // discrete Lipschitz estimate: max slope between adjacent converged nodes
    std::vector<long long> stride(grid.axes.size(), 1);
    for (size_t i = grid.axes.size() - 1; i-- > 0;)
        stride[i] = stride[i + 1] * grid.axes[i + 1].count;
    double lip = 0.0;
    for (long long i = 0; i < count; ++i) {
        if (!chart.meta[static_cast<size_t>(i)].converged) continue;
        const auto idx = grid.multi_index(i);
        for (size_t ax = 0; ax < grid.axes.size(); ++ax) {
            if (idx[ax] + 1 >= grid.axes[ax].count) continue;
            const long long j = i + stride[ax];
            if (!chart.meta[static_cast<size_t>(j)].converged) continue;
            const double h = grid.axes[ax].coord(idx[ax] + 1) - grid.axes[ax].coord(idx[ax]);
            double s = 0.0;
            for (size_t q = 0; q < chart.phi[static_cast<size_t>(i)].size(); ++q) {
                const double d = chart.phi[static_cast<size_t>(j)][q] -
                                 chart.phi[static_cast<size_t>(i)][q];
                s += d * d;
            }
            lip = std::max(lip, std::sqrt(s) / h);
        }
    }
    chart.lipschitz_estimate = lip;
    return res;
}

/// Multilinear interpolation of Phi over the tensor grid. Exact at the nodes
/// and on data affine in p.
inline SpectralField chart_eval(const ManifoldChart& chart, std::span<const double> p) {
    if (static_cast<int>(p.size()) != chart.N)
        throw ParameterError("coordinate count does not match the chart dimension");
    const auto& axes = chart.grid.axes;

    struct AxisPos {
        int i0;
        double w1; // weight of node i0+1
        bool active;
    };
    std::vector<AxisPos> pos(axes.size());
    for (size_t ax = 0; ax < axes.size(); ++ax) {
        const AxisSpec& a = axes[ax];
        const double span_tol = 1e-12 * std::max(1.0, std::abs(a.hi) + std::abs(a.lo));
        if (a.count == 1) {
            if (std::abs(p[ax] - a.coord(0)) > 1e-9 * std::max(1.0, std::abs(a.coord(0))))
                throw ExtrapolationError("coordinate " + std::to_string(ax) +
                                         " off the chart's singleton axis");
            pos[ax] = {0, 0.0, false};
            continue;
        }
        if (p[ax] < a.lo - span_tol || p[ax] > a.hi + span_tol)
            throw ExtrapolationError("coordinate " + std::to_string(ax) + " = " +
                                     std::to_string(p[ax]) + " outside [" +
                                     std::to_string(a.lo) + ", " + std::to_string(a.hi) + "]");
        const double u = (std::clamp(p[ax], a.lo, a.hi) - a.lo) / (a.hi - a.lo) *
                         double(a.count - 1);
        int i0 = static_cast<int>(std::floor(u));
        if (i0 >= a.count - 1) i0 = a.count - 2;
        pos[ax] = {i0, u - double(i0), true};
    }

    std::vector<long long> stride(axes.size(), 1);
    for (size_t i = axes.size() - 1; i-- > 0;) stride[i] = stride[i + 1] * axes[i + 1].count;

    std::vector<size_t> active;
    for (size_t ax = 0; ax < axes.size(); ++ax)
        if (pos[ax].active) active.push_back(ax);

    SpectralField out(chart.modes);
    const size_t corners = size_t{1} << active.size();
    for (size_t corner = 0; corner < corners; ++corner) {
        long long node = 0;
        double w = 1.0;
        for (size_t ax = 0; ax < axes.size(); ++ax) node += pos[ax].i0 * stride[ax];
        for (size_t b = 0; b < active.size(); ++b) {
            const size_t ax = active[b];
            const bool up = (corner >> b) & 1u;
            if (up) {
                node += stride[ax];
                w *= pos[ax].w1;
            } else {
                w *= 1.0 - pos[ax].w1;
            }
        }
        if (w == 0.0) continue;
        if (!chart.meta[static_cast<size_t>(node)].converged)
            throw ParameterError("chart is partial at node " + std::to_string(node));
        const auto& row = chart.phi[static_cast<size_t>(node)];
        for (int n = chart.N + 1; n <= chart.modes; ++n)
            out.set_coeff(n, out.coeff(n) + w * row[static_cast<size_t>(n - chart.N - 1)]);
    }
    return out;
}

} // namespace frim
