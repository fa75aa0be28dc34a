#pragma once

#include "frim/errors.hpp"
#include "frim/gap.hpp"
#include "frim/lyapunov_perron.hpp"
#include "frim/solver.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace frim {

enum class ExpansionMode { paper_literal, corrected };

inline const char* expansion_mode_name(ExpansionMode m) {
    return m == ExpansionMode::paper_literal ? "paper-literal" : "corrected";
}

/// Base chart Phi^0 plus correction charts Phi^1..Phi^k on the same grid.
struct ExpansionChart {
    ManifoldChart phi0;
    std::vector<ManifoldChart> corrections;
    ExpansionMode mode = ExpansionMode::corrected;

    int order() const { return static_cast<int>(corrections.size()); }
};

/// Chart of the zero-normal-diffusion manifold. Requires a model with
/// eps = 0; for alpha < 1 the gap decays and no manifold exists, so the
/// construction is rejected outright.
inline ChartBuildResult phi0_chart(const ChartGrid& grid, const SolveProblem& problem,
                                   int N, double sigma, const LPConfig& cfg,
                                   int threads = 1, bool keep_trajectories = true) {
    if (problem.model.epsilon() != 0.0)
        throw ParameterError("phi0 chart must be built from a model with epsilon = 0");
    if (problem.model.alpha() < 1.0)
        throw RegimeError("no inertial manifold without normal diffusion for alpha < 1: "
                          "the spectral gap decays to zero (decreasing-gap regime)");
    return build_chart(grid, problem, N, sigma, cfg, threads, keep_trajectories);
}

/// First-order correction chart.
///
/// paper-literal mode solves the homogeneous linear fixed-point problem for
/// u1 (no forcing term); its unique fixed point is zero, so the correction is
/// exactly zero by construction and is returned as such, bit for bit.
///
/// corrected mode adds the forcing that a first-order perturbation of the
/// normal-diffusion term produces: du1/dt + A u1 + f'(u0) u1 = Laplacian u0,
/// solved as a backward integral equation with zero low-mode data at t = 0
/// (the graph is compared at fixed p). With f = 0 this reproduces the exact
/// derivative of the high-mode response, Phi^1(p)_n = -n^2 g_n / Lambda_n^2.
inline ManifoldChart phi1_chart(const ChartBuildResult& base, const SolveProblem& problem,
                                int N, double sigma, const LPConfig& cfg,
                                ExpansionMode mode, int threads = 1) {
    const ManifoldChart& c0 = base.chart;
    const int M = problem.model.modes();
    if (c0.modes != M || c0.N != N)
        throw ParameterError("base chart does not match the problem");

    ManifoldChart out;
    out.N = N;
    out.modes = M;
    out.sigma = sigma;
    out.grid = c0.grid;
    out.alpha = problem.model.alpha();
    out.epsilon = problem.model.epsilon();
    out.k1 = problem.model.k1();
    out.k2 = problem.model.k2();
    out.l_f = problem.f.lipschitz;
    out.config = cfg;
    out.nonlinearity = problem.f.descriptor() + ";order=1;mode=" + expansion_mode_name(mode);
    out.forcing.assign(problem.g.coeffs().begin(), problem.g.coeffs().end());

    const long long count = c0.grid.node_count();
    out.phi.assign(static_cast<size_t>(count), std::vector<double>(static_cast<size_t>(M - N), 0.0));
    out.meta.assign(static_cast<size_t>(count), NodeMeta{0, 0.0, true});

    if (mode == ExpansionMode::paper_literal) {
        // homogeneous contraction: fixed point is identically zero
        out.lipschitz_estimate = 0.0;
        return out;
    }

    if (base.trajectories.size() != static_cast<size_t>(count))
        throw ParameterError("corrected mode needs the base trajectories; build the "
                             "phi0 chart with keep_trajectories = true");
    detail::check_sigma_window(problem.model, N, sigma, problem.f.lipschitz);
    cfg.validate(sigma, problem.model.lambda(N + 1));

    std::optional<SineTransform> plan;
    if (!problem.f.diagonal()) plan.emplace(M, problem.dealias_grid());

    struct NodeOut {
        std::vector<double> phi;
        NodeMeta meta;
        bool failed = false;
    };
    std::vector<NodeOut> results(static_cast<size_t>(count));

    auto solve_node = [&](long long idx) {
        const TrajectorySegment& u0 = base.trajectories[static_cast<size_t>(idx)];
        const int K = cfg.steps;
        // forcing Laplacian u0: coefficients -n^2 u0_n per node
        std::vector<SpectralField> lap(static_cast<size_t>(K) + 1, SpectralField(M));
        for (int k = 0; k <= K; ++k)
            for (int n = 1; n <= M; ++n)
                lap[static_cast<size_t>(k)].set_coeff(
                    n, -double(n) * double(n) * u0.values[static_cast<size_t>(k)].coeff(n));

        // pointwise multiplier f'(u0(t_k, x)) on the dealiased grid
        std::vector<PhysicalGrid> fprime;
        if (!problem.f.diagonal()) {
            fprime.reserve(static_cast<size_t>(K) + 1);
            for (int k = 0; k <= K; ++k) {
                PhysicalGrid g = plan->synthesize(u0.values[static_cast<size_t>(k)]);
                for (double& v : g.raw()) v = problem.f.derivative(v);
                fprime.push_back(std::move(g));
            }
        }

        NodeRhs rhs = [&](int k, const SpectralField& v) {
            SpectralField F = lap[static_cast<size_t>(k)];
            switch (problem.f.kind) {
            case NonlinearSpec::Kind::zero: break;
            case NonlinearSpec::Kind::linear:
                for (int n = 1; n <= M; ++n)
                    F.set_coeff(n, F.coeff(n) - problem.f.c * v.coeff(n));
                break;
            default: {
                PhysicalGrid g = plan->synthesize(v);
                for (int j = 0; j < g.size(); ++j)
                    g.raw()[static_cast<size_t>(j)] *= fprime[static_cast<size_t>(k)].value(j);
                SpectralField fv = plan->analyze(g);
                F -= fv;
                break;
            }
            }
            return F;
        };

        NodeOut& o = results[static_cast<size_t>(idx)];
        try {
            const SpectralField p_zero(M);
            GraphPointResult r =
                solve_fixed_point(TrajectorySegment::zero(cfg.horizon, K, sigma, M), p_zero,
                                  problem.model, N, sigma, cfg, rhs);
            o.phi.resize(static_cast<size_t>(M - N));
            for (int n = N + 1; n <= M; ++n)
                o.phi[static_cast<size_t>(n - N - 1)] = r.phi.coeff(n);
            o.meta = {r.iterations, r.contraction_estimate, true};
        } catch (const ConvergenceError&) {
            o.failed = true;
            o.meta = {cfg.max_iter, 0.0, false};
            o.phi.assign(static_cast<size_t>(M - N), 0.0);
        } catch (const NumericError&) {
            o.failed = true;
            o.meta = {0, 0.0, false};
            o.phi.assign(static_cast<size_t>(M - N), 0.0);
        }
    };

    threads = std::max(1, std::min(threads, 64));
    if (threads == 1 || count == 1) {
        for (long long i = 0; i < count; ++i) solve_node(i);
    } else {
        std::atomic<long long> next{0};
        std::vector<std::thread> pool;
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

    for (long long i = 0; i < count; ++i) {
        auto& r = results[static_cast<size_t>(i)];
        if (r.failed) out.failed_nodes.push_back(i);
        out.phi[static_cast<size_t>(i)] = std::move(r.phi);
        out.meta[static_cast<size_t>(i)] = r.meta;
    }
    return out;
}

/// Partial sum Phi^0(p) + sum_{j<=k} eps^j Phi^j(p) via chart interpolation.
inline SpectralField expansion_eval(const ExpansionChart& exp, std::span<const double> p,
                                    double epsilon, int order_k) {
    if (order_k < 0 || order_k > exp.order())
        throw ParameterError("expansion order " + std::to_string(order_k) +
                             " exceeds the stored order " + std::to_string(exp.order()));
    SpectralField out = chart_eval(exp.phi0, p);
    double scale = 1.0;
    for (int j = 1; j <= order_k; ++j) {
        scale *= epsilon;
        if (scale == 0.0) break;
        out += scale * chart_eval(exp.corrections[static_cast<size_t>(j - 1)], p);
    }
    return out;
}

/// sup over A's graph points of the distance to B's graph, where both graphs
/// are sampled on the same grid: for each node of A the infimum is taken over
/// the same-p point and every other node of B.
inline double hausdorff_semidistance(const ManifoldChart& A, const ManifoldChart& B) {
    if (A.N != B.N || A.modes != B.modes || !(A.grid == B.grid))
        throw ParameterError("charts are not comparable (grid, N, or modes differ)");
    const long long count = A.grid.node_count();
    double sup = 0.0;
    std::vector<std::vector<double>> coords(static_cast<size_t>(count));
    for (long long i = 0; i < count; ++i) coords[static_cast<size_t>(i)] = A.grid.node_coords(i);
    for (long long i = 0; i < count; ++i) {
        double best = std::numeric_limits<double>::infinity();
        const auto& pa = coords[static_cast<size_t>(i)];
        const auto& ra = A.phi[static_cast<size_t>(i)];
        for (long long j = 0; j < count; ++j) {
            double d2 = detail::node_distance_sq(pa, coords[static_cast<size_t>(j)]);
            const auto& rb = B.phi[static_cast<size_t>(j)];
            for (size_t q = 0; q < ra.size(); ++q) {
                const double d = ra[q] - rb[q];
                d2 += d * d;
            }
            best = std::min(best, d2);
        }
        sup = std::max(sup, best);
    }
    return std::sqrt(sup);
}

struct EpsStudyRow {
    double epsilon = 0.0;
    double dist = 0.0;
    double slope_running = std::numeric_limits<double>::quiet_NaN();
    long long nodes_failed = 0;
    bool feasible = false;
};

struct EpsStudyResult {
    std::vector<EpsStudyRow> rows;
    /// Observed order from the two smallest feasible eps values. This is the
    /// headline convergence rate; a least-squares fit over all rows is also
    /// reported for reference.
    std::optional<double> slope;
    std::optional<double> slope_ls;
    ManifoldChart base; // the eps = 0 chart
};

/// Builds the eps = 0 chart and a full fixed-point chart at every listed eps,
/// measures the Hausdorff semi-distance of each against the base, and fits
/// the convergence rate in eps. Sigma is re-selected per model (window
/// midpoint at the shared N) unless overridden.
inline EpsStudyResult eps_convergence_study(std::span<const double> eps_list,
                                            const SolveProblem& base_problem,
                                            const ChartGrid& grid, int N,
                                            std::optional<double> sigma_override,
                                            const LPConfig& cfg_template, int threads = 1) {
    if (base_problem.model.alpha() < 1.0)
        throw RegimeError("eps-convergence study needs a feasible eps = 0 base "
                          "(alpha >= 1); the decreasing-gap regime has none");
    if (eps_list.empty()) throw ParameterError("epsilon list must be nonempty");

    auto chart_at = [&](double eps) {
        const SolveProblem prob = base_problem.with_model(base_problem.model.with_epsilon(eps));
        const GapReport rep =
            make_gap_report(N, prob.model.alpha(), eps, prob.f.lipschitz, prob.model.k1(),
                            prob.model.k2());
        if (!rep.feasible)
            throw ConfigError("sigma window empty at epsilon = " + std::to_string(eps));
        const double sigma = sigma_override ? *sigma_override : rep.sigma;
        const LPConfig cfg =
            LPConfig::with_auto_horizon(sigma, prob.model.lambda(N + 1), cfg_template.steps,
                                        cfg_template.tol, cfg_template.max_iter,
                                        cfg_template.tail);
        return build_chart(grid, prob, N, sigma, cfg, threads, false).chart;
    };

    EpsStudyResult res;
    res.base = chart_at(0.0);

    for (double eps : eps_list) {
        EpsStudyRow row;
        row.epsilon = eps;
        try {
            ManifoldChart c = chart_at(eps);
            row.nodes_failed = static_cast<long long>(c.failed_nodes.size());
            row.feasible = true;
            row.dist = hausdorff_semidistance(c, res.base);
        } catch (const ConfigError&) {
            row.feasible = false;
            row.dist = std::numeric_limits<double>::quiet_NaN();
            row.nodes_failed = -1;
        }
        res.rows.push_back(row);
    }

    // running slopes on the eps-descending sequence of feasible rows
    std::vector<size_t> order;
    for (size_t i = 0; i < res.rows.size(); ++i)
        if (res.rows[i].feasible && res.rows[i].dist > 0.0) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return res.rows[a].epsilon > res.rows[b].epsilon;
    });
    for (size_t k = 1; k < order.size(); ++k) {
        const auto& prev = res.rows[order[k - 1]];
        auto& cur = res.rows[order[k]];
        cur.slope_running = std::log(cur.dist / prev.dist) / std::log(cur.epsilon / prev.epsilon);
    }
    if (order.size() >= 2) res.slope = res.rows[order.back()].slope_running;
    if (order.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = double(order.size());
        for (size_t i : order) {
            const double x = std::log(res.rows[i].epsilon);
            const double y = std::log(res.rows[i].dist);
            sx += x; sy += y; sxx += x * x; sxy += x * y;
        }
        res.slope_ls = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return res;
}

} // namespace frim
