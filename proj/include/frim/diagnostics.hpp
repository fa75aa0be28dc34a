#pragma once

#include "frim/errors.hpp"
#include "frim/lyapunov_perron.hpp"
#include "frim/solver.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace frim {

inline void chart_model_check(const ManifoldChart& chart, const SolveProblem& problem) {
    if (chart.modes != problem.model.modes())
        throw ParameterError("chart and problem mode counts differ");
    if (chart.alpha != problem.model.alpha() || chart.epsilon != problem.model.epsilon())
        throw ParameterError("chart was built for a different operator (alpha/epsilon)");
}

struct InvarianceResult {
    double max_residual = 0.0;       // max over included samples, L2
    double max_relative = 0.0;       // residual / chart sup-norm
    std::vector<double> residuals;   // per included sample
    std::vector<size_t> excluded;    // samples whose evolved point left the box
};

/// For each sample p: start on the graph at (p, Phi(p)), evolve by t_test,
/// and measure how far the evolved state is from the graph over its own
/// low-mode point. Evolved points that leave the chart box are excluded and
/// reported rather than extrapolated.
inline InvarianceResult invariance_residual(const ManifoldChart& chart,
                                            const SolveProblem& problem, double t_test,
                                            std::span<const std::vector<double>> samples,
                                            double dt) {
    if (!(t_test >= 0.0)) throw ParameterError("t_test must be nonnegative");
    chart_model_check(chart, problem);
    InvarianceResult res;
    const double sup = chart.sup_norm();
    for (size_t s = 0; s < samples.size(); ++s) {
        const auto& p = samples[s];
        SpectralField u0 = chart_eval(chart, p);
        for (int i = 0; i < chart.N; ++i) u0.set_coeff(i + 1, p[static_cast<size_t>(i)]);
        SpectralField u = t_test == 0.0
                              ? u0
                              : evolve(u0, t_test, dt, problem).final_state;
        std::vector<double> p_out(static_cast<size_t>(chart.N));
        for (int i = 0; i < chart.N; ++i) p_out[static_cast<size_t>(i)] = u.coeff(i + 1);
        SpectralField phi_at;
        try {
            phi_at = chart_eval(chart, p_out);
        } catch (const ExtrapolationError&) {
            res.excluded.push_back(s);
            continue;
        }
        const SpectralField q = project(u, chart.N, Part::high);
        res.residuals.push_back((q - phi_at).l2_norm());
        res.max_residual = std::max(res.max_residual, res.residuals.back());
    }
    res.max_relative = sup > 0.0 ? res.max_residual / sup : res.max_residual;
    return res;
}

struct TrackingReport {
    double eta = 0.0;  // fitted prefactor in eta e^{-beta t}
    double beta = 0.0; // fitted decay exponent
    double r2 = 0.0;
    bool degenerate = false; // distance underflowed everywhere
    std::vector<double> times;
    std::vector<double> distances;
};

/// Evolves u0 and its graph shadow v0 = (P_N u0, Phi(P_N u0)) in lockstep and
/// fits log|u - v| against t by least squares. The fit window drops an
/// optional burn-in fraction and everything below the distance floor.
inline TrackingReport tracking_fit(const SpectralField& u0, const ManifoldChart& chart,
                                   const SolveProblem& problem, double horizon, double dt,
                                   double burn_fraction = 0.0) {
    chart_model_check(chart, problem);
    const double rate = problem.model.lambda(chart.N + 1) - chart.sigma;
    if (!(horizon * rate >= 3.0))
        throw ParameterError("horizon must cover at least 3 e-foldings of "
                             "lambda_{N+1} - sigma");
    if (!(dt > 0.0)) throw ParameterError("time step must be positive");
    const long long steps = std::llround(horizon / dt);
    if (std::abs(double(steps) * dt - horizon) > 1e-9 * std::max(1.0, horizon))
        throw ParameterError("horizon must be an integer multiple of dt");

    std::vector<double> p(static_cast<size_t>(chart.N));
    for (int i = 0; i < chart.N; ++i) p[static_cast<size_t>(i)] = u0.coeff(i + 1);
    SpectralField v = chart_eval(chart, p);
    for (int i = 0; i < chart.N; ++i) v.set_coeff(i + 1, p[static_cast<size_t>(i)]);

    SineTransform plan(problem.model.modes(), problem.dealias_grid());
    TrackingReport rep;
    SpectralField u = u0;
    rep.times.push_back(0.0);
    rep.distances.push_back((u - v).l2_norm());
    for (long long k = 0; k < steps; ++k) {
        u = step_exponential_euler(u, dt, problem, &plan);
        v = step_exponential_euler(v, dt, problem, &plan);
        rep.times.push_back(double(k + 1) * dt);
        rep.distances.push_back((u - v).l2_norm());
    }

    const double d0 = rep.distances.front();
    const double floor = std::max(1e-13 * d0, 1e-300);
    const double t_burn = burn_fraction * horizon;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    long long m = 0;
    for (size_t k = 0; k < rep.distances.size(); ++k) {
        if (rep.times[k] < t_burn) continue;
        if (!(rep.distances[k] > floor)) continue;
        const double x = rep.times[k];
        const double y = std::log(rep.distances[k]);
        sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
        ++m;
    }
    if (m < 3 || d0 <= 0.0) {
        rep.degenerate = true;
        return rep;
    }
    const double denom = double(m) * sxx - sx * sx;
    if (denom == 0.0) {
        rep.degenerate = true;
        return rep;
    }
    const double slope = (double(m) * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / double(m);
    rep.beta = -slope;
    rep.eta = std::exp(intercept) / d0;
    const double ss_tot = syy - sy * sy / double(m);
    double ss_res = 0.0;
    for (size_t k = 0; k < rep.distances.size(); ++k) {
        if (rep.times[k] < t_burn || !(rep.distances[k] > floor)) continue;
        const double e = std::log(rep.distances[k]) - (intercept + slope * rep.times[k]);
        ss_res += e * e;
    }
    rep.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return rep;
}

struct EnergyFitOptions {
    double transient_fraction = 0.1;    // discarded head of the series
    double settle_rel_threshold = 1e-12; // |E_k - E_end| below this is stationary
};

struct EnergyReport {
    double c = 0.0;       // decay coefficient in the discrete envelope
    double B = 0.0;       // forcing bound
    double radius = 0.0;  // absorbing-radius estimate sqrt(B/c)
    bool dissipative = false;
    bool stationary = false;
    size_t window_begin = 0, window_end = 0; // fit window (offending on failure)
};

/// Fits the discrete dissipation envelope
///   E_{k+1} <= (1 - c dt) E_k + B dt
/// over the tail of an energy series: c from a least-squares fit of the
/// decrements against E on the still-varying window, then B lifted so the
/// envelope holds on the whole tail. A non-dissipative fit (c <= 0) is
/// reported as a failure with the window that produced it.
inline EnergyReport energy_monitor(std::span<const double> energy, double dt,
                                   const EnergyFitOptions& opt = {}) {
    if (energy.size() < 3) throw ParameterError("energy series too short");
    if (!(dt > 0.0)) throw ParameterError("time step must be positive");
    const size_t n = energy.size();
    const size_t start = static_cast<size_t>(double(n) * opt.transient_fraction);
    const double e_end = energy[n - 1];
    double e_max = 0.0;
    for (size_t k = start; k < n; ++k) e_max = std::max(e_max, energy[k]);

    EnergyReport rep;
    // active window: from the transient cut to the settle point
    size_t settle = n - 1;
    for (size_t k = start; k < n; ++k) {
        if (std::abs(energy[k] - e_end) <= opt.settle_rel_threshold * std::max(e_max, 1e-300)) {
            settle = k;
            break;
        }
    }
    rep.window_begin = start;
    rep.window_end = settle;
    if (settle < start + 3) {
        rep.stationary = true;
        rep.dissipative = true;
        rep.c = 0.0;
        rep.B = 0.0;
        rep.radius = std::sqrt(e_max);
        return rep;
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    size_t m = 0;
    for (size_t k = start; k < settle && k + 1 < n; ++k) {
        const double d = (energy[k] - energy[k + 1]) / dt;
        sx += energy[k]; sy += d; sxx += energy[k] * energy[k]; sxy += energy[k] * d;
        ++m;
    }
    const double denom = double(m) * sxx - sx * sx;
    if (denom <= 0.0) {
        rep.stationary = true;
        rep.dissipative = true;
        rep.radius = std::sqrt(e_max);
        return rep;
    }
    rep.c = (double(m) * sxy - sx * sy) / denom;
    if (!(rep.c > 0.0)) {
        rep.dissipative = false;
        return rep;
    }
    // lift B so the envelope holds on the whole post-transient tail
    double b_env = 0.0;
    for (size_t k = start; k + 1 < n; ++k) {
        const double d = (energy[k] - energy[k + 1]) / dt;
        b_env = std::max(b_env, rep.c * energy[k] - d);
    }
    rep.B = b_env;
    rep.dissipative = true;
    rep.radius = std::sqrt(rep.B / rep.c);
    return rep;
}

} // namespace frim
