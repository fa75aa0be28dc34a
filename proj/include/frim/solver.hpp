#pragma once

#include "frim/errors.hpp"
#include "frim/nonlinearity.hpp"
#include "frim/spectral.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace frim {

/// Blow-up guard for time integration: the growth condition keeps true
/// solutions bounded, so reaching this norm signals a configuration bug.
inline constexpr double kBlowUpNorm = 1e6;

/// du/dt + A u + f(u) = g in spectral form, with initial state u0.
struct SolveProblem {
    SpectrumModel model;
    NonlinearSpec f;
    SpectralField g;
    SpectralField u0;

    SolveProblem(SpectrumModel model_, NonlinearSpec f_, SpectralField g_, SpectralField u0_)
        : model(std::move(model_)), f(std::move(f_)), g(std::move(g_)), u0(std::move(u0_)) {
        g.check_model(model);
        u0.check_model(model);
    }

    /// Grid used for pointwise nonlinear evaluation. J = 4M integrates the
    /// cubic of a band-limited field exactly (frequencies up to 6M in the
    /// half-interval variable alias above mode M only when J < 4M).
    int dealias_grid() const { return 4 * model.modes(); }

    SolveProblem with_model(SpectrumModel m) const {
        return SolveProblem(std::move(m), f, g, u0);
    }
};

/// phi1(z) = (1 - e^{-z})/z, the first exponential-integrator weight.
inline double exp_phi1(double z) {
    if (z == 0.0) return 1.0;
    return -std::expm1(-z) / z;
}

/// Right-hand side F(u) = g - f(u) in spectral coefficients.
/// Diagonal kinds are evaluated mode-exactly; pointwise kinds go through the
/// dealiased collocation grid. `plan` may supply a cached transform whose
/// grid matches problem.dealias_grid().
inline SpectralField rhs_nonlinear(const SpectralField& u, const SolveProblem& problem,
                                   const SineTransform* plan = nullptr) {
    u.check_model(problem.model);
    const int m = problem.model.modes();
    SpectralField out(m);
    switch (problem.f.kind) {
    case NonlinearSpec::Kind::zero:
        out = problem.g;
        break;
    case NonlinearSpec::Kind::linear:
        for (int n = 1; n <= m; ++n)
            out.set_coeff(n, problem.g.coeff(n) - problem.f.c * u.coeff(n));
        break;
    default: {
        std::optional<SineTransform> local;
        if (!plan) local.emplace(m, problem.dealias_grid());
        const SineTransform& tr = plan ? *plan : *local;
        if (tr.modes() != m || tr.grid_size() != problem.dealias_grid())
            throw ParameterError("transform plan does not match the problem");
        PhysicalGrid grid = tr.synthesize(u);
        for (double& v : grid.raw()) v = problem.f.value(v);
        SpectralField fu = tr.analyze(grid);
        for (int n = 1; n <= m; ++n) out.set_coeff(n, problem.g.coeff(n) - fu.coeff(n));
        break;
    }
    }
    if (!out.all_finite())
        throw NumericError("non-finite values after nonlinearity evaluation");
    return out;
}

/// One exponential-Euler step: per mode
///   a_n <- e^{-lambda_n dt} a_n + (1 - e^{-lambda_n dt})/lambda_n * F(u)_n.
/// Exact whenever F is constant in time; first-order accurate otherwise.
inline SpectralField step_exponential_euler(const SpectralField& u, double dt,
                                            const SolveProblem& problem,
                                            const SineTransform* plan = nullptr) {
    if (!(dt > 0.0)) throw ParameterError("time step must be positive");
    const SpectralField F = rhs_nonlinear(u, problem, plan);
    const int m = problem.model.modes();
    SpectralField out(m);
    for (int n = 1; n <= m; ++n) {
        const double lam = problem.model.lambda(n);
        const double z = lam * dt;
        const double decay = std::exp(-z);
        out.set_coeff(n, decay * u.coeff(n) + dt * exp_phi1(z) * F.coeff(n));
    }
    return out;
}

struct EvolveResult {
    SpectralField final_state;
    std::vector<double> times;   // t_k including t = 0
    std::vector<double> energy;  // |u(t_k)|^2
    double max_tail_fraction = 0.0;
};

/// Repeated exponential-Euler stepping from u0 to t_end. Emits the |u|^2
/// series for the energy monitor and aborts on blow-up.
inline EvolveResult evolve(const SpectralField& u0, double t_end, double dt,
                           const SolveProblem& problem) {
    if (!(t_end >= 0.0)) throw ParameterError("t_end must be nonnegative");
    if (!(dt > 0.0)) throw ParameterError("time step must be positive");
    const long long steps = std::llround(t_end / dt);
    if (std::abs(double(steps) * dt - t_end) > 1e-9 * std::max(1.0, t_end))
        throw ParameterError("t_end must be an integer multiple of dt");
    u0.check_model(problem.model);

    SineTransform plan(problem.model.modes(), problem.dealias_grid());
    EvolveResult res{u0, {}, {}, 0.0};
    res.times.reserve(static_cast<size_t>(steps) + 1);
    res.energy.reserve(static_cast<size_t>(steps) + 1);
    SpectralField u = u0;
    double norm = u.l2_norm();
    res.times.push_back(0.0);
    res.energy.push_back(norm * norm);
    res.max_tail_fraction = u.tail_energy_fraction();
    for (long long k = 0; k < steps; ++k) {
        u = step_exponential_euler(u, dt, problem, &plan);
        norm = u.l2_norm();
        if (!std::isfinite(norm) || norm > kBlowUpNorm)
            throw NumericError("solution blow-up at t = " + std::to_string(double(k + 1) * dt) +
                               " (|u| = " + std::to_string(norm) + ")");
        res.times.push_back(double(k + 1) * dt);
        res.energy.push_back(norm * norm);
        res.max_tail_fraction = std::max(res.max_tail_fraction, u.tail_energy_fraction());
    }
    res.final_state = std::move(u);
    return res;
}

} // namespace frim
