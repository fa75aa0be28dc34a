#pragma once

#include "frim/errors.hpp"
#include "frim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace frim {

enum class Regime { alpha_one, alpha_above_one, alpha_below_one };

inline const char* regime_name(Regime r) {
    switch (r) {
    case Regime::alpha_one: return "alpha_one";
    case Regime::alpha_above_one: return "alpha_above_one";
    case Regime::alpha_below_one: return "alpha_below_one";
    }
    return "?";
}

struct ClassifiedRegime {
    Regime tag;
    std::string rationale;
};

/// Case split on the anomalous exponent:
///   alpha = 1     -> gap constant (1/2) at eps = 0
///   1 < alpha < 2 -> gap grows without bound
///   0 < alpha < 1 -> gap decays at eps = 0; normal diffusion eps > 0 required
inline ClassifiedRegime classify_regime(double alpha) {
    detail::check_alpha(alpha);
    if (alpha == 1.0)
        return {Regime::alpha_one,
                "gap is constant in n at eps=0: lambda_{n+1}-lambda_n = eps(2n+1) + 1/2"};
    if (alpha > 1.0)
        return {Regime::alpha_above_one,
                "gap is increasing and unbounded in n; a gap index exists for every "
                "Lipschitz bound"};
    return {Regime::alpha_below_one,
            "gap is decreasing toward 0 at eps=0; a gap index requires eps > 0"};
}

/// lambda_{n+1} - lambda_n in closed form (no eigenvalue array needed).
inline double spectral_gap(long long n, double alpha, double epsilon) {
    if (n < 1) throw ParameterError("gap index must be >= 1");
    return eigenvalue(n + 1, alpha, epsilon) - eigenvalue(n, alpha, epsilon);
}

/// Model-bound variant; requires 1 <= n < M so both eigenvalues are resolved.
inline double spectral_gap(int n, const SpectrumModel& model) {
    if (n < 1 || n >= model.modes())
        throw ParameterError("gap index " + std::to_string(n) + " outside 1..M-1");
    return model.lambda(n + 1) - model.lambda(n);
}

/// Derivative of the gap G(n) in the continuous index:
///   G'(n) = 2 eps + (alpha/2) [ ((n+1)/2 - (2-alpha)/8)^{alpha-1}
///                             - (n/2   - (2-alpha)/8)^{alpha-1} ].
/// Its sign separates the growth regimes.
inline double gap_derivative(double n, double alpha, double epsilon) {
    detail::check_alpha(alpha);
    detail::check_epsilon(epsilon);
    if (!(n >= 1.0)) throw ParameterError("gap derivative requires n >= 1");
    const double shift = (2.0 - alpha) / 8.0;
    const double hi = std::pow((n + 1.0) / 2.0 - shift, alpha - 1.0);
    const double lo = std::pow(n / 2.0 - shift, alpha - 1.0);
    return 2.0 * epsilon + 0.5 * alpha * (hi - lo);
}

inline double gap_derivative(double n, const SpectrumModel& model) {
    return gap_derivative(n, model.alpha(), model.epsilon());
}

/// Admissible weight interval (lambda_N + 2 l_f K1, lambda_{N+1} - 2 l_f K1 K2).
struct SigmaWindow {
    double lo = 0.0;
    double hi = 0.0;
    bool nonempty() const { return lo < hi; }
    double midpoint() const { return 0.5 * (lo + hi); }
};

/// Outcome of the gap analysis at a candidate index N.
/// `gap_holds` records the existence condition gap > 2 l_f; `feasible`
/// additionally requires the sigma window to be nonempty, which is what the
/// fixed-point construction actually consumes.
struct GapReport {
    long long index = 0;      // N
    double gap = 0.0;         // lambda_{N+1} - lambda_N
    double threshold = 0.0;   // 2 l_f
    SigmaWindow window;
    double sigma = 0.0;       // window midpoint
    Regime regime = Regime::alpha_one;
    bool gap_holds = false;
    bool feasible = false;
    double lambda_low = 0.0;  // lambda_N
    double lambda_high = 0.0; // lambda_{N+1}
};

inline GapReport make_gap_report(long long n, double alpha, double epsilon, double l_f,
                                 double k1 = 1.0, double k2 = 1.0) {
    if (l_f < 0.0) throw ParameterError("Lipschitz bound must be nonnegative");
    GapReport r;
    r.index = n;
    r.lambda_low = eigenvalue(n, alpha, epsilon);
    r.lambda_high = eigenvalue(n + 1, alpha, epsilon);
    r.gap = r.lambda_high - r.lambda_low;
    r.threshold = 2.0 * l_f;
    r.window = {r.lambda_low + 2.0 * l_f * k1, r.lambda_high - 2.0 * l_f * k1 * k2};
    r.sigma = r.window.midpoint();
    r.regime = classify_regime(alpha).tag;
    r.gap_holds = r.gap > r.threshold;
    r.feasible = r.gap_holds && r.window.nonempty() && r.sigma > r.window.lo &&
                 r.sigma < r.window.hi;
    return r;
}

/// Smallest N <= n_max with gap(N) > 2 l_f, scanned in closed form.
/// Empty result means no such index exists up to n_max (a valid outcome for
/// the decaying-gap regime at eps = 0).
inline std::optional<GapReport> find_gap_index(double alpha, double epsilon, double l_f,
                                               long long n_max = 1000000,
                                               double k1 = 1.0, double k2 = 1.0) {
    detail::check_alpha(alpha);
    detail::check_epsilon(epsilon);
    if (l_f < 0.0) throw ParameterError("Lipschitz bound must be nonnegative");
    if (n_max < 1) throw ParameterError("n_max must be >= 1");
    const double threshold = 2.0 * l_f;
    for (long long n = 1; n <= n_max; ++n) {
        if (spectral_gap(n, alpha, epsilon) > threshold)
            return make_gap_report(n, alpha, epsilon, l_f, k1, k2);
    }
    return std::nullopt;
}

/// Model-bound variant. The scan itself is closed-form, so n_max may exceed
/// the model's resolved mode count.
inline std::optional<GapReport> find_gap_index(const SpectrumModel& model, double l_f,
                                               long long n_max = 1000000) {
    return find_gap_index(model.alpha(), model.epsilon(), l_f, n_max, model.k1(), model.k2());
}

/// Smallest N <= n_max whose sigma window is nonempty. This is the selector
/// used when a manifold is actually built: the fixed-point contraction needs
/// an admissible sigma, not just the bare gap condition.
inline std::optional<GapReport> find_feasible_gap_index(double alpha, double epsilon,
                                                        double l_f,
                                                        long long n_max = 1000000,
                                                        double k1 = 1.0, double k2 = 1.0) {
    detail::check_alpha(alpha);
    detail::check_epsilon(epsilon);
    if (l_f < 0.0) throw ParameterError("Lipschitz bound must be nonnegative");
    if (n_max < 1) throw ParameterError("n_max must be >= 1");
    for (long long n = 1; n <= n_max; ++n) {
        GapReport r = make_gap_report(n, alpha, epsilon, l_f, k1, k2);
        if (r.feasible) return r;
    }
    return std::nullopt;
}

inline std::optional<GapReport> find_feasible_gap_index(const SpectrumModel& model,
                                                        double l_f,
                                                        long long n_max = 1000000) {
    return find_feasible_gap_index(model.alpha(), model.epsilon(), l_f, n_max,
                                   model.k1(), model.k2());
}

/// Smallest eps in the grid for which the gap condition becomes satisfiable
/// within n_max. The grid is scanned in ascending order.
inline std::optional<double> min_epsilon_for_gap(double alpha, double l_f,
                                                 long long n_max,
                                                 std::vector<double> eps_grid,
                                                 double k1 = 1.0, double k2 = 1.0) {
    if (eps_grid.empty()) throw ParameterError("epsilon grid must be nonempty");
    std::sort(eps_grid.begin(), eps_grid.end());
    for (double eps : eps_grid) {
        if (find_gap_index(alpha, eps, l_f, n_max, k1, k2))
            return eps;
    }
    return std::nullopt;
}

} // namespace frim
