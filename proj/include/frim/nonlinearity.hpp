#pragma once

#include "frim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace frim {

/// Pointwise nonlinearity f together with its Lipschitz data.
///
/// Superlinear kinds (cubic, custom) are saturated at the stated ball radius:
/// f is applied to clamp(s, -R, R). Inside the ball the dynamics are
/// unchanged, and the saturated function is globally Lipschitz with the same
/// constant, which is what the backward fixed-point construction needs.
/// Linear and zero kinds are globally Lipschitz as they stand and are never
/// saturated.
struct NonlinearSpec {
    enum class Kind { zero, linear, cubic, custom };

    Kind kind = Kind::zero;
    double c = 0.0;                        // linear: f(s) = c s
    double a = 0.0, b = 0.0;               // cubic: f(s) = a s^3 + b s
    std::function<double(double)> fn;      // custom f
    std::function<double(double)> dfn;     // custom f' (may be empty)
    double ball_radius = std::numeric_limits<double>::infinity();
    double lipschitz = 0.0;                // l_f on the stated ball
    double growth_p = 2.0;                 // growth exponent for the sign condition
    double growth_c = 1.0;                 // growth constant for the sign condition

    static NonlinearSpec zero() { return NonlinearSpec{}; }

    static NonlinearSpec linear(double c) {
        NonlinearSpec f;
        f.kind = Kind::linear;
        f.c = c;
        f.lipschitz = std::abs(c);
        return f;
    }

    static NonlinearSpec cubic(double a, double b, double ball_radius) {
        if (!(ball_radius > 0.0) || !std::isfinite(ball_radius))
            throw ParameterError("cubic nonlinearity needs a finite positive ball radius");
        NonlinearSpec f;
        f.kind = Kind::cubic;
        f.a = a;
        f.b = b;
        f.ball_radius = ball_radius;
        f.lipschitz = std::max(std::abs(b), std::abs(3.0 * a * ball_radius * ball_radius + b));
        return f;
    }

    static NonlinearSpec custom(std::function<double(double)> fn,
                                std::function<double(double)> dfn,
                                double ball_radius, double lipschitz_bound) {
        if (!fn) throw ParameterError("custom nonlinearity needs a function");
        if (!(ball_radius > 0.0))
            throw ParameterError("custom nonlinearity needs a positive ball radius");
        if (!(lipschitz_bound >= 0.0))
            throw ParameterError("Lipschitz bound must be nonnegative");
        NonlinearSpec f;
        f.kind = Kind::custom;
        f.fn = std::move(fn);
        f.dfn = std::move(dfn);
        f.ball_radius = ball_radius;
        f.lipschitz = lipschitz_bound;
        return f;
    }

    /// Diagonal kinds act mode-by-mode; no grid evaluation needed.
    bool diagonal() const { return kind == Kind::zero || kind == Kind::linear; }

    double value(double s) const {
        switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::linear: return c * s;
        case Kind::cubic: {
            const double t = std::clamp(s, -ball_radius, ball_radius);
            return a * t * t * t + b * t;
        }
        case Kind::custom: {
            const double t = std::clamp(s, -ball_radius, ball_radius);
            return fn(t);
        }
        }
        return 0.0;
    }

    /// Derivative of the saturated function (0 outside the ball).
    double derivative(double s) const {
        switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::linear: return c;
        case Kind::cubic:
            if (std::abs(s) > ball_radius) return 0.0;
            return 3.0 * a * s * s + b;
        case Kind::custom:
            if (std::abs(s) > ball_radius) return 0.0;
            if (dfn) return dfn(s);
            {
                const double h = 1e-6 * std::max(1.0, std::abs(s));
                return (fn(std::clamp(s + h, -ball_radius, ball_radius)) -
                        fn(std::clamp(s - h, -ball_radius, ball_radius))) /
                       (2.0 * h);
            }
        }
        return 0.0;
    }

    std::string descriptor() const {
        switch (kind) {
        case Kind::zero: return "zero";
        case Kind::linear: return "linear(c=" + std::to_string(c) + ")";
        case Kind::cubic:
            return "cubic(a=" + std::to_string(a) + ",b=" + std::to_string(b) +
                   ",R=" + std::to_string(ball_radius) + ")";
        case Kind::custom: return "custom";
        }
        return "?";
    }
};

/// Lipschitz constant of f on [-R, R]: closed form for the analytic kinds,
/// sampled difference quotients (a lower bound) for custom functions.
inline double estimate_lipschitz(const NonlinearSpec& f, double R, int samples = 4096) {
    if (!(R > 0.0)) throw ParameterError("Lipschitz estimation radius must be positive");
    switch (f.kind) {
    case NonlinearSpec::Kind::zero: return 0.0;
    case NonlinearSpec::Kind::linear: return std::abs(f.c);
    case NonlinearSpec::Kind::cubic:
        // sup over [-R,R] of |3 a s^2 + b|, attained at s = 0 or |s| = R
        return std::max(std::abs(f.b), std::abs(3.0 * f.a * R * R + f.b));
    case NonlinearSpec::Kind::custom: {
        if (samples < 2) throw ParameterError("need at least 2 samples");
        double best = 0.0;
        double prev_s = -R;
        double prev_v = f.fn(-R);
        if (!std::isfinite(prev_v)) throw NumericError("non-finite nonlinearity sample");
        for (int i = 1; i < samples; ++i) {
            const double s = -R + 2.0 * R * double(i) / double(samples - 1);
            const double v = f.fn(s);
            if (!std::isfinite(v)) throw NumericError("non-finite nonlinearity sample");
            best = std::max(best, std::abs(v - prev_v) / (s - prev_s));
            prev_s = s;
            prev_v = v;
        }
        return best;
    }
    }
    return 0.0;
}

struct AssumptionReport {
    bool pass = false;
    double worst_slack = 0.0; // min over the grid of the slack in both bounds
    double worst_s = 0.0;     // sample where the worst slack occurs
};

/// Checks the two-sided growth condition C|s|^p - C <= f(s) s <= C|s|^p + C
/// on a sample grid over [s_lo, s_hi]. Failure is a valid (false) outcome.
inline AssumptionReport validate_assumption_iii(const NonlinearSpec& f, double p, double C,
                                                double s_lo, double s_hi,
                                                int samples = 2001) {
    if (!(p >= 2.0)) throw ParameterError("growth exponent p must be >= 2");
    if (!(C > 0.0)) throw ParameterError("growth constant C must be positive");
    if (!(s_lo < s_hi)) throw ParameterError("invalid sample range");
    if (samples < 2) throw ParameterError("need at least 2 samples");
    AssumptionReport rep;
    rep.worst_slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double s = s_lo + (s_hi - s_lo) * double(i) / double(samples - 1);
        double fs;
        switch (f.kind) { // raw f: the growth condition is about f itself
        case NonlinearSpec::Kind::zero: fs = 0.0; break;
        case NonlinearSpec::Kind::linear: fs = f.c * s; break;
        case NonlinearSpec::Kind::cubic: fs = f.a * s * s * s + f.b * s; break;
        case NonlinearSpec::Kind::custom: fs = f.fn(s); break;
        default: fs = 0.0;
        }
        const double prod = fs * s;
        const double bound = C * std::pow(std::abs(s), p);
        const double slack_lo = prod - (bound - C);
        const double slack_hi = (bound + C) - prod;
        const double slack = std::min(slack_lo, slack_hi);
        if (slack < rep.worst_slack) {
            rep.worst_slack = slack;
            rep.worst_s = s;
        }
    }
    rep.pass = rep.worst_slack >= 0.0;
    return rep;
}

} // namespace frim
