#pragma once

#include "frim/errors.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace frim {

inline constexpr double kPi = 3.14159265358979323846;

namespace detail {

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 2.0))
        throw ParameterError("alpha must lie in (0,2), got " + std::to_string(alpha));
}

inline void check_epsilon(double epsilon) {
    if (!(epsilon >= 0.0) || !(epsilon < 1.0))
        throw ParameterError("epsilon must lie in [0,1), got " + std::to_string(epsilon));
}

} // namespace detail

/// Eigenvalue of the fractional part alone: Lambda_n = (n/2 - (2-alpha)/8)^alpha.
/// The base n/2 - (2-alpha)/8 is positive for every n >= 1 and alpha in (0,2).
inline double fractional_eigenvalue(long long n, double alpha) {
    detail::check_alpha(alpha);
    if (n < 1) throw ParameterError("mode index must be >= 1");
    const double base = 0.5 * static_cast<double>(n) - (2.0 - alpha) / 8.0;
    return std::pow(base, alpha);
}

/// Eigenvalue of the mixed operator: lambda_n = eps*n^2 + (n/2 - (2-alpha)/8)^alpha.
/// Strictly increasing in n and in eps.
inline double eigenvalue(long long n, double alpha, double epsilon) {
    detail::check_epsilon(epsilon);
    const double frac = fractional_eigenvalue(n, alpha);
    return epsilon * static_cast<double>(n) * static_cast<double>(n) + frac;
}

/// Diagonal model of the mixed diffusion operator on the shared sine basis.
/// Immutable after construction; eigenvalues are precomputed for modes 1..M.
class SpectrumModel {
public:
    SpectrumModel(double alpha, double epsilon, int mode_count,
                  double k1 = 1.0, double k2 = 1.0)
        : alpha_(alpha), epsilon_(epsilon), modes_(mode_count), k1_(k1), k2_(k2) {
        detail::check_alpha(alpha);
        detail::check_epsilon(epsilon);
        if (mode_count < 1)
            throw ParameterError("mode count must be positive, got " + std::to_string(mode_count));
        if (!(k1 >= 1.0) || !(k2 >= 1.0))
            throw ParameterError("dichotomy constants K1, K2 must be >= 1");
        lambda_.resize(static_cast<size_t>(modes_));
        lambda0_.resize(static_cast<size_t>(modes_));
        for (int n = 1; n <= modes_; ++n) {
            lambda0_[static_cast<size_t>(n - 1)] = fractional_eigenvalue(n, alpha_);
            lambda_[static_cast<size_t>(n - 1)] =
                epsilon_ * double(n) * double(n) + lambda0_[static_cast<size_t>(n - 1)];
        }
    }

    double alpha() const { return alpha_; }
    double epsilon() const { return epsilon_; }
    int modes() const { return modes_; }
    double k1() const { return k1_; }
    double k2() const { return k2_; }

    /// lambda_n, 1-based.
    double lambda(int n) const {
        check_index(n);
        return lambda_[static_cast<size_t>(n - 1)];
    }

    /// Eigenvalue of the eps=0 operator (Lambda_n), 1-based.
    double lambda0(int n) const {
        check_index(n);
        return lambda0_[static_cast<size_t>(n - 1)];
    }

    const std::vector<double>& eigenvalues() const { return lambda_; }

    /// Same operator with a different normal-diffusion strength.
    SpectrumModel with_epsilon(double eps) const {
        return SpectrumModel(alpha_, eps, modes_, k1_, k2_);
    }

private:
    void check_index(int n) const {
        if (n < 1 || n > modes_)
            throw ParameterError("mode index " + std::to_string(n) + " outside 1.." +
                                 std::to_string(modes_));
    }

    double alpha_, epsilon_;
    int modes_;
    double k1_, k2_;
    std::vector<double> lambda_, lambda0_;
};

/// A state as coefficients a_1..a_M in the shared eigenbasis sin(n x)/sqrt(pi).
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(int modes) : coeffs_(static_cast<size_t>(modes), 0.0) {
        if (modes < 1) throw ParameterError("field must have at least one mode");
    }
    explicit SpectralField(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) throw ParameterError("field must have at least one mode");
    }

    static SpectralField unit(int modes, int n, double amplitude = 1.0) {
        SpectralField u(modes);
        u.set_coeff(n, amplitude);
        return u;
    }

    int modes() const { return static_cast<int>(coeffs_.size()); }

    /// 1-based coefficient access.
    double coeff(int n) const {
        check_index(n);
        return coeffs_[static_cast<size_t>(n - 1)];
    }
    void set_coeff(int n, double v) {
        check_index(n);
        coeffs_[static_cast<size_t>(n - 1)] = v;
    }

    std::span<const double> coeffs() const { return coeffs_; }
    std::vector<double>& raw() { return coeffs_; }
    const std::vector<double>& raw() const { return coeffs_; }

    bool all_finite() const {
        for (double a : coeffs_)
            if (!std::isfinite(a)) return false;
        return true;
    }

    /// L2 norm, scaled to avoid overflow for very large backward-flow values.
    double l2_norm() const {
        double m = max_abs();
        if (m == 0.0) return 0.0;
        if (m > 1e-140 && m < 1e140) {
            double s = 0.0;
            for (double a : coeffs_) s += a * a;
            return std::sqrt(s);
        }
        double s = 0.0;
        for (double a : coeffs_) {
            const double r = a / m;
            s += r * r;
        }
        return m * std::sqrt(s);
    }

    /// log of the L2 norm; -inf for the zero field. Safe for any magnitude.
    double log_l2_norm() const {
        double m = max_abs();
        if (m == 0.0) return -std::numeric_limits<double>::infinity();
        double s = 0.0;
        for (double a : coeffs_) {
            const double r = a / m;
            s += r * r;
        }
        return std::log(m) + 0.5 * std::log(s);
    }

    double max_abs() const {
        double m = 0.0;
        for (double a : coeffs_) m = std::max(m, std::abs(a));
        return m;
    }

    /// H^{alpha/2} norm: sqrt(sum (1 + Lambda_n) a_n^2) with the eps=0 eigenvalues.
    double h_alpha_half_norm(const SpectrumModel& model) const {
        check_model(model);
        double s = 0.0;
        for (int n = 1; n <= modes(); ++n) {
            const double a = coeffs_[static_cast<size_t>(n - 1)];
            s += (1.0 + model.lambda0(n)) * a * a;
        }
        return std::sqrt(s);
    }

    /// Fraction of the energy carried by the last quarter of the modes.
    /// Used to flag under-resolved truncations (threshold 1e-8).
    double tail_energy_fraction() const {
        const int m = modes();
        const int start = m - m / 4 + 1;
        double total = 0.0, tail = 0.0;
        for (int n = 1; n <= m; ++n) {
            const double a2 = coeffs_[static_cast<size_t>(n - 1)] * coeffs_[static_cast<size_t>(n - 1)];
            total += a2;
            if (n >= start) tail += a2;
        }
        return total > 0.0 ? tail / total : 0.0;
    }

    void check_model(const SpectrumModel& model) const {
        if (model.modes() != modes())
            throw ParameterError("field has " + std::to_string(modes()) +
                                 " modes but model has " + std::to_string(model.modes()));
    }

    SpectralField& operator+=(const SpectralField& o) {
        check_same(o);
        for (size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        check_same(o);
        for (size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
        return *this;
    }
    SpectralField& operator*=(double s) {
        for (double& a : coeffs_) a *= s;
        return *this;
    }

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
    friend SpectralField operator*(SpectralField a, double s) { return a *= s; }

private:
    void check_index(int n) const {
        if (n < 1 || n > modes())
            throw ParameterError("mode index " + std::to_string(n) + " outside 1.." +
                                 std::to_string(modes()));
    }
    void check_same(const SpectralField& o) const {
        if (o.modes() != modes())
            throw ParameterError("field mode counts differ: " + std::to_string(modes()) +
                                 " vs " + std::to_string(o.modes()));
    }

    std::vector<double> coeffs_;
};

inline double inner_product(const SpectralField& a, const SpectralField& b) {
    if (a.modes() != b.modes())
        throw ParameterError("field mode counts differ in inner product");
    double s = 0.0;
    for (int n = 1; n <= a.modes(); ++n) s += a.coeff(n) * b.coeff(n);
    return s;
}

enum class Part { low, high };

/// P_N / Q_N projection: low keeps modes 1..N, high keeps modes N+1..M.
inline SpectralField project(const SpectralField& u, int N, Part part) {
    const int m = u.modes();
    if (N < 0 || N > m)
        throw ParameterError("projection rank " + std::to_string(N) + " outside 0.." +
                             std::to_string(m));
    SpectralField out(m);
    if (part == Part::low) {
        for (int n = 1; n <= N; ++n) out.set_coeff(n, u.coeff(n));
    } else {
        for (int n = N + 1; n <= m; ++n) out.set_coeff(n, u.coeff(n));
    }
    return out;
}

/// Range selector for the semigroup action.
struct ModeRange {
    enum class Kind { full, low, high };
    Kind kind = Kind::full;
    int split = 0; // N for low/high

    static ModeRange full() { return {Kind::full, 0}; }
    static ModeRange low(int N) { return {Kind::low, N}; }
    static ModeRange high(int N) { return {Kind::high, N}; }
};

/// Applies e^{-tA} on the selected mode range, zeroing modes outside it.
/// Backward time (t < 0) is admitted only on the finite-dimensional low range.
inline SpectralField semigroup_apply(const SpectralField& u, double t,
                                     const SpectrumModel& model, ModeRange range) {
    u.check_model(model);
    const int m = u.modes();
    int lo = 1, hi = m;
    switch (range.kind) {
    case ModeRange::Kind::full:
        if (t < 0.0)
            throw ParameterError("backward semigroup on the full range is ill-posed (t < 0)");
        break;
    case ModeRange::Kind::low:
        if (range.split < 0 || range.split > m)
            throw ParameterError("semigroup range split outside 0..M");
        hi = range.split;
        break;
    case ModeRange::Kind::high:
        if (t < 0.0)
            throw ParameterError("backward semigroup on the high range is ill-posed (t < 0)");
        if (range.split < 0 || range.split > m)
            throw ParameterError("semigroup range split outside 0..M");
        lo = range.split + 1;
        break;
    }
    SpectralField out(m);
    for (int n = lo; n <= hi; ++n)
        out.set_coeff(n, u.coeff(n) * std::exp(-model.lambda(n) * t));
    return out;
}

/// Values at J uniform interior collocation nodes of (-pi, pi).
class PhysicalGrid {
public:
    explicit PhysicalGrid(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw ParameterError("physical grid must be nonempty");
    }
    explicit PhysicalGrid(int size) : values_(static_cast<size_t>(size), 0.0) {
        if (size < 1) throw ParameterError("physical grid must be nonempty");
    }

    int size() const { return static_cast<int>(values_.size()); }
    double value(int j) const { return values_[static_cast<size_t>(j)]; }
    std::vector<double>& raw() { return values_; }
    const std::vector<double>& raw() const { return values_; }

    /// x_j = 2*pi*(j+1)/(J+1) - pi, j = 0..J-1.
    double node(int j) const {
        const int J = size();
        return 2.0 * kPi * double(j + 1) / double(J + 1) - kPi;
    }

    /// Quadrature weight of the uniform grid, h = 2*pi/(J+1).
    double quadrature_weight() const { return 2.0 * kPi / double(size() + 1); }

private:
    std::vector<double> values_;
};

/// Direct transform between mode coefficients (basis sin(n x)/sqrt(pi)) and
/// grid values at the collocation nodes. Exact on band-limited data when
/// J >= 2M; the sine table is precomputed so repeated transforms are cheap.
class SineTransform {
public:
    SineTransform(int modes, int grid_size) : modes_(modes), grid_(grid_size) {
        if (modes < 1) throw ParameterError("transform needs at least one mode");
        if (grid_size < 2 * modes)
            throw ParameterError("grid size " + std::to_string(grid_size) +
                                 " too small for " + std::to_string(modes) +
                                 " modes (need J >= 2M)");
        table_.resize(static_cast<size_t>(modes_) * static_cast<size_t>(grid_));
        for (int n = 1; n <= modes_; ++n)
            for (int j = 0; j < grid_; ++j) {
                const double x = 2.0 * kPi * double(j + 1) / double(grid_ + 1) - kPi;
                table_[static_cast<size_t>(n - 1) * grid_ + j] = std::sin(double(n) * x);
            }
    }

    int modes() const { return modes_; }
    int grid_size() const { return grid_; }

    PhysicalGrid synthesize(const SpectralField& u) const {
        if (u.modes() != modes_)
            throw ParameterError("field has " + std::to_string(u.modes()) +
                                 " modes, transform expects " + std::to_string(modes_));
        const double scale = 1.0 / std::sqrt(kPi);
        PhysicalGrid g(grid_);
        for (int n = 1; n <= modes_; ++n) {
            const double a = u.coeff(n) * scale;
            if (a == 0.0) continue;
            const double* row = &table_[static_cast<size_t>(n - 1) * grid_];
            for (int j = 0; j < grid_; ++j) g.raw()[static_cast<size_t>(j)] += a * row[j];
        }
        return g;
    }

    SpectralField analyze(const PhysicalGrid& g) const {
        if (g.size() != grid_)
            throw ParameterError("grid has " + std::to_string(g.size()) +
                                 " nodes, transform expects " + std::to_string(grid_));
        const double scale = 2.0 * std::sqrt(kPi) / double(grid_ + 1);
        SpectralField u(modes_);
        for (int n = 1; n <= modes_; ++n) {
            const double* row = &table_[static_cast<size_t>(n - 1) * grid_];
            double s = 0.0;
            for (int j = 0; j < grid_; ++j) s += row[j] * g.value(j);
            u.set_coeff(n, scale * s);
        }
        return u;
    }

private:
    int modes_, grid_;
    std::vector<double> table_;
};

/// Convenience one-shot transforms with the default grid J = 2M.
inline PhysicalGrid synthesize(const SpectralField& u, int grid_size = 0) {
    const int J = grid_size > 0 ? grid_size : 2 * u.modes();
    return SineTransform(u.modes(), J).synthesize(u);
}

inline SpectralField analyze(const PhysicalGrid& g, int modes) {
    return SineTransform(modes, g.size()).analyze(g);
}

} // namespace frim
