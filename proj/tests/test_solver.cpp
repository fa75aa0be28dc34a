#include <catch2/catch_amalgamated.hpp>

#include "frim/solver.hpp"

#include <cmath>
#include <random>

using namespace frim;
using Catch::Approx;

namespace {

// dense-quadrature oracle: L2 projection of a pointwise function of u onto
// basis mode n, independent of the collocation transform
double quadrature_mode(const SpectralField& u, int n, double (*f)(double)) {
    const int J = 200000;
    double acc = 0.0;
    for (int j = 0; j < J; ++j) {
        const double x = -kPi + 2.0 * kPi * (j + 0.5) / J;
        double val = 0.0;
        for (int m = 1; m <= u.modes(); ++m)
            val += u.coeff(m) * std::sin(m * x) / std::sqrt(kPi);
        acc += f(val) * std::sin(n * x) / std::sqrt(kPi) * (2.0 * kPi / J);
    }
    return acc;
}

SolveProblem make_problem(SpectrumModel model, NonlinearSpec f, SpectralField g) {
    SpectralField u0(model.modes());
    return SolveProblem(std::move(model), std::move(f), std::move(g), std::move(u0));
}

} // namespace

TEST_CASE("rhs for the diagonal kinds", "[solver]") {
    SpectrumModel m(1.5, 0.0, 8);
    SpectralField g(8);
    for (int n = 1; n <= 8; ++n) g.set_coeff(n, 0.1 * n);
    SpectralField u(8);
    for (int n = 1; n <= 8; ++n) u.set_coeff(n, 1.0 / n);

    SECTION("f = 0 returns the forcing") {
        auto p = make_problem(m, NonlinearSpec::zero(), g);
        SpectralField F = rhs_nonlinear(u, p);
        for (int n = 1; n <= 8; ++n) CHECK(F.coeff(n) == g.coeff(n));
    }
    SECTION("linear kind is mode-exact") {
        auto p = make_problem(m, NonlinearSpec::linear(0.3), g);
        SpectralField F = rhs_nonlinear(u, p);
        for (int n = 1; n <= 8; ++n)
            CHECK(F.coeff(n) == Approx(g.coeff(n) - 0.3 * u.coeff(n)).margin(0.0));
    }
}

TEST_CASE("cubic rhs matches dense quadrature", "[solver]") {
    SpectrumModel m(1.5, 0.0, 8);
    SpectralField g(8);

    SECTION("single mode generates the third harmonic") {
        SpectralField u = SpectralField::unit(8, 1, 0.5);
        auto p = make_problem(m, NonlinearSpec::cubic(1.0, 0.0, 10.0), g);
        SpectralField F = rhs_nonlinear(u, p);
        // oracle: coefficients of -u^3 by dense quadrature
        for (int n = 1; n <= 8; ++n) {
            const double want = -quadrature_mode(u, n, [](double s) { return s * s * s; });
            CHECK(F.coeff(n) == Approx(want).margin(5e-10));
        }
        // mode 3 carries -(amplitude^3)/(4 pi) in this normalization
        CHECK(F.coeff(3) == Approx(0.5 * 0.5 * 0.5 / (4.0 * kPi)).epsilon(1e-9));
    }
    SECTION("band-limited cubic is alias-free on the padded grid") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> uc(-0.3, 0.3);
        SpectralField u(8);
        for (int n = 1; n <= 8; ++n) u.set_coeff(n, uc(rng));
        auto p = make_problem(m, NonlinearSpec::cubic(1.0, 0.0, 10.0), g);
        SpectralField F = rhs_nonlinear(u, p);
        for (int n = 1; n <= 8; ++n) {
            const double want = -quadrature_mode(u, n, [](double s) { return s * s * s; });
            CHECK(F.coeff(n) == Approx(want).margin(1e-10));
        }
    }
}

TEST_CASE("exponential Euler step", "[solver]") {
    SpectrumModel m(1.0, 0.0, 4);
    SpectralField g(4);

    SECTION("pure decay is exact") {
        auto p = make_problem(m, NonlinearSpec::zero(), g);
        SpectralField u = SpectralField::unit(4, 2, 3.0);
        SpectralField v = step_exponential_euler(u, 0.7, p);
        CHECK(v.coeff(2) == Approx(3.0 * std::exp(-m.lambda(2) * 0.7)).epsilon(1e-15));
    }
    SECTION("the linear equilibrium is a fixed point") {
        SpectralField gf(4);
        for (int n = 1; n <= 4; ++n) gf.set_coeff(n, 0.2 * n);
        auto p = make_problem(m, NonlinearSpec::zero(), gf);
        SpectralField u(4);
        for (int n = 1; n <= 4; ++n) u.set_coeff(n, gf.coeff(n) / m.lambda(n));
        SpectralField v = step_exponential_euler(u, 1.3, p);
        for (int n = 1; n <= 4; ++n) CHECK(v.coeff(n) == Approx(u.coeff(n)).epsilon(1e-14));
    }
    SECTION("first order in dt for a frozen nonlinearity") {
        SpectrumModel mm(1.5, 0.0, 8);
        SpectralField gf(8);
        gf.set_coeff(1, 0.4);
        auto p = make_problem(mm, NonlinearSpec::cubic(1.0, 0.0, 10.0), gf);
        SpectralField u0(8);
        u0.set_coeff(1, 0.8);
        u0.set_coeff(2, -0.3);
        const double T = 0.5;
        auto run = [&](int steps) {
            SpectralField u = u0;
            for (int k = 0; k < steps; ++k) u = step_exponential_euler(u, T / steps, p);
            return u;
        };
        SpectralField ref = run(4096);
        const double e1 = (run(16) - ref).l2_norm();
        const double e2 = (run(32) - ref).l2_norm();
        CHECK(e1 / e2 == Approx(2.0).epsilon(0.2)); // order 1
    }
}

TEST_CASE("evolve", "[solver]") {
    SECTION("zero stays zero") {
        SpectrumModel m(1.0, 0.0, 4);
        auto p = make_problem(m, NonlinearSpec::cubic(1.0, 0.0, 2.0), SpectralField(4));
        EvolveResult r = evolve(SpectralField(4), 1.0, 0.05, p);
        CHECK(r.final_state.l2_norm() == 0.0);
        CHECK(r.energy.back() == 0.0);
    }
    SECTION("f = 0 converges to the equilibrium at the linear rate") {
        SpectrumModel m(1.3, 0.1, 6);
        SpectralField g(6);
        for (int n = 1; n <= 6; ++n) g.set_coeff(n, 0.3 / n);
        auto p = make_problem(m, NonlinearSpec::zero(), g);
        SpectralField ustar(6);
        for (int n = 1; n <= 6; ++n) ustar.set_coeff(n, g.coeff(n) / m.lambda(n));
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> uc(-1.0, 1.0);
        SpectralField u0(6);
        for (int n = 1; n <= 6; ++n) u0.set_coeff(n, uc(rng));
        const double T = 4.0;
        EvolveResult r = evolve(u0, T, 0.01, p);
        const double lhs = (r.final_state - ustar).l2_norm();
        const double rhs = std::exp(-m.lambda(1) * T) * (u0 - ustar).l2_norm();
        CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
    SECTION("sign-definite cubic dissipates energy") {
        SpectrumModel m(1.5, 0.0, 8);
        auto p = make_problem(m, NonlinearSpec::cubic(1.0, 0.0, 5.0), SpectralField(8));
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> uc(-0.5, 0.5);
        SpectralField u0(8);
        for (int n = 1; n <= 8; ++n) u0.set_coeff(n, uc(rng));
        EvolveResult r = evolve(u0, 3.0, 0.01, p);
        for (size_t k = 1; k < r.energy.size(); ++k)
            CHECK(r.energy[k] <= r.energy[k - 1] * (1.0 + 1e-12));
    }
    SECTION("matches the bare semigroup when f = 0, g = 0") {
        SpectrumModel m(1.2, 0.05, 6);
        auto p = make_problem(m, NonlinearSpec::zero(), SpectralField(6));
        SpectralField u0(6);
        for (int n = 1; n <= 6; ++n) u0.set_coeff(n, 1.0 / n);
        EvolveResult r = evolve(u0, 2.5, 0.25, p);
        SpectralField want = semigroup_apply(u0, 2.5, m, ModeRange::full());
        CHECK((r.final_state - want).l2_norm() <= 1e-12 * want.l2_norm());
    }
    SECTION("blow-up aborts with a diagnostic") {
        SpectrumModel m(1.0, 0.0, 2);
        // f(u) = -10 u pumps energy in: lambda_1 = 0.375 < 10
        auto p = make_problem(m, NonlinearSpec::linear(-10.0), SpectralField(2));
        SpectralField u0 = SpectralField::unit(2, 1, 1.0);
        CHECK_THROWS_AS(evolve(u0, 10.0, 0.1, p), NumericError);
    }
    SECTION("t_end must be a step multiple") {
        SpectrumModel m(1.0, 0.0, 2);
        auto p = make_problem(m, NonlinearSpec::zero(), SpectralField(2));
        CHECK_THROWS_AS(evolve(SpectralField(2), 1.0, 0.3, p), ParameterError);
    }
}
