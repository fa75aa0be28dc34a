#include <catch2/catch_amalgamated.hpp>

#include "frim/spectral.hpp"

#include <cmath>
#include <random>

using namespace frim;
using Catch::Approx;

TEST_CASE("eigenvalue closed form", "[spectral]") {
    CHECK(eigenvalue(1, 1.0, 0.0) == Approx(0.375).margin(0.0));
    CHECK(eigenvalue(2, 1.0, 0.5) == Approx(2.875).margin(0.0));

    // the normal-diffusion part is exactly linear in eps: lambda(eps)-lambda(0) = eps n^2
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> ua(0.05, 1.95), ue(0.0, 0.99);
    for (int i = 0; i < 200; ++i) {
        const double alpha = ua(rng), eps = ue(rng);
        const double diff = eigenvalue(3, alpha, eps) - eigenvalue(3, alpha, 0.0);
        CHECK(diff == Approx(9.0 * eps).epsilon(1e-14).margin(1e-14));
    }

    CHECK_THROWS_AS(eigenvalue(1, 2.0, 0.0), ParameterError);
    CHECK_THROWS_AS(eigenvalue(1, 0.0, 0.0), ParameterError);
    CHECK_THROWS_AS(eigenvalue(1, 1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(eigenvalue(1, 1.0, -0.1), ParameterError);
    CHECK_THROWS_AS(eigenvalue(0, 1.0, 0.0), ParameterError);
}

TEST_CASE("eigenvalues are strictly monotone in n and eps", "[spectral]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ua(0.05, 1.95), ue(0.0, 0.99);
    std::uniform_int_distribution<long long> un(1, 10000);
    for (int i = 0; i < 500; ++i) {
        const double alpha = ua(rng), eps = ue(rng);
        long long n = un(rng), m = un(rng);
        if (n == m) m += 1;
        if (n > m) std::swap(n, m);
        CHECK(eigenvalue(n, alpha, eps) < eigenvalue(m, alpha, eps));
    }
    // strictly increasing in eps as well
    for (int i = 0; i < 100; ++i) {
        const double alpha = ua(rng);
        const long long n = un(rng);
        double e1 = ue(rng), e2 = ue(rng);
        if (e1 == e2) continue;
        if (e1 > e2) std::swap(e1, e2);
        CHECK(eigenvalue(n, alpha, e1) < eigenvalue(n, alpha, e2));
    }
}

TEST_CASE("model caches positive increasing eigenvalues", "[spectral]") {
    SpectrumModel m(1.3, 0.02, 48);
    for (int n = 1; n <= 48; ++n) {
        CHECK(m.lambda(n) > 0.0);
        if (n > 1) CHECK(m.lambda(n) > m.lambda(n - 1));
        CHECK(m.lambda(n) == Approx(eigenvalue(n, 1.3, 0.02)));
        CHECK(m.lambda0(n) == Approx(fractional_eigenvalue(n, 1.3)));
    }
    CHECK_THROWS_AS(SpectrumModel(1.0, 0.0, 0), ParameterError);
    CHECK_THROWS_AS(SpectrumModel(1.0, 0.0, 8, 0.5, 1.0), ParameterError);
}

TEST_CASE("semigroup action", "[spectral]") {
    SpectrumModel m(1.0, 0.0, 8);
    SpectralField u(8);
    for (int n = 1; n <= 8; ++n) u.set_coeff(n, 1.0 / n);

    SECTION("t = 0 is the identity") {
        SpectralField v = semigroup_apply(u, 0.0, m, ModeRange::full());
        for (int n = 1; n <= 8; ++n) CHECK(v.coeff(n) == u.coeff(n));
    }
    SECTION("unit mass in mode 2 decays by e^{-lambda_2}") {
        SpectralField e2 = SpectralField::unit(8, 2);
        SpectralField v = semigroup_apply(e2, 1.0, m, ModeRange::full());
        CHECK(v.coeff(2) == Approx(std::exp(-0.875)).epsilon(1e-14));
    }
    SECTION("backward flow on the low range") {
        SpectralField e1 = SpectralField::unit(8, 1);
        SpectralField v = semigroup_apply(e1, -1.0, m, ModeRange::low(1));
        CHECK(v.coeff(1) == Approx(std::exp(0.375)).epsilon(1e-14));
        for (int n = 2; n <= 8; ++n) CHECK(v.coeff(n) == 0.0);
    }
    SECTION("backward flow on full or high range is rejected") {
        CHECK_THROWS_AS(semigroup_apply(u, -0.5, m, ModeRange::full()), ParameterError);
        CHECK_THROWS_AS(semigroup_apply(u, -0.5, m, ModeRange::high(3)), ParameterError);
    }
    SECTION("semigroup law") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> ut(0.0, 2.0);
        for (int i = 0; i < 50; ++i) {
            const double s = ut(rng), t = ut(rng);
            SpectralField a =
                semigroup_apply(semigroup_apply(u, s, m, ModeRange::full()), t, m,
                                ModeRange::full());
            SpectralField b = semigroup_apply(u, s + t, m, ModeRange::full());
            CHECK((a - b).l2_norm() <= 1e-12 * b.l2_norm());
        }
    }
    SECTION("contractivity at rate lambda_1") {
        for (double t : {0.1, 0.7, 3.0}) {
            SpectralField v = semigroup_apply(u, t, m, ModeRange::full());
            CHECK(v.l2_norm() <= std::exp(-m.lambda(1) * t) * u.l2_norm() * (1 + 1e-14));
        }
    }
}

TEST_CASE("projections split and are orthogonal", "[spectral]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uc(-1.0, 1.0);
    SpectralField u(12);
    for (int n = 1; n <= 12; ++n) u.set_coeff(n, uc(rng));

    CHECK(project(u, 0, Part::low).l2_norm() == 0.0);
    SpectralField full = project(u, 12, Part::low);
    for (int n = 1; n <= 12; ++n) CHECK(full.coeff(n) == u.coeff(n));

    SpectralField lo = project(u, 3, Part::low);
    SpectralField hi = project(u, 3, Part::high);
    for (int n = 1; n <= 12; ++n) CHECK(lo.coeff(n) + hi.coeff(n) == u.coeff(n));
    CHECK(inner_product(lo, hi) == 0.0);

    // idempotence
    SpectralField lo2 = project(lo, 3, Part::low);
    for (int n = 1; n <= 12; ++n) CHECK(lo2.coeff(n) == lo.coeff(n));

    CHECK_THROWS_AS(project(u, 13, Part::low), ParameterError);
    CHECK_THROWS_AS(project(u, -1, Part::high), ParameterError);
}

TEST_CASE("sine transform round trip and Parseval", "[spectral]") {
    SECTION("zero field round trip") {
        SpectralField z(8);
        PhysicalGrid g = synthesize(z);
        for (int j = 0; j < g.size(); ++j) CHECK(g.value(j) == 0.0);
        SpectralField back = analyze(g, 8);
        CHECK(back.l2_norm() == 0.0);
    }
    SECTION("single mode reproduces itself") {
        for (int n : {1, 3, 8}) {
            SpectralField u = SpectralField::unit(8, n);
            SpectralField back = analyze(synthesize(u), 8);
            for (int k = 1; k <= 8; ++k)
                CHECK(back.coeff(k) == Approx(k == n ? 1.0 : 0.0).margin(1e-12));
        }
    }
    SECTION("random 8-mode field, J = 32") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> uc(-1.0, 1.0);
        SpectralField u(8);
        for (int n = 1; n <= 8; ++n) u.set_coeff(n, uc(rng));
        SineTransform tr(8, 32);
        PhysicalGrid g = tr.synthesize(u);
        SpectralField back = tr.analyze(g);
        double max_err = 0.0;
        for (int n = 1; n <= 8; ++n)
            max_err = std::max(max_err, std::abs(back.coeff(n) - u.coeff(n)));
        CHECK(max_err < 1e-12);

        // grid quadrature of |u|^2 equals the coefficient energy
        double quad = 0.0;
        for (int j = 0; j < g.size(); ++j) quad += g.value(j) * g.value(j);
        quad *= g.quadrature_weight();
        double energy = 0.0;
        for (int n = 1; n <= 8; ++n) energy += u.coeff(n) * u.coeff(n);
        CHECK(quad == Approx(energy).epsilon(1e-10));
    }
    SECTION("grid too small for the modes is rejected") {
        CHECK_THROWS_AS(SineTransform(8, 15), ParameterError);
        PhysicalGrid g(16);
        CHECK_THROWS_AS(analyze(g, 16), ParameterError);
    }
}

TEST_CASE("norms are overflow-safe", "[spectral]") {
    SpectralField u(4);
    u.set_coeff(1, 1e200);
    u.set_coeff(2, 5e199);
    CHECK(std::isfinite(u.l2_norm()));
    CHECK(u.l2_norm() == Approx(std::sqrt(1.25) * 1e200).epsilon(1e-12));
    CHECK(u.log_l2_norm() == Approx(std::log(1e200) + 0.5 * std::log(1.25)).epsilon(1e-12));

    SpectralField z(4);
    CHECK(z.l2_norm() == 0.0);
    CHECK(std::isinf(z.log_l2_norm()));
}

TEST_CASE("H^{alpha/2} norm uses the eps = 0 eigenvalues", "[spectral]") {
    SpectrumModel m(1.5, 0.3, 4);
    SpectralField u = SpectralField::unit(4, 2, 2.0);
    const double expected = std::sqrt((1.0 + fractional_eigenvalue(2, 1.5)) * 4.0);
    CHECK(u.h_alpha_half_norm(m) == Approx(expected).epsilon(1e-14));
}
