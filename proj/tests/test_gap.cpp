#include <catch2/catch_amalgamated.hpp>

#include "frim/gap.hpp"

#include <cmath>
#include <random>

using namespace frim;
using Catch::Approx;

namespace {

// independent exhaustive-scan oracle for the smallest gap index
long long scan_oracle(double alpha, double eps, double lf, long long n_max) {
    for (long long n = 1; n <= n_max; ++n) {
        const double gap = eigenvalue(n + 1, alpha, eps) - eigenvalue(n, alpha, eps);
        if (gap > 2.0 * lf) return n;
    }
    return -1;
}

} // namespace

TEST_CASE("spectral gap closed forms", "[gap]") {
    // alpha = 1: gap is eps(2n+1) + 1/2 under remainder truncation
    for (long long n : {1LL, 5LL, 40LL}) CHECK(spectral_gap(n, 1.0, 0.0) == Approx(0.5).margin(1e-13));
    CHECK(spectral_gap(3, 1.0, 0.1) == Approx(1.2).epsilon(1e-13));
    // (13/16)^(1/2) - (5/16)^(1/2)
    CHECK(spectral_gap(1, 0.5, 0.0) ==
          Approx(std::sqrt(13.0 / 16.0) - std::sqrt(5.0 / 16.0)).epsilon(1e-14));

    SpectrumModel m(1.0, 0.0, 8);
    CHECK(spectral_gap(1, m) == Approx(0.5).margin(1e-13));
    CHECK_THROWS_AS(spectral_gap(8, m), ParameterError);
    CHECK_THROWS_AS(spectral_gap(0, m), ParameterError);
}

TEST_CASE("gap derivative sign determines the regime", "[gap]") {
    // bracket vanishes at alpha = 1
    for (double n : {1.0, 3.0, 17.5}) CHECK(gap_derivative(n, 1.0, 0.2) == Approx(0.4).margin(1e-15));
    CHECK(gap_derivative(10.0, 1.5, 0.0) > 0.0);
    CHECK(gap_derivative(10.0, 0.5, 0.0) < 0.0);
    CHECK_THROWS_AS(gap_derivative(0.5, 1.5, 0.0), ParameterError);
}

TEST_CASE("classify_regime", "[gap]") {
    CHECK(classify_regime(1.0).tag == Regime::alpha_one);
    CHECK(classify_regime(1.5).tag == Regime::alpha_above_one);
    CHECK(classify_regime(0.5).tag == Regime::alpha_below_one);
    CHECK(!classify_regime(0.5).rationale.empty());
    CHECK_THROWS_AS(classify_regime(2.0), ParameterError);
}

TEST_CASE("find_gap_index matches the exhaustive-scan oracle", "[gap]") {
    SECTION("alpha = 1, eps = 0, l_f = 0.2") {
        auto rep = find_gap_index(1.0, 0.0, 0.2, 100);
        REQUIRE(rep.has_value());
        CHECK(rep->index == 1);
        CHECK(rep->gap == Approx(0.5).margin(1e-13));
        CHECK(rep->gap > 0.4);
        CHECK(rep->index == scan_oracle(1.0, 0.0, 0.2, 100));
        // gap holds but the sigma window is empty at K1 = K2 = 1 (0.5 < 0.8)
        CHECK(rep->gap_holds);
        CHECK_FALSE(rep->feasible);
    }
    SECTION("l_f = 0 always selects N = 1") {
        for (double alpha : {0.4, 1.0, 1.7}) {
            auto rep = find_gap_index(alpha, 0.05, 0.0, 100);
            REQUIRE(rep.has_value());
            CHECK(rep->index == 1);
            CHECK(rep->feasible); // window is the open eigenvalue gap
        }
    }
    SECTION("decreasing-gap regime yields empty") {
        CHECK_FALSE(find_gap_index(0.5, 0.0, 0.3, 1000000).has_value());
        CHECK(scan_oracle(0.5, 0.0, 0.3, 1000000) == -1);
    }
    SECTION("random spot checks against the oracle") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> ua(1.05, 1.95), ul(0.0, 2.0);
        for (int i = 0; i < 20; ++i) {
            const double alpha = ua(rng), lf = ul(rng);
            auto rep = find_gap_index(alpha, 0.0, lf, 100000);
            const long long want = scan_oracle(alpha, 0.0, lf, 100000);
            if (want < 0) {
                CHECK_FALSE(rep.has_value());
            } else {
                REQUIRE(rep.has_value());
                CHECK(rep->index == want);
            }
        }
    }
    SECTION("result is stable under enlarging n_max") {
        auto a = find_gap_index(1.5, 0.0, 1.0, 1000);
        auto b = find_gap_index(1.5, 0.0, 1.0, 1000000);
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK(a->index == b->index);
    }
}

TEST_CASE("sigma window bookkeeping", "[gap]") {
    // with K1 = K2 = 1 the window is nonempty exactly when gap > 4 l_f
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> ua(1.05, 1.95), ul(0.01, 1.0);
    std::uniform_int_distribution<long long> un(1, 200);
    for (int i = 0; i < 200; ++i) {
        const double alpha = ua(rng), lf = ul(rng);
        const long long n = un(rng);
        GapReport rep = make_gap_report(n, alpha, 0.0, lf);
        CHECK(rep.window.nonempty() == (rep.gap > 4.0 * lf));
        if (rep.feasible) {
            CHECK(rep.gap > rep.threshold);
            CHECK(rep.window.nonempty());
            CHECK(rep.sigma > rep.window.lo);
            CHECK(rep.sigma < rep.window.hi);
        }
    }
}

TEST_CASE("regime growth properties", "[gap]") {
    SECTION("alpha > 1: gap eventually exceeds any bound") {
        for (double alpha : {1.5, 1.9}) {
            for (double lf : {1.0, 10.0}) {
                auto rep = find_gap_index(alpha, 0.0, lf, 1000000);
                REQUIRE(rep.has_value());
                // and keeps growing: ten times the bound is reached as well
                auto rep10 = find_gap_index(alpha, 0.0, 10.0 * lf, 1000000);
                CHECK(rep10.has_value());
            }
        }
        // growth is unbounded for every alpha > 1, even when it is slow:
        // near alpha = 1 the by-10^6 gap is still moderate, but larger
        // indices reach any bound (single closed-form evaluations).
        CHECK(spectral_gap(100000000LL, 1.2, 0.0) > 20.0);
    }
    SECTION("alpha < 1, eps = 0: gaps decrease to zero") {
        for (double alpha : {0.3, 0.5, 0.8}) {
            double prev = spectral_gap(1, alpha, 0.0);
            for (long long n = 2; n <= 10000; ++n) {
                const double g = spectral_gap(n, alpha, 0.0);
                CHECK(g < prev);
                prev = g;
            }
        }
        CHECK(spectral_gap(1000000, 0.5, 0.0) < 1e-2);
    }
    SECTION("eps > 0 restores the gap for any Lipschitz bound") {
        auto rep = find_gap_index(0.5, 0.05, 5.0, 10000);
        REQUIRE(rep.has_value());
    }
}

TEST_CASE("min_epsilon_for_gap", "[gap]") {
    SECTION("growing-gap regime needs no normal diffusion") {
        auto eps = min_epsilon_for_gap(1.5, 1.0, 1000000, {0.0, 0.1, 0.2});
        REQUIRE(eps.has_value());
        CHECK(*eps == 0.0);
    }
    SECTION("l_f = 0 needs nothing either") {
        auto eps = min_epsilon_for_gap(0.5, 0.0, 100, {0.0, 0.1});
        REQUIRE(eps.has_value());
        CHECK(*eps == 0.0);
    }
    SECTION("decreasing-gap regime needs eps > 0, monotone in l_f") {
        std::vector<double> grid;
        for (int i = 0; i <= 50; ++i) grid.push_back(0.01 * i);
        auto eps1 = min_epsilon_for_gap(0.5, 1.0, 100000, grid);
        auto eps2 = min_epsilon_for_gap(0.5, 2.0, 100000, grid);
        REQUIRE(eps1.has_value());
        REQUIRE(eps2.has_value());
        CHECK(*eps1 > 0.0);
        CHECK(*eps2 >= *eps1);
        // monotonicity: every grid eps above the minimum also succeeds
        for (double e : grid)
            if (e >= *eps2) CHECK(find_gap_index(0.5, e, 2.0, 100000).has_value());
    }
    SECTION("empty grid is rejected") {
        CHECK_THROWS_AS(min_epsilon_for_gap(0.5, 1.0, 100, {}), ParameterError);
    }
}
