#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bms/specfun.hpp"

using namespace bms;

TEST_CASE("gamma_fn matches known values and rejects the nonpositive axis") {
    CHECK(gamma_fn(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gamma_fn(0.5) == doctest::Approx(std::sqrt(std::acos(-1.0))).epsilon(1e-12));
    CHECK(gamma_fn(6.0) == doctest::Approx(120.0).epsilon(1e-12));
    CHECK_THROWS_AS(gamma_fn(0.0), DomainError);
    CHECK_THROWS_AS(gamma_fn(-1.0), DomainError);
}

TEST_CASE("mittag_leffler is exactly 1 at rho = 0") {
    for (double alpha : {0.5, 1.0, 2.5, 3.0})
        CHECK(mittag_leffler(alpha, 0.0) == 1.0);
}

TEST_CASE("mittag_leffler collapses to exp at alpha = 1") {
    CHECK(mittag_leffler(1.0, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    for (double x = -5.0; x <= 5.0 + 1e-9; x += 0.25)
        CHECK(mittag_leffler(1.0, x) == doctest::Approx(std::exp(x)).epsilon(1e-10));
}

TEST_CASE("mittag_leffler collapses to cosh(sqrt) at alpha = 2") {
    CHECK(mittag_leffler(2.0, 1.0) == doctest::Approx(std::cosh(1.0)).epsilon(1e-12));
    CHECK(mittag_leffler(2.0, 25.0) == doctest::Approx(74.209948524787844).epsilon(1e-10));
    for (double x = 0.0; x <= 25.0 + 1e-9; x += 1.0)
        CHECK(mittag_leffler(2.0, x) == doctest::Approx(std::cosh(std::sqrt(x))).epsilon(1e-10));
}

TEST_CASE("mittag_leffler guards its argument range") {
    CHECK_THROWS_AS(mittag_leffler(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(mittag_leffler(-1.0, 1.0), DomainError);
    CHECK_THROWS_AS(mittag_leffler(2.5, -1001.0), ArgumentTooLarge);
    CHECK_THROWS_AS(mittag_leffler(2.5, 1001.0), ArgumentTooLarge);
    CHECK(std::isfinite(mittag_leffler(2.5, -1000.0)));
    CHECK(std::isfinite(mittag_leffler(2.5, 1000.0)));
}

TEST_CASE("nussbaum gain: anchor values") {
    const NussbaumParams np{};
    CHECK(nussbaum(np, 0.0) == 1.0);
    CHECK(nussbaum(np, 0.5) == doctest::Approx(0.9470677192587122).epsilon(1e-9));
    CHECK(nussbaum(np, 2.0) == doctest::Approx(-0.4481064905856715).epsilon(1e-9));
    CHECK(nussbaum(np, 5.0) == doctest::Approx(0.16755116992253546).epsilon(1e-9));
    CHECK(nussbaum(np, 10.0) == doctest::Approx(-17.51865968921765).epsilon(1e-9));
}

TEST_CASE("nussbaum gain: domain validation") {
    CHECK_THROWS_AS(nussbaum(NussbaumParams{2.0, 1.0}, 1.0), DomainError);
    CHECK_THROWS_AS(nussbaum(NussbaumParams{3.2, 1.0}, 1.0), DomainError);
    CHECK_THROWS_AS(nussbaum(NussbaumParams{2.5, 0.0}, 1.0), DomainError);
    CHECK_THROWS_AS(nussbaum(NussbaumParams{2.5, 1.0}, -0.1), DomainError);
    CHECK_NOTHROW(nussbaum(NussbaumParams{3.0, 1.0}, 1.0));
    // lam * k^alpha crosses the series guard near k = 15.9
    CHECK(std::isfinite(nussbaum(NussbaumParams{}, 15.0)));
    CHECK_THROWS_AS(nussbaum(NussbaumParams{}, 16.0), ArgumentTooLarge);
}

TEST_CASE("nussbaum gain: oscillation grows with the horizon") {
    const NussbaumParams np{};
    // sign changes on [0, K] counted on a fine grid never decrease with K
    int prev_changes = 0;
    for (double kmax : {2.0, 4.0, 6.0, 8.0, 10.0}) {
        int changes = 0;
        double last = nussbaum(np, 0.0);
        for (int j = 1; j <= 2000; ++j) {
            const double v = nussbaum(np, kmax * j / 2000.0);
            if ((v > 0.0) != (last > 0.0))
                ++changes;
            last = v;
        }
        CHECK(changes >= prev_changes);
        prev_changes = changes;
    }
    CHECK(prev_changes >= 3);

    // envelope growth: the largest swing on [0, 10] tops the one on [0, 5]
    double m5 = 0.0, m10 = 0.0;
    for (int j = 0; j <= 2000; ++j) {
        const double k = 10.0 * j / 2000.0;
        const double v = std::abs(nussbaum(np, k));
        m10 = std::max(m10, v);
        if (k <= 5.0)
            m5 = std::max(m5, v);
    }
    CHECK(m10 > m5);
}

TEST_CASE("nussbaum gain: pointwise continuity") {
    const NussbaumParams np{};
    for (double k = 0.5; k <= 9.5 + 1e-9; k += 0.5)
        CHECK(std::abs(nussbaum(np, k + 1e-9) - nussbaum(np, k)) < 1e-6);
}

TEST_CASE("running averages: constant function averages to itself") {
    const auto ex = running_average_extrema([](double) { return 1.0; }, 0.0, 10.0, 4001);
    CHECK(ex.sup_avg == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ex.inf_avg == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("running averages: argument validation") {
    const auto one = [](double) { return 1.0; };
    CHECK_THROWS_AS(running_average_extrema(one, 0.0, 10.0, 1), DomainError);
    CHECK_THROWS_AS(running_average_extrema(one, 5.0, 5.0, 100), DomainError);
    CHECK_THROWS_AS(running_average_extrema(one, -1.0, 10.0, 100), DomainError);
}

TEST_CASE("two-sided unbounded averages appear by horizon 12, not 10") {
    const NussbaumParams np{};
    AverageExtrema ex{};

    // at horizon 10 the upward push exists but the downward one is too weak
    CHECK_FALSE(verify_nussbaum_property(np, 10.0, 4001, &ex));
    CHECK(ex.sup_avg == doctest::Approx(1.1897652009144746).epsilon(1e-6));
    CHECK(ex.inf_avg == doctest::Approx(-0.7313658397862046).epsilon(1e-6));
    CHECK(ex.sup_avg > 1.0);
    CHECK(ex.inf_avg > -1.0);

    CHECK(verify_nussbaum_property(np, 12.0, 4001, &ex));
    CHECK(ex.sup_avg == doctest::Approx(1.189764662255131).epsilon(1e-6));
    CHECK(ex.inf_avg == doctest::Approx(-2.353210349346013).epsilon(1e-6));

    // a vanishing horizon sees only the plateau near N(0) = 1
    CHECK_FALSE(verify_nussbaum_property(np, 1e-9, 101, &ex));
    CHECK(ex.sup_avg == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(ex.inf_avg == doctest::Approx(1.0).epsilon(1e-6));
}
