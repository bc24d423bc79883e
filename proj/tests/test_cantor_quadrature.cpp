#include <doctest.h>

#include "quc/cantor.hpp"
#include "quc/quadrature.hpp"

#include <cmath>
#include <numbers>

using namespace quc;

TEST_CASE("gauss rules integrate polynomials exactly") {
    for (int n : {1, 2, 5, 8, 16, 64}) {
        const auto g = gauss_legendre(n);
        double wsum = 0;
        for (double w : g.weights) wsum += w;
        CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], k);
            const double exact = (k % 2 == 1) ? 0.0 : 2.0 / (k + 1);
            CHECK(std::abs(s - exact) <= 1e-13);
        }
    }
    CHECK_THROWS_AS(gauss_legendre(0), InputError);
}

TEST_CASE("adaptive quadrature") {
    const auto r = integrate_adaptive([](double x) { return std::sin(x); }, 0, std::numbers::pi);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-13));
    const auto s = integrate_adaptive([](double x) { return std::sqrt(x); }, 0, 1);
    CHECK(s.value == doctest::Approx(2.0 / 3.0).epsilon(1e-11));
    CHECK_THROWS_AS(integrate_adaptive([](double) { return NAN; }, 0, 1), NumericError);
}

TEST_CASE("cantor_h oracle values") {
    CHECK(cantor_h(5, 0.0) == 0.0);
    CHECK(cantor_h(5, 1.0) == 1.0);
    CHECK(cantor_h(5, 0.5) == 0.5);
    CHECK(cantor_h(5, 1.0 / 3.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cantor_h(5, 2.0 / 3.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cantor_h(5, 1.0 / 9.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(cantor_h(5, 7.0 / 9.0) == doctest::Approx(0.75).epsilon(1e-15));
    // periodic extension h(t + k) = k + h(t)
    CHECK(cantor_h(6, 2.5) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(cantor_h(6, 3.0 + 1.0 / 9.0) == doctest::Approx(3.25).epsilon(1e-14));
}

TEST_CASE("cantor_h is nondecreasing and levels converge geometrically") {
    for (int level = 1; level <= 12; ++level) {
        const CantorProfile hl(level), hl4(level + 4);
        double prev = -1, sup = 0;
        for (int i = 0; i <= 10000; ++i) {
            const double t = i / 10000.0;
            const double v = hl.h(t);
            CHECK(v >= prev);
            prev = v;
            sup = std::max(sup, std::abs(v - hl4.h(t)));
        }
        CHECK(sup <= std::pow(2.0, -level) + 1e-15);
    }
}

TEST_CASE("antiderivative matches quadrature of h") {
    const CantorProfile hp(6);
    for (double t : {0.1, 0.37, 0.5, 0.9, 1.0, 1.7, 2.3}) {
        const auto bp = hp.breakpoints();
        double acc = 0, a = 0;
        // integrate piecewise over the unit-periodic breakpoints
        for (int k = 0; k <= static_cast<int>(t); ++k)
            for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
                const double lo = k + bp[i], hi = std::min(t, k + bp[i + 1]);
                if (hi <= lo) continue;
                acc += integrate_adaptive([&](double x) { return hp.h(x); }, lo, hi).value;
                a = hi;
            }
        (void)a;
        CHECK(hp.antiderivative(t) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("cantor derivative takes two values") {
    const CantorProfile hp(4);
    const double slope = std::pow(1.5, 4);
    for (int i = 0; i < 997; ++i) {
        const double t = (i + 0.5) / 997.0;
        const double d = hp.h_prime(t);
        CHECK((d == 0.0 || std::abs(d - slope) <= 1e-12 * slope));
    }
}
