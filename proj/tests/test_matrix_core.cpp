#include <doctest.h>

#include "quc/matrix_core.hpp"

#include <cstdlib>
#include <random>

using namespace quc;

TEST_CASE("phi endpoints and monotonicity") {
    CHECK(phi(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(phi(1.0) == 0.0);
    CHECK(phi(0.25) == doctest::Approx(9.0 / 17.0).epsilon(1e-15));
    double prev = phi(0.0);
    for (int i = 1; i <= 1000; ++i) {
        const double cur = phi(i / 1000.0);
        CHECK(cur <= prev);
        prev = cur;
    }
    CHECK_THROWS_AS(phi(-0.1), InputError);
    CHECK_THROWS_AS(phi(1.5), InputError);
}

TEST_CASE("extremal pair reaches equality") {
    Matrix p = Vector::Map(std::vector<double>{1.0, 4.0}.data(), 2).asDiagonal();
    Matrix s(2, 2);
    s << 0, 1, 1, 0;
    const auto r = verify_skew_bound(p, s);
    CHECK(r.lhs == doctest::Approx(18.0).epsilon(1e-14));
    CHECK(std::abs(r.lhs - r.rhs) <= 1e-12);
    CHECK(r.holds);

    for (int n = 2; n <= 8; ++n) {
        const auto e = extremal_skew_pair(n, 1.0, 9.0);
        CHECK(std::abs(e.lhs - e.rhs) <= 1e-12 * e.rhs);
    }
}

TEST_CASE("commuting pair has no skew part") {
    Matrix p(3, 3);
    p << 3, 1, 0, 1, 2, 0, 0, 0, 5;
    const Matrix s = p * p;  // commutes with p
    const auto r = verify_skew_bound(p, s);
    CHECK(r.lhs <= 1e-24 * s.squaredNorm());
}

TEST_CASE("identity P gives symmetric product") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int n = 2; n <= 6; ++n) {
        Matrix h(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) h(i, j) = g(rng);
        const Matrix s = (h + h.transpose()) / 2;
        const auto r = verify_skew_bound(Matrix::Identity(n, n) * 2.5, s);
        CHECK(r.lhs == 0.0);
        CHECK(r.rhs == 0.0);
        CHECK(r.holds);
    }
}

TEST_CASE("eigen summary flags non-SPD input") {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    CHECK_FALSE(eigen_summary(m).positive_definite());
    m << 2, 0, 0, 0;
    CHECK_FALSE(eigen_summary(m).positive_definite());
    m << 2, 1, 1, 2;
    const auto e = eigen_summary(m);
    REQUIRE(e.positive_definite());
    CHECK(*e.ratio == doctest::Approx(3.0).epsilon(1e-14));

    Matrix bad(2, 2);
    bad << 1, 2, 0, 1;
    CHECK_THROWS_AS(eigen_summary(bad), InputError);
    Matrix s(2, 2);
    s << 0, 1, 1, 0;
    m << 1, 0, 0, -1;
    CHECK_THROWS_AS(verify_skew_bound(m, s), PreconditionError);
}

TEST_CASE("long double instantiation agrees") {
    Eigen::Matrix<long double, 2, 2> p, s;
    p << 1, 0, 0, 4;
    s << 0, 1, 1, 0;
    const auto r = verify_skew_bound(p, s);
    CHECK(std::abs(r.lhs - r.rhs) <= 1e-12);
}

TEST_CASE("curl bound factors") {
    const auto f1 = curl_bound_factor(1.0);
    CHECK(f1.tight == 0.0);
    CHECK(f1.relaxed == 0.0);
    for (double k : {1.01, 1.5, 2.0, 10.0, 1e6}) {
        const auto f = curl_bound_factor(k);
        CHECK(f.tight <= f.relaxed + 1e-15);
        CHECK(f.tight == doctest::Approx(2 * (k - 1) * (k - 1) / (k * k + 1)));
        CHECK(f.relaxed < 2.0);
    }
    CHECK(ellipticity_defect(4.0) == doctest::Approx(0.75));
    CHECK_THROWS_AS(curl_bound_factor(0.5), InputError);
    CHECK_THROWS_AS(ellipticity_defect(0.9), InputError);
}

TEST_CASE("random trials: no violations and seed determinism") {
    const auto a = run_skew_bound_trials({2, 3, 5}, 4000, 11);
    const auto b = run_skew_bound_trials({2, 3, 5}, 4000, 11);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].violations == 0);
        CHECK(a[i].worst_relative_slack <= 1e-10);
        CHECK(a[i].max_tightness <= 1.0 + 1e-10);
        CHECK(a[i].worst_relative_slack == b[i].worst_relative_slack);
        CHECK(a[i].max_tightness == b[i].max_tightness);
    }
}

TEST_CASE("trial results do not depend on thread count") {
    const char* old = std::getenv("QUC_THREADS");
    const std::string saved = old ? old : "";
    setenv("QUC_THREADS", "1", 1);
    const auto serial = run_skew_bound_trials({4}, 2000, 5);
    setenv("QUC_THREADS", "8", 1);
    const auto threaded = run_skew_bound_trials({4}, 2000, 5);
    if (old) setenv("QUC_THREADS", saved.c_str(), 1); else unsetenv("QUC_THREADS");
    CHECK(serial[0].worst_relative_slack == threaded[0].worst_relative_slack);
    CHECK(serial[0].max_tightness == threaded[0].max_tightness);
}
