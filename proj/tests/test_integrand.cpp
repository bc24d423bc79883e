#include <doctest.h>

#include "quc/integrand.hpp"
#include "quc/matrix_core.hpp"

#include <cmath>
#include <random>

using namespace quc;

namespace {

Vector v2(double a, double b) {
    Vector z(2);
    z << a, b;
    return z;
}

std::vector<Vector> random_points(int dim, int count, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<Vector> out;
    for (int i = 0; i < count; ++i) {
        Vector z(dim);
        for (int k = 0; k < dim; ++k) z(k) = scale * g(rng);
        out.push_back(z);
    }
    return out;
}

std::vector<Integrand> declared_gallery() {
    std::vector<Integrand> g;
    g.push_back(power_integrand(2, 3.0));
    g.push_back(power_integrand(2, 1.5));
    g.push_back(power_integrand(3, 4.0));
    g.push_back(two_center_integrand(3.0, v2(0.5, -0.25)));
    g.push_back(mixed_integrand(2, 2.0, 2.0));
    g.push_back(orthotropic_integrand(2, 2.0));
    g.push_back(cantor_integrand(2, 6));
    g.push_back(uhlenbeck_integrand(2, power_profile(3.0)));
    g.push_back(uhlenbeck_integrand(2, regularized_power_profile(4.0)));
    g.push_back(sum_integrand(power_integrand(2, 3.0), power_integrand(2, 1.5, v2(0.3, 0.1))));
    g.push_back(add_quadratic(power_integrand(2, 3.0), 0.5));
    return g;
}

}  // namespace

TEST_CASE("power integrand Hessian oracle") {
    const auto f = power_integrand(2, 3.0);
    const Matrix h = f.hessian(v2(1, 0));
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    CHECK(es.eigenvalues()(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(es.eigenvalues()(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(eigen_ratio_at(f, v2(1, 0)) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(*f.declared_k() == 2.0);
    CHECK(*f.growth_p() == 1.5);
    CHECK(*f.growth_q() == 3.0);
    CHECK(eigen_ratio_at(power_integrand(2, 4.0), v2(0.3, -0.7)) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(eigen_ratio_at(power_integrand(2, 2.0), v2(5, 2)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("two-center quadratic case") {
    const auto f = two_center_integrand(2.0, v2(0.7, -3));
    const Matrix h = f.hessian(v2(0.2, 0.1));
    CHECK((h - 4.0 * Matrix::Identity(2, 2)).norm() <= 1e-12);
    AnnulusSampler s;
    CHECK(estimate_k(f, s) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixed integrand eigenvalue bounds") {
    const auto f = mixed_integrand(2, 3.0, 4.0);
    const Vector z = v2(1, 1);
    Eigen::SelfAdjointEigenSolver<Matrix> es(f.hessian(z));
    const double r = z.norm();
    CHECK(es.eigenvalues()(0) >= r - 1e-12);
    CHECK(es.eigenvalues()(1) <= 2.0 * r + 3.0 + 1e-12);
    CHECK_FALSE(f.declared_k().has_value());
}

TEST_CASE("orthotropic control is not quasiuniformly convex") {
    const auto f = orthotropic_integrand(2, 4.0);
    double prev = 0;
    for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const double k = eigen_ratio_at(f, v2(1, t));
        CHECK(k == doctest::Approx(1.0 / (t * t)).epsilon(1e-8));
        CHECK(k > prev);
        prev = k;
    }
    CHECK(std::isinf(eigen_ratio_at(f, v2(1, 0))));
}

TEST_CASE("gallery invariants: convexity, gradient consistency, minimizer") {
    for (const auto& f : declared_gallery()) {
        CAPTURE(f.name());
        const auto pts = random_points(f.dim(), 200, 1.5, 17);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const Vector& a = pts[i];
            const Vector& b = pts[i + 1];
            const double mid = f.value(0.5 * (a + b));
            CHECK(mid <= 0.5 * (f.value(a) + f.value(b)) + 1e-9);
        }
        for (int i = 0; i < 20; ++i) {
            const Vector& z = pts[i];
            const Vector g = f.gradient(z);
            Vector fd(f.dim());
            for (int k = 0; k < f.dim(); ++k) {
                const double h = 1e-6 * (1 + z.norm());
                Vector zp = z, zm = z;
                zp(k) += h;
                zm(k) -= h;
                fd(k) = (f.value(zp) - f.value(zm)) / (2 * h);
            }
            CHECK((fd - g).norm() <= 1e-5 * std::max(1.0, g.norm()));
        }
        CHECK(f.gradient(f.minimizer()).norm() <= 1e-8);
    }
}

TEST_CASE("estimate_k never exceeds declared K") {
    AnnulusSampler s;
    s.shells = 100;
    s.directions = 100;
    for (const auto& f : declared_gallery()) {
        CAPTURE(f.name());
        CHECK(estimate_k(f, s) <= *f.declared_k() * (1 + 1e-6));
    }
    CHECK(estimate_k(power_integrand(2, 3.0), s) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("sum rule on random pairs") {
    const auto a = power_integrand(2, 3.0);
    const auto b = power_integrand(2, 1.5, v2(0.4, -0.2));
    const auto s = sum_integrand(a, b);
    CHECK(*s.declared_k() == 2.0);
    for (const auto& z : random_points(2, 1000, 2.0, 5)) CHECK(eigen_ratio_at(s, z) <= 2.0 * (1 + 1e-9));
}

TEST_CASE("growth bounds") {
    const auto r1 = verify_growth(power_integrand(2, 3.0), 2.0);
    CHECK(r1.holds);
    CHECK(r1.p == 1.5);
    CHECK(r1.q == 3.0);
    CHECK(verify_growth(two_center_integrand(2.0, v2(1, 1)), 1.0).holds);
    CHECK_FALSE(verify_growth(mixed_integrand(2, 2.0, 4.0), 1.0).holds);
    for (const auto& f : declared_gallery()) {
        CAPTURE(f.name());
        CHECK(verify_growth(f, *f.declared_k()).holds);
    }
}

TEST_CASE("descriptor round trip and fail-closed parsing") {
    for (const auto& f : declared_gallery()) {
        const auto g = make_integrand(f.descriptor());
        const Vector z = v2(0.3, -1.1).head(f.dim() >= 2 ? 2 : 1);
        if (f.dim() != 2) continue;
        CHECK(g.value(z) == doctest::Approx(f.value(z)).epsilon(1e-14));
        CHECK(g.declared_k() == f.declared_k());
    }
    CHECK_THROWS_AS(make_integrand({{"name", "power"}, {"p", 3}, {"exponent", 2}}), InputError);
    CHECK_THROWS_AS(make_integrand({{"name", "nope"}}), InputError);
    CHECK_THROWS_AS(make_integrand({{"name", "power"}, {"p", 1.0}}), InputError);
    CHECK_THROWS_AS(power_integrand(2, 0.5), InputError);
    CHECK_THROWS_AS(cantor_integrand(2, 0), InputError);
}

TEST_CASE("mollification oracles") {
    const auto q = power_integrand(2, 2.0);
    const auto m = mollify(q, 0.3);
    const Vector z = v2(0.7, -0.2);
    CHECK((m.gradient(z) - q.gradient(z)).norm() <= 1e-12);
    const double shift = m.value(z) - q.value(z);
    CHECK(shift > 0);
    CHECK(m.value(v2(-2, 1)) - q.value(v2(-2, 1)) == doctest::Approx(shift).epsilon(1e-12));

    const auto p = power_integrand(2, 3.0);
    double prev = 1e300;
    for (double eps : {0.4, 0.2, 0.1, 0.05, 0.025}) {
        const double d = std::abs(mollify(p, eps).value(z) - p.value(z));
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("mollified Cantor integrand keeps its declared K") {
    const auto c = cantor_integrand(2, 6);
    const auto m = mollify(c, 0.1);
    AnnulusSampler s;
    s.shells = 20;
    s.directions = 8;
    s.r0 = 0.05;
    s.r1 = 5;
    CHECK(estimate_k(m, s) <= *c.declared_k() + 1e-3);
}

TEST_CASE("prox oracles") {
    const auto q = power_integrand(2, 2.0);
    const Vector z = v2(1.2, -0.4);
    CHECK((prox_point(q, 1.0, z) - z / 2).norm() <= 1e-12);
    const auto f = power_integrand(2, 3.0, v2(0.5, 0.5));
    CHECK((prox_point(f, 0.7, f.minimizer()) - f.minimizer()).norm() <= 1e-12);
    const Vector p = prox_point(power_integrand(2, 4.0), 0.5, v2(1, 0));
    CHECK(p(1) == doctest::Approx(0.0));
    CHECK(p(0) + 0.5 * p(0) * p(0) * p(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p(0) == doctest::Approx(0.7709).epsilon(1e-4));
    CHECK_THROWS_AS(prox_point(q, 0.0, z), InputError);
}

TEST_CASE("prox is 1-Lipschitz") {
    const auto f = power_integrand(2, 4.0);
    const auto pts = random_points(2, 2000, 2.0, 9);
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
        const Vector a = prox_point(f, 0.3, pts[i]);
        const Vector b = prox_point(f, 0.3, pts[i + 1]);
        CHECK((a - b).norm() <= (pts[i] - pts[i + 1]).norm() * (1 + 1e-12));
    }
}

TEST_CASE("Moreau-Yosida envelope") {
    const auto q = power_integrand(2, 2.0);
    const auto my = moreau_yosida(q, 1.0);
    const Vector z = v2(0.6, 1.4);
    CHECK(my.value(z) == doctest::Approx(z.squaredNorm() / 4).epsilon(1e-12));

    // eigenvalue 2 with delta 0.5 maps to 1
    const auto two = moreau_yosida(power_integrand(2, 2.0, std::nullopt), 0.5);
    const auto q2 = sum_integrand(power_integrand(2, 2.0), power_integrand(2, 2.0));
    const auto my2 = moreau_yosida(q2, 0.5);
    CHECK((my2.hessian(z) - Matrix::Identity(2, 2)).norm() <= 1e-10);
    (void)two;

    const auto f = power_integrand(2, 3.0);
    const auto fd = moreau_yosida(f, 0.4);
    for (const auto& y : random_points(2, 50, 1.5, 21)) {
        const Vector p = prox_point(f, 0.4, y);
        CHECK((fd.gradient(y) - f.gradient(p)).norm() <= 1e-12 * (1 + y.norm()));
        Vector g(2);
        for (int k = 0; k < 2; ++k) {
            const double h = 1e-6 * (1 + y.norm());
            Vector a = y, b = y;
            a(k) += h;
            b(k) -= h;
            g(k) = (fd.value(a) - fd.value(b)) / (2 * h);
        }
        CHECK((g - fd.gradient(y)).norm() <= 1e-5 * std::max(1.0, g.norm()));
        CHECK(eigen_ratio_at(fd, y) <= eigen_ratio_at(f, p) * (1 + 1e-9) + 1e-12);
    }
}

TEST_CASE("local extension") {
    const auto f = mixed_integrand(2, 3.0, 4.0);
    ExtensionInfo info;
    const auto e = extend_local(f, 2.0, 0.5, 1e-3, &info);
    CHECK(info.c > 0);
    for (const auto& z : random_points(2, 200, 0.4, 4)) {
        if (z.norm() >= 1.0) continue;
        CHECK(e.value(z) == f.value(z));
    }
    for (double r : {4.0, 8.0, 32.0, 256.0}) {
        for (int k = 0; k < 16; ++k) {
            const double a = k * 0.3927;
            const Vector z = v2(r * std::cos(a), r * std::sin(a));
            CHECK(z.squaredNorm() <= 2.0 * (e.value(z) + 1));
        }
    }
    AnnulusSampler s;
    s.r0 = 0.05;
    s.r1 = 50;
    const double k = estimate_k(e, s);
    CHECK(std::isfinite(k));
    CHECK_THROWS_AS(extend_local(power_integrand(2, 3.0), 1.0, 0.5, 1e3), PreconditionError);
}

TEST_CASE("Uhlenbeck indices") {
    const auto a = uhlenbeck_indices(power_profile(3.0));
    CHECK(a.i_a == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.s_a == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.k == doctest::Approx(2.0).epsilon(1e-9));
    const auto b = uhlenbeck_indices(power_profile(2.0));
    CHECK(b.i_a == doctest::Approx(0.0));
    CHECK(b.k == doctest::Approx(1.0));
    const auto c = uhlenbeck_indices(regularized_power_profile(4.0));
    CHECK(c.i_a == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(c.s_a == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(c.k == doctest::Approx(3.0).epsilon(1e-6));
}
