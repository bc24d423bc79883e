#include <doctest.h>

#include "quc/cantor.hpp"
#include "quc/gallery.hpp"

#include <cmath>
#include <random>

using namespace quc;

namespace {

std::vector<Vec2> disc_points(int count, std::uint64_t seed, const Disc& d = {}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Vec2> out;
    while (static_cast<int>(out.size()) < count) {
        const Vec2 e(u(rng), u(rng));
        if (e.norm() < 1) out.push_back(d.center + d.radius * e);
    }
    return out;
}

}  // namespace

TEST_CASE("arctan closed forms") {
    const Vec2 z(1.3, -0.4);
    const double h = 1e-5;
    Vec2 fd;
    for (int k = 0; k < 2; ++k) {
        Vec2 a = z, b = z;
        a(k) += h;
        b(k) -= h;
        fd(k) = (ArctanSolution::u(a) - ArctanSolution::u(b)) / (2 * h);
    }
    CHECK((fd - ArctanSolution::du(z)).norm() <= 1e-9);
    CHECK(ArctanSolution::d2u(z).trace() == doctest::Approx(0.0));
    CHECK((ArctanSolution::d2u(z) - ArctanSolution::d2u(z).transpose()).norm() == 0.0);
}

TEST_CASE("trace check for radial integrands") {
    CHECK(std::abs(trace_check_radial(power_radial_profile(2.0), Vec2(1, 0.3))) <= 1e-12);
    for (const auto& z : disc_points(1000, 1)) {
        CHECK(std::abs(trace_check_radial(power_radial_profile(4.0), z)) <= 1e-12);
        CHECK(std::abs(trace_check_radial(power_radial_profile(1.5), z)) <= 1e-12);
    }
    const auto smooth = smoothed_cantor_profile(8, 0.05);
    for (const auto& z : disc_points(100, 2)) CHECK(std::abs(trace_check_radial(smooth, z)) <= 1e-10);
    for (const auto& z : disc_points(100, 3)) CHECK(std::abs(trace_check_radial(power_integrand(2, 3.0), z)) <= 1e-12);
}

TEST_CASE("Cantor stress formula") {
    const Vec2 a = cantor_stress(Vec2(1, 0), 10);
    CHECK(a(0) == 0.0);
    CHECK(a(1) == doctest::Approx(2.0));
    // z^perp / |z|^2 + h(1/2) z^perp / |z| with z = (2, 0)
    const Vec2 b = cantor_stress(Vec2(2, 0), 10);
    CHECK(b(1) == doctest::Approx(0.5 + 0.5 * 1.0));
    double prev = 1e300;
    for (double x : {1e1, 1e2, 1e4, 1e6, 1e8}) {
        const double n = cantor_stress(Vec2(x, 0), 10).norm();
        CHECK(n < prev);
        prev = n;
    }
    CHECK(prev <= 1e-5);
    CHECK_THROWS_AS(cantor_stress(Vec2(-1, 0.5), 5), DomainError);
    CHECK_THROWS_AS(cantor_stress(Vec2(0, 0.5), 5), DomainError);
}

TEST_CASE("Cantor stress is the gradient of the Cantor integrand at Du") {
    const auto f = cantor_integrand(2, 7);
    for (const auto& z : disc_points(50, 4)) {
        Vector w = ArctanSolution::du(z);
        CHECK((f.gradient(w) - Vector(cantor_stress(z, 7))).norm() <= 1e-12);
    }
}

TEST_CASE("test bumps") {
    const auto bank = bump_bank({}, 60);
    CHECK(bank.size() >= 50);
    const Disc d;
    for (const auto& b : bank) CHECK((b.center - d.center).norm() + b.radius <= d.radius);
    const TestBump t{Vec2(0, 0), 1.0};
    CHECK(t.phi(Vec2(0, 0)) == doctest::Approx(1.0));
    CHECK(t.phi(Vec2(1, 0)) == 0.0);
    const Vec2 x(0.3, -0.2);
    const double h = 1e-6;
    const Vec2 fd((t.phi(x + Vec2(h, 0)) - t.phi(x - Vec2(h, 0))) / (2 * h),
                  (t.phi(x + Vec2(0, h)) - t.phi(x - Vec2(0, h))) / (2 * h));
    CHECK((fd - t.grad(x)).norm() <= 1e-8);
}

TEST_CASE("weak divergence residual: harmonic stream, source field, Cantor stress") {
    const auto bank = bump_bank({}, 60);
    const auto none = [](double, double) { return std::vector<double>{}; };
    const auto harm = weak_divergence_residual([](const Vec2& z) { return ArctanSolution::du(z); }, none, bank);
    CHECK(harm.max_residual <= 1e-10);
    const auto src = weak_divergence_residual([](const Vec2& z) { return z; }, none, bank);
    CHECK(src.max_residual > 1e-2);
    const auto c = cantor_weak_residual(8);
    CHECK(c.max_residual <= 1e-3);
}

TEST_CASE("Sobolev blow-up table shape") {
    const auto rows = sobolev_blowup_diagnostic({4, 5, 6, 7});
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].w11 > rows[i - 1].w11);
        CHECK(rows[i].w12 > rows[i - 1].w12);
        CHECK(rows[i].smooth_w11 == doctest::Approx(rows[0].smooth_w11).epsilon(1e-12));
    }
}

TEST_CASE("planar field export") {
    const std::string s = export_planar_field([](const Vec2& z) { return z; }, {}, 5);
    CHECK(std::count(s.begin(), s.end(), '\n') >= 25);
}
