#include <doctest.h>

#include "quc/spectral.hpp"

#include <cmath>
#include <numbers>

using namespace quc;

namespace {

GridField sample(const PeriodicGrid& g, int comps, const std::function<double(const Vector&, int)>& fn) {
    GridField out(comps, Vector(g.size()));
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const Vector x = g.point(i);
        for (int c = 0; c < comps; ++c) out[c](i) = fn(x, c);
    }
    return out;
}

double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("grid layout") {
    const PeriodicGrid g(2, 8);
    CHECK(g.size() == 64);
    CHECK(g.wavenumber(0) == 0);
    CHECK(g.wavenumber(3) == 3);
    CHECK(g.wavenumber(4) == 0);
    CHECK(g.is_nyquist(4));
    CHECK(g.wavenumber(5) == -3);
    CHECK(g.multi_index(9) == std::vector<int>{1, 1});
    CHECK_THROWS_AS(PeriodicGrid(2, 12), InputError);
    CHECK_THROWS_AS(PeriodicGrid(4, 16), InputError);
    CHECK_THROWS_AS(PeriodicGrid(2, 4), InputError);
}

TEST_CASE("transform round trip is real") {
    const PeriodicGrid g(3, 16);
    const auto v = random_band_limited_vector(g, 3, 4);
    CHECK(hermitian_defect(v) <= 1e-12);
    const auto phys = to_physical(v);
    const auto back = to_spectral(g, FieldKind::Vector, phys);
    for (int c = 0; c < 3; ++c) CHECK((back.coeffs[c] - v.coeffs[c]).norm() <= 1e-12 * v.coeffs[c].norm());
}

TEST_CASE("Riesz transform oracles") {
    const PeriodicGrid g(2, 32);
    const auto u = to_spectral(g, FieldKind::Scalar, sample(g, 1, [](const Vector& x, int) { return std::sin(x(0)); }));
    const auto r1 = to_physical(riesz_apply(0, u));
    const auto r2 = to_physical(riesz_apply(1, u));
    const auto expect = sample(g, 1, [](const Vector& x, int) { return -std::cos(x(0)); });
    CHECK(max_abs(r1[0] - expect[0]) <= 1e-13);
    CHECK(max_abs(r2[0]) <= 1e-14);

    const auto w = random_band_limited_scalar(g, 8);
    const auto wp = to_physical(w);
    Vector sum = Vector::Zero(g.size());
    double l2sum = 0;
    for (int j = 0; j < 2; ++j) {
        const auto rj = riesz_apply(j, w);
        sum += to_physical(riesz_apply(j, rj))[0];
        const double n = l2_norm(rj);
        CHECK(n <= l2_norm(w) * (1 + 1e-12));
        l2sum += n * n;
    }
    CHECK(max_abs(sum + wp[0]) <= 1e-12 * max_abs(wp[0]));
    CHECK(l2sum == doctest::Approx(std::pow(l2_norm(w), 2)).epsilon(1e-12));
}

TEST_CASE("div-curl reconstruction oracles") {
    const PeriodicGrid g(2, 32);
    // V = D sin(x1) = (cos x1, 0); Div V = -sin x1
    const auto f = to_spectral(g, FieldKind::Scalar, sample(g, 1, [](const Vector& x, int) { return -std::sin(x(0)); }));
    SpectralField zero_g(g, FieldKind::Skew);
    const auto dv = to_physical(divcurl_reconstruct(f, zero_g));
    const auto expect = sample(g, 1, [](const Vector& x, int) { return -std::sin(x(0)); });
    CHECK(max_abs(dv[0] - expect[0]) <= 1e-13);
    for (int c = 1; c < 4; ++c) CHECK(max_abs(dv[c]) <= 1e-14);

    SpectralField zf(g, FieldKind::Scalar);
    for (const auto& c : to_physical(divcurl_reconstruct(zf, zero_g))) CHECK(max_abs(c) == 0.0);

    for (int dim : {2, 3}) {
        const PeriodicGrid gd(dim, dim == 2 ? 64 : 16);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto v = random_band_limited_vector(gd, seed, dim == 2 ? 6 : 4);
            const auto direct = gradient_of(v);
            const auto rec = divcurl_reconstruct(divergence_of(v), curl_of(v));
            double num = 0, den = 0;
            for (std::size_t c = 0; c < direct.coeffs.size(); ++c) {
                num += (rec.coeffs[c] - direct.coeffs[c]).squaredNorm();
                den += direct.coeffs[c].squaredNorm();
            }
            CHECK(std::sqrt(num / den) <= 1e-10);
        }
    }
    CHECK_THROWS_AS(divcurl_reconstruct(f, SpectralField(PeriodicGrid(2, 16), FieldKind::Skew)), InputError);
}

TEST_CASE("div-curl identity") {
    const PeriodicGrid g(2, 32);
    const auto v = to_spectral(g, FieldKind::Vector, sample(g, 2, [](const Vector& x, int c) { return c == 0 ? std::cos(x(0)) : 0.0; }));
    CHECK(divcurl_identity_residual(v) <= 1e-13);
    const auto w = to_spectral(g, FieldKind::Vector, sample(g, 2, [](const Vector& x, int c) { return c == 0 ? -0.7 * std::sin(x(1)) : 0.0; }));
    CHECK(divcurl_identity_residual(w) <= 1e-10);
    CHECK(divcurl_identity_residual(SpectralField(g, FieldKind::Vector)) == 0.0);
    for (std::uint64_t s = 1; s <= 10; ++s)
        CHECK(divcurl_identity_residual(random_band_limited_vector(PeriodicGrid(3, 16), s, 4)) <= 1e-10);
}

TEST_CASE("cutoff identity") {
    const PeriodicGrid g(2, 128);
    Vector c(2);
    c << std::numbers::pi, std::numbers::pi;
    const Cutoff cut{c, 0.5, 2.5};
    const auto v = to_spectral(g, FieldKind::Vector, sample(g, 2, [](const Vector& x, int k) { return k == 0 ? std::cos(x(0)) : 0.0; }));
    CHECK(cutoff_identity_check(v, cut).imbalance <= 1e-6);

    double prev = 1e300;
    for (int n : {32, 64, 128}) {
        const PeriodicGrid gn(2, n);
        const auto r = cutoff_identity_check(random_band_limited_vector(gn, 4, 6), cut);
        CHECK(r.imbalance < prev);
        prev = r.imbalance;
    }
    CHECK_THROWS_AS(cutoff_identity_check(v, Cutoff{c, 0.5, 3.5}), InputError);
}

TEST_CASE("L^m matrix norm") {
    for (int dim : {2, 3}) {
        const PeriodicGrid g(dim, 8);
        GridField eye(dim * dim, Vector::Zero(g.size()));
        for (int k = 0; k < dim; ++k) eye[k * dim + k].setOnes();
        CHECK(lm_matrix_norm(g, eye, 2.0) == doctest::Approx(std::sqrt(dim * std::pow(2 * std::numbers::pi, dim))).epsilon(1e-13));
        GridField z(dim * dim, Vector::Zero(g.size()));
        CHECK(lm_matrix_norm(g, z, 3.0) == 0.0);
    }
    const PeriodicGrid g(2, 32);
    const auto m = to_physical(gradient_of(random_band_limited_vector(g, 2)));
    GridField scaled = m;
    for (auto& c : scaled) c *= -3.7;
    for (double p : {0.5, 1.5, 4.0})
        CHECK(lm_matrix_norm(g, scaled, p) == doctest::Approx(3.7 * lm_matrix_norm(g, m, p)).epsilon(1e-13));
}

TEST_CASE("L^m bound on random fields") {
    const PeriodicGrid g(2, 64);
    for (std::uint64_t s = 1; s <= 20; ++s) {
        const auto v = random_band_limited_vector(g, s);
        for (double m : {1.5, 2.0, 3.0, 6.0}) CHECK(verify_lm_bound(v, m).holds);
    }
    // gradient field: curl part vanishes, lhs / ||div||_4 stays under N^2 (mhat - 1)
    const auto phi = random_band_limited_scalar(g, 3);
    SpectralField grad(g, FieldKind::Vector);
    for (int j = 0; j < 2; ++j) grad.coeffs[j] = spectral_derivative(j, phi).coeffs[0];
    const auto r = verify_lm_bound(grad, 4.0);
    CHECK(r.curl_norm <= 1e-12 * r.lhs);
    CHECK(r.lhs / r.div_norm <= 4.0 * 3.0);
}

TEST_CASE("Cordes constants") {
    CHECK(conjugate_max(2.0) == 2.0);
    CHECK(conjugate_max(1.5) == doctest::Approx(3.0));
    CHECK(conjugate_max(4.0) == 4.0);
    CHECK(std::abs(cordes_K0(2, 2.0) - 1.0 / (1.0 - 1.0 / (4.0 * std::sqrt(2.0)))) <= 1e-12);
    CHECK(cordes_K0(2, 4.0) == doctest::Approx(1.0 / (1.0 - 1.0 / (12.0 * std::sqrt(2.0)))).epsilon(1e-14));
    CHECK(cordes_K0(2, 4.0) == doctest::Approx(1.0626).epsilon(1e-4));
    double prev = 1e9;
    for (double m : {2.0, 2.5, 3.0, 6.0}) {
        const double k = cordes_K0(2, m);
        CHECK(k < prev);
        CHECK(k > 1.0);
        CHECK(cordes_K0(2, m / (m - 1)) == doctest::Approx(k));
        CHECK(cordes_K0(3, m) < k);
        prev = k;
    }
}

TEST_CASE("Cordes delta0") {
    const CordesWindow w;
    CHECK(cordes_delta0(1.0, 2, w) == doctest::Approx(2.0 / 3.0));
    double prev = 1e9;
    for (double k : {1.05, 1.2, 1.5, 2.0, 5.0}) {
        const double d = cordes_delta0(k, 2, w);
        CHECK(d > 0);
        CHECK(d < prev);
        prev = d;
    }
    // K = 2: theta = ln 2 / ln T with T = 24 sqrt 2 on both sides
    const double theta = std::log(2.0) / std::log(24.0 * std::sqrt(2.0));
    const double m_up = 1.0 / ((1 - theta) / 2 + theta / 4);
    const double m_lo = 1.0 / ((1 - theta) / 2 + theta * 3.0 / 4.0);
    CHECK(certified_T_bound(2, 4.0) == doctest::Approx(24.0 * std::sqrt(2.0)));
    CHECK(cordes_delta0(2.0, 2, w) == doctest::Approx(std::min(m_up - 2, 2 - m_lo)).epsilon(1e-10));
    CHECK(cordes_delta0_empirical(1.5, 2, w, 16, 4, 1) >= cordes_delta0(1.5, 2, w));
}

TEST_CASE("T norm probe") {
    const PeriodicGrid g(2, 32);
    const double t2 = estimate_T_norm(g, 2.0, 20, 1);
    CHECK(t2 <= 1 + 1e-9);
    CHECK(t2 >= 0.9);
    const double t4 = estimate_T_norm(g, 4.0, 10, 2);
    CHECK(t4 <= 4.0 * 3.0 * (1 + std::sqrt(2.0)));
    CHECK(t4 <= certified_T_bound(2, 4.0));
}

TEST_CASE("grid export") {
    const PeriodicGrid g(2, 8);
    const std::string s = export_grid_text(g, Vector::Ones(g.size()));
    CHECK(std::count(s.begin(), s.end(), '\n') >= 64);
}
