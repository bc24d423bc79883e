#include "quc/radial.hpp"

#include "quc/quadrature.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

namespace quc {

double RadialSource::operator()(double r) const {
    if (custom) return custom(r);
    if (beta == 0.0) return value;
    return value * std::pow(r, -beta);
}

RadialSource RadialSource::constant(double value) {
    RadialSource s;
    s.kind = "const";
    s.value = value;
    return s;
}

RadialSource RadialSource::power(double value, double beta) {
    RadialSource s;
    s.kind = beta == 0.0 ? "const" : "power";
    s.value = value;
    s.beta = beta;
    return s;
}

double sphere_area(int dim) {
    if (dim < 1) throw InputError("sphere_area: dimension must be >= 1");
    return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

double invert_flux(const UhlenbeckProfile& profile, double flux) {
    if (flux == 0.0) return 0.0;
    const double target = std::abs(flux);
    const double sign = flux > 0 ? 1.0 : -1.0;
    if (profile.kind == "power") return sign * std::pow(target, 1.0 / (profile.p - 1.0));
    auto g = [&](double t) { return t * profile.a(t); };
    double lo = 0.0, hi = 1.0;
    while (g(hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw NumericError("invert_flux: flux outside the range of a(|t|) t");
    }
    while (hi - lo > 1e-6 * hi) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < target ? lo : hi) = mid;
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
        const double gt = g(t) - target;
        if (gt == 0.0) break;
        const double slope = profile.a(t) + t * profile.a_prime(t);
        double next = t - gt / slope;
        const bool newton = next >= lo && next <= hi;
        if (!newton) next = 0.5 * (lo + hi);
        const bool done = (newton && std::abs(next - t) <= 1e-15 * std::max(t, 1e-300)) ||
                          hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi;
        (g(next) < target ? lo : hi) = next;
        t = next;
        if (done) break;
    }
    return sign * t;
}

namespace {

double moment_integrand(const RadialProblem& pb, double s) { return std::pow(s, pb.dim - 1) * pb.source(s); }

double piece_moment(const RadialProblem& pb, double a, double b) {
    if (b <= a) return 0.0;
    return integrate_adaptive([&](double s) { return moment_integrand(pb, s); }, a, b, 1e-15, 1e-13, 4000).value;
}

Vector build_grid(const RadialProblem& pb) {
    if (pb.grid == RadialGridKind::Uniform) {
        if (pb.uniform_points < 3) throw InputError("solve_radial: need >= 3 grid points");
        return Vector::LinSpaced(pb.uniform_points, pb.r0, pb.radius);
    }
    if (pb.per_octave < 1 || pb.octaves < 1) throw InputError("solve_radial: bad geometric grid density");
    const int count = pb.per_octave * pb.octaves;
    std::vector<double> r;
    if (pb.r0 == 0.0) {
        r.push_back(0.0);
        for (int j = count; j >= 0; --j) r.push_back(pb.radius * std::exp2(-static_cast<double>(j) / pb.per_octave));
    } else {
        const int pts = std::max(2, static_cast<int>(std::ceil(std::log2(pb.radius / pb.r0) * pb.per_octave)) + 1);
        for (int i = 0; i < pts; ++i) r.push_back(pb.r0 * std::pow(pb.radius / pb.r0, static_cast<double>(i) / (pts - 1)));
        r.back() = pb.radius;
    }
    return Eigen::Map<Vector>(r.data(), static_cast<Eigen::Index>(r.size()));
}

// Limit of T(r) and T(r)/r at the origin for r0 = 0, c = 0.
void origin_limits(const RadialProblem& pb, double& flux0, double& h0) {
    if (pb.source.custom) {
        flux0 = 0.0;
        h0 = pb.source(0.0) / pb.dim;
        return;
    }
    const double b = pb.source.beta;
    const double inf = std::numeric_limits<double>::infinity();
    const double coef = pb.source.value / (pb.dim - b);
    flux0 = b < 1.0 ? 0.0 : (b == 1.0 ? coef : std::copysign(inf, coef));
    h0 = b == 0.0 ? coef : std::copysign(inf, coef);
}

}  // namespace

double RadialSolution::flux_at(double s) const {
    const auto& pb = problem;
    if (!(s >= r(0) - 1e-14 && s <= r(r.size() - 1) * (1.0 + 1e-14)))
        throw InputError("RadialSolution: radius outside the solved interval");
    if (s <= 0.0) return flux(0);
    const auto it = std::upper_bound(r.data(), r.data() + r.size(), s);
    const Eigen::Index i = std::max<Eigen::Index>(0, (it - r.data()) - 1);
    const double mom = moment(i) + piece_moment(pb, r(i), s);
    return std::pow(s, 1 - pb.dim) * (mom + pb.flux_c);
}

double RadialSolution::dv_at(double s) const { return invert_flux(problem.profile, flux_at(s)); }

double RadialSolution::v_at(double s) const {
    if (!(s >= r(0) - 1e-14 && s <= r(r.size() - 1) * (1.0 + 1e-14)))
        throw InputError("RadialSolution: radius outside the solved interval");
    const auto it = std::upper_bound(r.data(), r.data() + r.size(), s);
    const Eigen::Index i = std::max<Eigen::Index>(0, (it - r.data()) - 1);
    if (s <= r(i)) return v(i);
    return v(i) + integrate_adaptive([this](double t) { return dv_at(t); }, r(i), s, 1e-15, 1e-12).value;
}

double RadialSolution::flux_identity_defect() const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (r(i) == 0.0) continue;
        worst = std::max(worst, std::abs(std::pow(r(i), problem.dim - 1) * flux(i) - moment(i) - problem.flux_c));
    }
    return worst;
}

RadialSolution solve_radial(const RadialProblem& pb) {
    if (pb.dim < 1) throw InputError("solve_radial: dimension must be >= 1");
    if (!(pb.r0 >= 0.0 && pb.radius > pb.r0)) throw InputError("solve_radial: need 0 <= r0 < radius");
    if (!pb.profile.a || !pb.profile.a_prime) throw InputError("solve_radial: profile needs a and a'");
    if (pb.r0 == 0.0 && pb.flux_c != 0.0)
        throw InputError("solve_radial: the homogeneous flux mode requires an annulus (r0 > 0)");
    if (pb.r0 == 0.0 && !pb.source.custom && pb.source.beta >= pb.dim)
        throw InputError("solve_radial: s^(N-1) f is not integrable at the origin");
    if (pb.profile.kind != "power" && pb.profile.kind != "regularized_power") {
        const auto idx = uhlenbeck_indices(pb.profile);
        if (!(idx.i_a > -1.0)) throw InputError("solve_radial: inadmissible profile");
    }

    RadialSolution sol;
    sol.problem = pb;
    sol.r = build_grid(pb);
    const Eigen::Index n = sol.r.size();
    sol.moment = Vector::Zero(n);
    sol.flux.resize(n);
    sol.dv.resize(n);
    sol.h.resize(n);
    sol.v.resize(n);
    for (Eigen::Index i = 1; i < n; ++i) sol.moment(i) = sol.moment(i - 1) + piece_moment(pb, sol.r(i - 1), sol.r(i));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ri = sol.r(i);
        if (ri == 0.0) {
            double f0, h0;
            origin_limits(pb, f0, h0);
            sol.flux(i) = f0;
            sol.h(i) = h0;
        } else {
            sol.flux(i) = std::pow(ri, 1 - pb.dim) * (sol.moment(i) + pb.flux_c);
            sol.h(i) = sol.flux(i) / ri;
        }
        sol.dv(i) = std::isfinite(sol.flux(i)) ? invert_flux(pb.profile, sol.flux(i)) : sol.flux(i);
    }
    sol.v(n - 1) = pb.boundary_value;
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const double a = sol.r(i - 1), b = sol.r(i);
        const double inc = integrate_adaptive([&](double s) { return sol.dv_at(s); }, a, b, 1e-15, 1e-12, 4000).value;
        sol.v(i - 1) = sol.v(i) - inc;
    }
    return sol;
}

RadialStress stress_at(const RadialSolution& sol, const std::vector<Vector>& points) {
    const auto& pb = sol.problem;
    RadialStress out;
    for (const auto& x : points) {
        if (x.size() != pb.dim) throw InputError("stress_at: point dimension mismatch");
        const double rr = x.norm();
        if (rr < pb.r0 - 1e-12 || rr > pb.radius * (1.0 + 1e-12)) throw InputError("stress_at: point outside the domain");
        Matrix dv = Matrix::Zero(pb.dim, pb.dim);
        double h;
        if (rr == 0.0) {
            h = sol.h(0);
            dv.diagonal().setConstant(h);
        } else {
            h = sol.flux_at(rr) / rr;
            const Vector u = x / rr;
            dv = h * Matrix::Identity(pb.dim, pb.dim) + (pb.source(rr) - pb.dim * h) * u * u.transpose();
        }
        out.x.push_back(x);
        out.v.push_back(h * x);
        out.dv.push_back(dv);
    }
    return out;
}

RadialStress stress_of(const RadialSolution& sol, int n) {
    const auto& pb = sol.problem;
    if (n < 2) throw InputError("stress_of: need n >= 2");
    std::vector<Vector> pts;
    std::vector<int> idx(pb.dim, 0);
    const double step = 2.0 * pb.radius / (n - 1);
    while (true) {
        Vector x(pb.dim);
        for (int a = 0; a < pb.dim; ++a) x(a) = -pb.radius + idx[a] * step;
        const double rr = x.norm();
        if (rr >= pb.r0 && rr <= pb.radius) pts.push_back(x);
        int a = 0;
        while (a < pb.dim && ++idx[a] == n) idx[a++] = 0;
        if (a == pb.dim) break;
    }
    return stress_at(sol, pts);
}

double stress_curl_defect(const RadialStress& s) {
    double worst = 0.0;
    for (const auto& m : s.dv) worst = std::max(worst, (m - m.transpose()).norm());
    return worst;
}

Vector psi_map(const Vector& y, double p) {
    if (!(p > 1.0)) throw InputError("psi_map: p must be > 1");
    const double n = y.norm();
    if (n == 0.0) return Vector::Zero(y.size());
    return std::pow(n, (2.0 - p) / (p - 1.0)) * y;
}

HolderFit holder_exponent(const Vector& r, const Vector& values, double window_lo, double window_hi, int min_scales) {
    if (r.size() != values.size() || r.size() < 3) throw InputError("holder_exponent: need matching samples");
    for (Eigen::Index i = 1; i < r.size(); ++i)
        if (!(r(i) > r(i - 1))) throw InputError("holder_exponent: radii must be strictly increasing");
    if (!values.allFinite()) throw InputError("holder_exponent: non-finite samples");
    if (!(window_lo > 0.0 && window_hi > window_lo)) throw InputError("holder_exponent: bad window");

    HolderFit fit;
    for (double d = window_hi; d >= window_lo * (1.0 - 1e-12); d *= 0.5) fit.deltas.push_back(d);
    fit.scales = static_cast<int>(fit.deltas.size());
    if (fit.scales < min_scales)
        throw InputError("holder_exponent: only " + std::to_string(fit.scales) + " dyadic scales in the window");

    const Eigen::Index n = r.size();
    for (double d : fit.deltas) {
        // sliding-window max - min over {j : r_j - r_i <= d}
        std::deque<Eigen::Index> mx, mn;
        double best = 0.0;
        Eigen::Index j = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            while (j < n && r(j) - r(i) <= d * (1.0 + 1e-12)) {
                while (!mx.empty() && values(mx.back()) <= values(j)) mx.pop_back();
                while (!mn.empty() && values(mn.back()) >= values(j)) mn.pop_back();
                mx.push_back(j);
                mn.push_back(j);
                ++j;
            }
            while (mx.front() < i) mx.pop_front();
            while (mn.front() < i) mn.pop_front();
            double hi_v = values(mx.front()), lo_v = values(mn.front());
            // value at r_i + d by linear interpolation, so coarse stretches of the grid
            // still see the full window
            if (j < n && j > 0) {
                const double x = r(i) + d;
                const double w = (x - r(j - 1)) / (r(j) - r(j - 1));
                const double end = (1.0 - w) * values(j - 1) + w * values(j);
                hi_v = std::max(hi_v, end);
                lo_v = std::min(lo_v, end);
            }
            best = std::max(best, hi_v - lo_v);
        }
        fit.moduli.push_back(best);
    }

    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < fit.deltas.size(); ++k)
        if (fit.moduli[k] > 0.0) {
            xs.push_back(std::log(fit.deltas[k]));
            ys.push_back(std::log(fit.moduli[k]));
        }
    if (xs.size() < 3) {
        fit.zero_modulus = true;
        fit.exponent = fit.ci_low = fit.ci_high = 1.0;
        return fit;
    }
    const double k = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / k;
        my += ys[i] / k;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.exponent = sxy / sxx;
    double ssr = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - my - fit.exponent * (xs[i] - mx);
        ssr += e * e;
    }
    const double se = std::sqrt(ssr / (k - 2.0) / sxx);
    const boost::math::students_t dist(k - 2.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    fit.ci_low = fit.exponent - t * se;
    fit.ci_high = fit.exponent + t * se;
    return fit;
}

HolderFit holder_exponent(const Vector& r, const Vector& values) {
    double r1 = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i)
        if (r(i) > 0.0) {
            r1 = r(i);
            break;
        }
    if (!(r1 > 0.0)) throw InputError("holder_exponent: no positive radius");
    return holder_exponent(r, values, 2.0 * r1, r(r.size() - 1) / 8.0);
}

namespace {

// |S^(N-1)| int_0^rho g(r) r^(N-1) dr, piecewise over the solution grid.
double ball_integral(const RadialSolution& sol, double rho, const std::function<double(double)>& g) {
    const int dim = sol.problem.dim;
    double acc = 0.0;
    for (Eigen::Index i = 0; i + 1 < sol.r.size() && sol.r(i) < rho; ++i) {
        const double a = sol.r(i), b = std::min(sol.r(i + 1), rho);
        acc += integrate_adaptive([&](double s) { return g(s) * std::pow(s, dim - 1); }, a, b, 1e-15, 1e-10, 4000)
                   .value;
    }
    return sphere_area(dim) * acc;
}

}  // namespace

CpPrimeReport cp_prime_verify(double p, const RadialSource& source, double m, int dim, int per_octave) {
    if (!(p > 1.0)) throw InputError("cp_prime_verify: p must be > 1");
    if (!(m >= 1.0)) throw InputError("cp_prime_verify: m must be >= 1");
    constexpr double R = 1.0;
    RadialProblem pb;
    pb.dim = dim;
    pb.profile = power_profile(p);
    pb.source = source;
    pb.radius = 2.0 * R;
    pb.per_octave = per_octave;
    const RadialSolution sol = solve_radial(pb);

    CpPrimeReport rep;
    rep.p = p;
    rep.p_conj = p / (p - 1.0);
    rep.m = m;
    rep.target = std::min(rep.p_conj, 2.0);

    // Hoelder exponent of v' on [0, R]
    Eigen::Index cnt = 0;
    while (cnt < sol.r.size() && sol.r(cnt) <= R * (1.0 + 1e-12)) ++cnt;
    if (sol.dv.head(cnt).allFinite()) {
        const HolderFit fit = holder_exponent(sol.r.head(cnt), sol.dv.head(cnt));
        rep.du_exponent = fit.exponent;
        rep.ci_low = fit.ci_low;
        rep.ci_high = fit.ci_high;
    } else {
        rep.du_exponent = rep.ci_low = rep.ci_high = 0.0;
    }
    rep.u_exponent = 1.0 + rep.du_exponent;

    auto h_of = [&](double s) { return sol.flux_at(s) / s; };
    auto v_abs = [&](double s) { return std::abs(sol.flux_at(s)); };
    auto dv_frob = [&](double s) {
        const double h = h_of(s);
        const double radial = source(s) - (dim - 1) * h;
        return std::sqrt((dim - 1) * h * h + radial * radial);
    };
    const double lm_v = ball_integral(sol, 0.5 * R, [&](double s) { return std::pow(v_abs(s), m); });
    const double lm_dv = ball_integral(sol, 0.5 * R, [&](double s) { return std::pow(dv_frob(s), m); });
    rep.v_w1m = std::pow(lm_v + lm_dv, 1.0 / m);
    rep.f_lm = std::pow(ball_integral(sol, 2.0 * R, [&](double s) { return std::pow(std::abs(source(s)), m); }), 1.0 / m);
    rep.v_l1 = ball_integral(sol, 2.0 * R, v_abs);
    rep.ratio = rep.v_w1m / (rep.f_lm + rep.v_l1);
    const bool bounded_f = source.custom ? true : source.beta == 0.0;
    rep.holds = std::isfinite(rep.ratio) && (!bounded_f || rep.u_exponent >= rep.target - 0.1);
    return rep;
}

AlphaP alpha_p(int dim, double p) {
    if (!(p > 1.0)) throw InputError("alpha_p: p must be > 1");
    if (dim < 2) throw InputError("alpha_p: N must be >= 2");
    AlphaP out;
    const double n2 = static_cast<double>(dim) * dim, n3 = n2 * dim;
    const double gap = std::abs(p - 2.0);
    out.m_p_infinite = gap == 0.0;
    out.m_p = out.m_p_infinite ? std::numeric_limits<double>::infinity() : 1.0 / (2.0 * n2 * gap);
    out.alpha_p = p >= 2.0 ? (1.0 - 2.0 * n3 * (p - 2.0)) / (p - 1.0) : 1.0 - 2.0 * n3 * (2.0 - p);
    out.admissible = gap < 1.0 / (2.0 * n3);
    out.m_p_exceeds_n = out.m_p > dim;
    const double kp = std::max(p - 1.0, 1.0 / (p - 1.0));
    out.cordes_lhs = out.m_p_infinite ? 0.0 : std::numbers::sqrt2 * n2 * (out.m_p - 1.0) * (1.0 - 1.0 / kp);
    out.cordes_holds = out.cordes_lhs < 1.0;
    return out;
}

RadialStress cylindrical_stress(const RadialSolution& sol, int ambient_dim, const std::vector<Vector>& points) {
    const int k = sol.problem.dim;
    if (ambient_dim < k) throw InputError("cylindrical_stress: ambient dimension below the radial dimension");
    std::vector<Vector> heads;
    for (const auto& x : points) {
        if (x.size() != ambient_dim) throw InputError("cylindrical_stress: point dimension mismatch");
        heads.push_back(x.head(k));
    }
    const RadialStress inner = stress_at(sol, heads);
    RadialStress out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        Vector v = Vector::Zero(ambient_dim);
        v.head(k) = inner.v[i];
        Matrix dv = Matrix::Zero(ambient_dim, ambient_dim);
        dv.topLeftCorner(k, k) = inner.dv[i];
        out.x.push_back(points[i]);
        out.v.push_back(v);
        out.dv.push_back(dv);
    }
    return out;
}

}  // namespace quc
