#include "quc/gallery.hpp"

#include "quc/cantor.hpp"
#include "quc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

namespace quc {

ArctanSolution::ArctanSolution(Disc disc) : disc_(disc) {
    if (!(disc_.radius > 0.0)) throw InputError("ArctanSolution: radius must be > 0");
    if (!(disc_.center.x() - disc_.radius > 0.0)) throw InputError("ArctanSolution: disc must lie in {x > 0}");
}

double ArctanSolution::u(const Vec2& z) { return std::atan(z.y() / z.x()); }

Vec2 ArctanSolution::du(const Vec2& z) { return Vec2(-z.y(), z.x()) / z.squaredNorm(); }

Mat2 ArctanSolution::d2u(const Vec2& z) {
    const double x = z.x(), y = z.y(), r4 = z.squaredNorm() * z.squaredNorm();
    Mat2 m;
    m << 2 * x * y, y * y - x * x, y * y - x * x, -2 * x * y;
    return m / r4;
}

RadialProfile power_radial_profile(double p) {
    if (!(p > 1.0)) throw InputError("power_radial_profile: p must be > 1");
    return {"power", [p](double t) { return std::pow(t, p - 1.0); },
            [p](double t) { return (p - 1.0) * std::pow(t, p - 2.0); }};
}

RadialProfile smoothed_cantor_profile(int level, double eps) {
    if (!(eps > 0.0)) throw InputError("smoothed_cantor_profile: eps must be > 0");
    auto prof = std::make_shared<CantorProfile>(level);
    auto rule = std::make_shared<GaussRule>(gauss_legendre(64));
    auto weights = std::make_shared<std::vector<double>>();
    double mass = 0.0;
    for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
        const double y = rule->nodes[i];
        weights->push_back(rule->weights[i] * std::pow(1.0 - y * y, 4));
        mass += weights->back();
    }
    for (auto& w : *weights) w /= mass;
    auto g1 = [prof, rule, weights, eps](double t) {
        double acc = 0.0;
        for (std::size_t i = 0; i < weights->size(); ++i) acc += (*weights)[i] * prof->h(t - eps * rule->nodes[i]);
        return t + acc;
    };
    auto g2 = [g1](double t) {
        const double step = std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(t));
        return (g1(t + step) - g1(t - step)) / (2.0 * step);
    };
    return {"smoothed_cantor", g1, g2};
}

double trace_check_radial(const RadialProfile& f, const Vec2& z) {
    const Vec2 w = ArctanSolution::du(z);
    const double t = w.norm();
    const Vec2 u = w / t;
    const Mat2 uu = u * u.transpose();
    const Mat2 hess = f.g2(t) * uu + f.g1(t) / t * (Mat2::Identity() - uu);
    return (hess * ArctanSolution::d2u(z)).trace();
}

double trace_check_radial(const Integrand& f, const Vec2& z) {
    if (f.dim() != 2) throw InputError("trace_check_radial: integrand must be planar");
    const Matrix hess = f.hessian(Vector(ArctanSolution::du(z)));
    return (hess * Matrix(ArctanSolution::d2u(z))).trace();
}

Vec2 cantor_stress(const Vec2& z, int level) {
    if (!(z.x() > 0.0)) throw DomainError("cantor_stress: need x > 0");
    const double r = z.norm();
    const Vec2 perp(-z.y(), z.x());
    return perp / (r * r) + cantor_h(level, 1.0 / r) * perp / r;
}

double TestBump::phi(const Vec2& x) const {
    const double q = (x - center).squaredNorm() / (radius * radius);
    if (q >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - q));
}

Vec2 TestBump::grad(const Vec2& x) const {
    const double q = (x - center).squaredNorm() / (radius * radius);
    if (q >= 1.0) return Vec2::Zero();
    const double f = std::exp(1.0 - 1.0 / (1.0 - q));
    const double om = 1.0 - q;
    return -f / (om * om) * 2.0 * (x - center) / (radius * radius);
}

std::vector<TestBump> bump_bank(const Disc& disc, int count) {
    if (count < 1) throw InputError("bump_bank: count must be >= 1");
    struct Ring {
        double ring, bump;
        int n;
    };
    // (ring radius, bump radius) as fractions of the disc radius; ring + bump <= 0.92
    const Ring rings[] = {{0.0, 0.35, 1}, {0.5, 0.35, 8}, {0.7, 0.2, 16}, {0.3, 0.2, 8},
                          {0.8, 0.12, 24}, {0.45, 0.12, 12}, {0.62, 0.12, 20}, {0.15, 0.12, 6}};
    std::vector<TestBump> out;
    for (const auto& rg : rings) {
        for (int k = 0; k < rg.n; ++k) {
            const double ang = 2.0 * std::numbers::pi * (k + 0.5 * (rg.n % 2 == 0)) / rg.n;
            out.push_back({disc.center + rg.ring * disc.radius * Vec2(std::cos(ang), std::sin(ang)),
                           rg.bump * disc.radius});
        }
    }
    if (static_cast<int>(out.size()) < count) throw InputError("bump_bank: at most " + std::to_string(out.size()) + " bumps");
    out.resize(count);
    return out;
}

namespace {

// Polar tensor quadrature over the disc (c, rho) around the origin. fn(z, weight) is
// called at every node; radial pieces split at the breaks and at max_piece.
template <typename Fn>
void polar_disc_quadrature(const Vec2& c, double rho, const RadialBreaks& breaks, int order, double max_piece,
                           int angular, Fn&& fn) {
    const double dc = c.norm();
    if (!(dc > rho)) throw InputError("polar quadrature: disc must not contain the origin");
    const double ra = dc - rho, rb = dc + rho;
    const double thc = std::atan2(c.y(), c.x());
    std::vector<double> cuts{ra};
    if (breaks)
        for (double b : breaks(ra, rb))
            if (b > ra && b < rb) cuts.push_back(b);
    cuts.push_back(rb);
    std::sort(cuts.begin(), cuts.end());
    static thread_local std::map<int, GaussRule> cache;
    auto rule_for = [&](int n) -> const GaussRule& {
        auto it = cache.find(n);
        if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
        return it->second;
    };
    const GaussRule& rr = rule_for(order);
    const GaussRule& ra_rule = rule_for(angular);
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double a0 = cuts[p], b0 = cuts[p + 1];
        if (b0 <= a0) continue;
        const int sub = std::max(1, static_cast<int>(std::ceil((b0 - a0) / max_piece)));
        for (int s = 0; s < sub; ++s) {
            const double a = a0 + (b0 - a0) * s / sub, b = a0 + (b0 - a0) * (s + 1) / sub;
            for (std::size_t i = 0; i < rr.nodes.size(); ++i) {
                const double r = 0.5 * (a + b) + 0.5 * (b - a) * rr.nodes[i];
                const double wr = 0.5 * (b - a) * rr.weights[i];
                const double cosa = std::clamp((r * r + dc * dc - rho * rho) / (2.0 * r * dc), -1.0, 1.0);
                const double alpha = std::acos(cosa);
                if (alpha <= 0.0) continue;
                for (std::size_t j = 0; j < ra_rule.nodes.size(); ++j) {
                    const double th = thc + alpha * ra_rule.nodes[j];
                    const double w = wr * alpha * ra_rule.weights[j] * r;
                    fn(Vec2(r * std::cos(th), r * std::sin(th)), w);
                }
            }
        }
    }
}

RadialBreaks cantor_breaks(int level) {
    auto bp = std::make_shared<std::vector<double>>(CantorProfile(level).breakpoints());
    return [bp](double ra, double rb) {
        std::vector<double> out;
        const double sa = 1.0 / rb, sb = 1.0 / ra;
        for (double k = std::floor(sa); k <= std::floor(sb); k += 1.0) {
            const auto lo = std::lower_bound(bp->begin(), bp->end(), sa - k);
            const auto hi = std::upper_bound(bp->begin(), bp->end(), sb - k);
            for (auto it = lo; it != hi; ++it) out.push_back(1.0 / (*it + k));
        }
        return out;
    };
}

}  // namespace

WeakResidualReport weak_divergence_residual(const PlanarField& v, const RadialBreaks& breaks,
                                            const std::vector<TestBump>& bank, int order, double max_piece,
                                            int angular) {
    if (bank.empty()) throw InputError("weak_divergence_residual: empty test bank");
    WeakResidualReport rep;
    for (const auto& b : bank) {
        double pairing = 0.0, norm1 = 0.0;
        polar_disc_quadrature(b.center, b.radius, breaks, order, max_piece, angular, [&](const Vec2& z, double w) {
            const Vec2 g = b.grad(z);
            pairing += w * v(z).dot(g);
            norm1 += w * g.norm();
        });
        rep.per_bump.push_back(std::abs(pairing) / norm1);
        rep.max_residual = std::max(rep.max_residual, rep.per_bump.back());
    }
    return rep;
}

WeakResidualReport cantor_weak_residual(int level, const Disc& disc, int count) {
    const CantorProfile prof(level);
    const PlanarField v = [&prof](const Vec2& z) {
        const double r = z.norm();
        const Vec2 perp(-z.y(), z.x());
        return Vec2(perp / (r * r) + prof.h(1.0 / r) * perp / r);
    };
    return weak_divergence_residual(v, cantor_breaks(level), bump_bank(disc, count), 4, 2e-3, 48);
}

std::vector<BlowupRow> sobolev_blowup_diagnostic(const std::vector<int>& levels, const Disc& disc, int directions,
                                                 int angular) {
    if (levels.empty()) throw InputError("sobolev_blowup_diagnostic: no levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1]) throw InputError("sobolev_blowup_diagnostic: levels must increase");
    if (directions < 1) throw InputError("sobolev_blowup_diagnostic: need >= 1 direction");
    std::vector<Vec2> dirs;
    for (int k = 0; k < directions; ++k) {
        const double a = std::numbers::pi * k / directions;
        dirs.emplace_back(std::cos(a), std::sin(a));
    }
    std::vector<BlowupRow> table;
    for (int level : levels) {
        const CantorProfile prof(level);
        std::vector<double> acc(directions, 0.0), smooth(directions, 0.0);
        double sq = 0.0;
        polar_disc_quadrature(disc.center, disc.radius, cantor_breaks(level), 4, 2e-3, angular,
                              [&](const Vec2& z, double w) {
                                  const double x = z.x(), y = z.y(), r2 = z.squaredNorm(), r = std::sqrt(r2);
                                  const Mat2 dw = ArctanSolution::d2u(z);
                                  Mat2 dg;
                                  dg << x * y, -x * x, y * y, -x * y;
                                  dg /= r2 * r;
                                  const double s = 1.0 / r;
                                  const Vec2 g(-y / r, x / r);
                                  const Mat2 dv = dw + prof.h(s) * dg + prof.h_prime(s) * g * (-z / (r2 * r)).transpose();
                                  sq += w * dv.squaredNorm();
                                  for (int k = 0; k < directions; ++k) {
                                      acc[k] += w * (dv * dirs[k]).norm();
                                      smooth[k] += w * (dw * dirs[k]).norm();
                                  }
                              });
        BlowupRow row;
        row.level = level;
        row.w11 = *std::max_element(acc.begin(), acc.end());
        row.smooth_w11 = *std::max_element(smooth.begin(), smooth.end());
        row.w12 = std::sqrt(sq);
        table.push_back(row);
    }
    return table;
}

std::string export_planar_field(const PlanarField& v, const Disc& disc, int n) {
    if (n < 2) throw InputError("export_planar_field: need n >= 2");
    std::ostringstream os;
    os << std::setprecision(17);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 z = disc.center + disc.radius * Vec2(-1.0 + 2.0 * j / (n - 1), -1.0 + 2.0 * i / (n - 1));
            const Vec2 val = v(z);
            os << z.x() << ' ' << z.y() << ' ' << val.x() << ' ' << val.y() << '\n';
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace quc
