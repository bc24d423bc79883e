#pragma once

// Special solutions and counterexamples in the plane: u = arctan(y/x) solves
// Div DF(Du) = 0 for every radial F, and the truncated-Cantor integrand whose stress
// is divergence free but loses Sobolev regularity as the level grows.

#include "quc/common.hpp"
#include "quc/integrand.hpp"

#include <functional>
#include <string>
#include <vector>

namespace quc {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct Disc {
    Vec2 center{1.5, 0.0};
    double radius = 0.4;
};

/// u(x, y) = arctan(y/x) on a disc in the right half-plane.
class ArctanSolution {
public:
    explicit ArctanSolution(Disc disc = {});
    const Disc& disc() const { return disc_; }
    static double u(const Vec2& z);
    /// z^perp / |z|^2 with z^perp = (-y, x).
    static Vec2 du(const Vec2& z);
    /// |z|^-4 [[2xy, y^2 - x^2], [y^2 - x^2, -2xy]].
    static Mat2 d2u(const Vec2& z);

private:
    Disc disc_;
};

/// Radial F(w) = G(|w|) described by G'(t) and G''(t).
struct RadialProfile {
    std::string name;
    std::function<double(double)> g1;
    std::function<double(double)> g2;
};

RadialProfile power_radial_profile(double p);  ///< G = t^p / p
/// G = t^2/2 + (H_L * rho_eps)(t): h_L mollified in one variable, G'' by central differences.
RadialProfile smoothed_cantor_profile(int level, double eps);

/// trace(D^2F(Du(z)) D^2u(z)) with D^2F = G'' what (x) what + G'/|w| (I - what (x) what).
double trace_check_radial(const RadialProfile& f, const Vec2& z);
/// Same, with D^2F taken from the integrand's Hessian.
double trace_check_radial(const Integrand& f, const Vec2& z);

/// z^perp/|z|^2 + h_L(1/|z|) z^perp/|z|; DomainError unless x > 0.
Vec2 cantor_stress(const Vec2& z, int level);

/// C-infinity bump exp(1 - 1/(1 - |x - c|^2/rho^2)) supported in the closed disc (c, rho).
struct TestBump {
    Vec2 center;
    double radius;
    double phi(const Vec2& x) const;
    Vec2 grad(const Vec2& x) const;
};

/// At least `count` bumps with supports inside the disc, on rings at three radii.
std::vector<TestBump> bump_bank(const Disc& disc, int count = 60);

using PlanarField = std::function<Vec2(const Vec2&)>;
/// Radii in (a, b) where the field loses smoothness (may be empty).
using RadialBreaks = std::function<std::vector<double>(double, double)>;

struct WeakResidualReport {
    double max_residual = 0;
    std::vector<double> per_bump;
};

/// max over bumps of |int (V, D phi)| / ||D phi||_1 by polar tensor Gauss quadrature
/// around the origin, split at the field's radial breakpoints. `order` is the number of
/// radial Gauss points per piece; pieces wider than max_piece are subdivided.
WeakResidualReport weak_divergence_residual(const PlanarField& v, const RadialBreaks& breaks,
                                            const std::vector<TestBump>& bank, int order = 6,
                                            double max_piece = 2e-3, int angular = 64);

/// Residual of the level-L Cantor stress, split at the kinks of h_L(1/|z|).
WeakResidualReport cantor_weak_residual(int level, const Disc& disc = {}, int count = 60);

struct BlowupRow {
    int level = 0;
    double w11 = 0;        ///< sup_e int_B |d_e V_L| (difference quotient at delta -> 0)
    double w12 = 0;        ///< (int_B |DV_L|^2)^(1/2)
    double smooth_w11 = 0; ///< the same W^{1,1} quotient for z^perp/|z|^2
};

/// Difference-quotient table over the given levels (directions: `directions` unit
/// vectors in [0, pi)).
std::vector<BlowupRow> sobolev_blowup_diagnostic(const std::vector<int>& levels, const Disc& disc = {},
                                                 int directions = 16, int angular = 256);

/// Samples of V on an n x n grid over the disc's bounding box ("x y V1 V2" lines).
std::string export_planar_field(const PlanarField& v, const Disc& disc, int n);

}  // namespace quc
