#pragma once

// Radial reduction of Div(a(|Du|) Du) = f: the flux T(r) = a(|v'|) v' satisfies
// r^(N-1) T(r) = int_{r0}^r s^(N-1) f(s) ds + c, so v' follows from a scalar monotone
// inversion and v from one more quadrature. Also the C^{p'} diagnostics.

#include "quc/common.hpp"
#include "quc/integrand.hpp"

#include <functional>
#include <string>
#include <vector>

namespace quc {

/// f(r) = value * r^-beta ("const" when beta = 0, "power" otherwise) or a custom callable.
struct RadialSource {
    std::string kind = "const";
    double value = 1.0;
    double beta = 0.0;
    std::function<double(double)> custom;

    double operator()(double r) const;
    static RadialSource constant(double value);
    static RadialSource power(double value, double beta);
};

enum class RadialGridKind { Geometric, Uniform };

struct RadialProblem {
    int dim = 2;
    UhlenbeckProfile profile = power_profile(2.0);
    RadialSource source;
    double r0 = 0.0;
    double radius = 1.0;
    double flux_c = 0.0;          ///< coefficient of the homogeneous mode c r^(1-N)
    double boundary_value = 0.0;  ///< v(radius)
    RadialGridKind grid = RadialGridKind::Geometric;
    int per_octave = 16;   ///< geometric grid density
    int octaves = 48;      ///< geometric grid spans radius 2^-octaves .. radius (plus r0)
    int uniform_points = 2049;
};

struct RadialSolution {
    RadialProblem problem;
    Vector r;
    Vector v;
    Vector dv;      ///< v'
    Vector flux;    ///< T = a(|v'|) v'
    Vector h;       ///< T / r, V(x) = h(|x|) x
    Vector moment;  ///< int_{r0}^r s^(N-1) f ds

    /// Flux and v' at an arbitrary radius by quadrature from the nearest tabulated node.
    double flux_at(double r) const;
    double dv_at(double r) const;
    /// v at an arbitrary radius: nearest lower node plus adaptive quadrature of v'.
    double v_at(double r) const;
    /// max over the grid of |r^(N-1) T - moment - c|.
    double flux_identity_defect() const;
};

/// Solves a(|t|) t = T for t (bracketing bisection then Newton; explicit root for powers).
double invert_flux(const UhlenbeckProfile& profile, double flux);

RadialSolution solve_radial(const RadialProblem& problem);

struct RadialStress {
    std::vector<Vector> x;
    std::vector<Vector> v;   ///< V(x) = h(|x|) x
    std::vector<Matrix> dv;  ///< h I + (f - N h) xhat (x) xhat
};

/// V and DV at the given points; points outside [r0, radius] are rejected.
RadialStress stress_at(const RadialSolution& sol, const std::vector<Vector>& points);
/// Stress on the points of an n^N box grid over [-radius, radius]^N with r0 <= |x| <= radius.
RadialStress stress_of(const RadialSolution& sol, int n);
/// max |DV - DV^t| over the samples.
double stress_curl_defect(const RadialStress& s);

/// Psi(y) = |y|^((2-p)/(p-1)) y, the inverse of z -> |z|^(p-2) z.
Vector psi_map(const Vector& y, double p);

struct HolderFit {
    double exponent = 1;
    double ci_low = 1, ci_high = 1;  ///< 95% interval for the slope
    int scales = 0;
    bool zero_modulus = false;
    std::vector<double> deltas;
    std::vector<double> moduli;
};

/// Slope of log sup-modulus of continuity against log scale at dyadic scales
/// window_hi 2^-k >= window_lo. Requires >= min_scales scales.
HolderFit holder_exponent(const Vector& r, const Vector& values, double window_lo, double window_hi,
                          int min_scales = 32);
/// Default window: [2 r_1, R / 8], r_1 the smallest positive sample radius.
HolderFit holder_exponent(const Vector& r, const Vector& values);

struct CpPrimeReport {
    double p = 2, p_conj = 2, m = 2;
    double du_exponent = 0;   ///< Hoelder exponent of v'
    double ci_low = 0, ci_high = 0;
    double u_exponent = 0;    ///< 1 + du_exponent
    double target = 0;        ///< min{p', 2}
    double v_w1m = 0;         ///< ||V||_{W^{1,m}(B_{R/2})}
    double f_lm = 0;          ///< ||f||_{L^m(B_{2R})}
    double v_l1 = 0;          ///< ||V||_{L^1(B_{2R})}
    double ratio = 0;         ///< v_w1m / (f_lm + v_l1)
    bool holds = false;       ///< u_exponent >= target - 0.1 (checked for bounded f)
};

/// Solves on B_{2R} (R = 1) with a(t) = t^(p-2) and reports the regularity diagnostics.
CpPrimeReport cp_prime_verify(double p, const RadialSource& source, double m, int dim = 2,
                              int per_octave = 16);

struct AlphaP {
    double m_p = 0;        ///< 1 / (2 N^2 |p - 2|), infinity at p = 2
    bool m_p_infinite = false;
    double alpha_p = 0;
    bool admissible = false;      ///< |p - 2| < 1 / (2 N^3)
    bool m_p_exceeds_n = false;   ///< m_p > N
    double cordes_lhs = 0;        ///< sqrt(2) N^2 (m_p - 1) (1 - 1/K_p)
    bool cordes_holds = false;
};

AlphaP alpha_p(int dim, double p);

/// Cylindrical lift: a k-dimensional radial solution seen as a function of the first
/// k coordinates of x in R^N; V = (h(|x'|) x', 0).
RadialStress cylindrical_stress(const RadialSolution& sol, int ambient_dim, const std::vector<Vector>& points);

/// int_{B_rho} g(|x|) dx = |S^(N-1)| int_0^rho g(r) r^(N-1) dr.
double sphere_area(int dim);

}  // namespace quc
