#pragma once

// Convex integrands F: R^N -> R with value / gradient / Hessian evaluators,
// quasiuniform-convexity diagnostics (lambda_max(D^2F) <= K lambda_min(D^2F)),
// and the regularization toolkit: mollification, Moreau-Yosida, local extension.

#include "quc/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace quc {

enum class HessianKind { Analytic, FiniteDifference };

/// Evaluator interface implemented by every concrete integrand.
class IntegrandModel {
public:
    virtual ~IntegrandModel() = default;
    virtual int dim() const = 0;
    virtual double value(const Vector& z) const = 0;
    virtual void gradient(const Vector& z, Vector& out) const = 0;
    /// Default: central differences of the gradient, step eps^(1/3) (1 + |z|).
    virtual void hessian(const Vector& z, Matrix& out) const;
    virtual HessianKind hessian_kind() const { return HessianKind::FiniteDifference; }
};

struct IntegrandInfo {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
    std::optional<double> declared_k;
    Vector minimizer;
    /// Points where D^2F is undefined or degenerate (a null set, e.g. z = center for powers).
    std::vector<Vector> degenerate_points;
};

class Integrand {
public:
    Integrand(std::shared_ptr<const IntegrandModel> model, IntegrandInfo info);

    int dim() const { return model_->dim(); }
    double value(const Vector& z) const { return model_->value(z); }
    Vector gradient(const Vector& z) const;
    Matrix hessian(const Vector& z) const;
    void gradient(const Vector& z, Vector& out) const { model_->gradient(z, out); }
    void hessian(const Vector& z, Matrix& out) const { model_->hessian(z, out); }

    HessianKind hessian_kind() const { return model_->hessian_kind(); }
    const IntegrandInfo& info() const { return info_; }
    const std::string& name() const { return info_.name; }
    std::optional<double> declared_k() const { return info_.declared_k; }
    /// Lower growth exponent p = 1 + 1/K (requires a declared K).
    std::optional<double> growth_p() const;
    /// Upper growth exponent q = 1 + K (requires a declared K).
    std::optional<double> growth_q() const;
    const Vector& minimizer() const { return info_.minimizer; }
    const std::shared_ptr<const IntegrandModel>& model() const { return model_; }

    /// {"name": ..., params...}; round-trips through make_integrand when the
    /// integrand came from the gallery.
    nlohmann::json descriptor() const;

private:
    std::shared_ptr<const IntegrandModel> model_;
    IntegrandInfo info_;
};

// ---------------------------------------------------------------------------
// Gallery

/// |z - center|^p / p.
Integrand power_integrand(int dim, double p, std::optional<Vector> center = std::nullopt);
/// |z - z0|^p + |z + z0|^p.
Integrand two_center_integrand(double p, const Vector& z0);
/// |z|^p / p + |z_1|^q / q (not globally quasiuniformly convex for q > p).
Integrand mixed_integrand(int dim, double p, double q);
/// sum_i |z_i|^p (orthotropic control case, not quasiuniformly convex for p != 2).
Integrand orthotropic_integrand(int dim, double p);
/// G(H(z)) with G(t) = t^p / p and H(z) = sqrt(z^t A z) + b.z; Hessian by finite differences.
Integrand anisotropic_integrand(double p, const Matrix& a, const Vector& b);
/// |w|^2/2 + H_L(|w|) with H_L the antiderivative of the level-L Cantor staircase.
Integrand cantor_integrand(int dim, int level);

/// Radial profile a(t) of an Uhlenbeck-structure equation Div(a(|Du|) Du) = f.
struct UhlenbeckProfile {
    std::string kind;  ///< "power" or "regularized_power" for gallery profiles, free text otherwise
    double p = 2;
    std::function<double(double)> a;
    std::function<double(double)> a_prime;
    /// G(t) = int_0^t s a(s) ds when known in closed form.
    std::function<double(double)> primitive;
};

/// a(t) = t^(p-2).
UhlenbeckProfile power_profile(double p);
/// a(t) = (1 + t^2)^((p-2)/2).
UhlenbeckProfile regularized_power_profile(double p);

/// F(z) = int_0^|z| t a(t) dt, D^2F = a I + |z| a' zhat (x) zhat.
Integrand uhlenbeck_integrand(int dim, const UhlenbeckProfile& profile);

/// F1 + F2; declared K = max of the two when both are declared.
Integrand sum_integrand(const Integrand& f1, const Integrand& f2);
/// F + mu |z|^2 / 2.
Integrand add_quadratic(const Integrand& f, double mu);

/// Build from a JSON descriptor {"name": ..., params}. Unknown names or keys are rejected.
Integrand make_integrand(const nlohmann::json& descriptor);

// ---------------------------------------------------------------------------
// Diagnostics

/// lambda_max / lambda_min of D^2F(z); +infinity when the Hessian is degenerate.
double eigen_ratio_at(const Integrand& f, const Vector& z);

/// Point cloud over the annulus r0 <= |z| <= r1: log-spaced shells times directions.
struct AnnulusSampler {
    double r0 = 1e-2;
    double r1 = 1e2;
    int shells = 40;
    int directions = 32;
    std::uint64_t seed = 1;
    Vector center;  ///< empty: origin

    std::vector<Vector> points(int dim) const;
};

/// Largest sampled eigen ratio, skipping the integrand's degenerate points.
double estimate_k(const Integrand& f, const AnnulusSampler& sampler);

struct GrowthReport {
    double p = 0, q = 0;
    double c_lower = 0;  ///< smallest grid C with C^-1|z|^p - C <= F and C^-1|z|^(p-1) - C <= |DF|
    double c_upper = 0;  ///< smallest grid C with F <= C(|z|^q + 1) and |DF| <= C(|z|^(q-1) + 1)
    double c = 0;        ///< max(c_lower, c_upper)
    bool holds = false;  ///< c <= 1e12
    Vector worst_point;  ///< sample demanding the largest C
};

/// Searches a log grid of C in [1, 1e12] for the (p, q)-growth bounds with p = 1 + 1/K,
/// q = 1 + K. Samples default to log-radial shells from 1e-3 to 1e8.
GrowthReport verify_growth(const Integrand& f, double k, const std::vector<Vector>& samples = {});

// ---------------------------------------------------------------------------
// Regularization

/// F * phi_eps with phi(x) = c_N (1 - |x|^2)^4 on the unit ball, by 8-point tensor
/// Gauss-Legendre quadrature normalized to unit discrete mass.
Integrand mollify(const Integrand& f, double eps);

/// Solves P + delta DF(P) = z by damped Newton on F(P) + |P - z|^2 / (2 delta).
Vector prox_point(const Integrand& f, double delta, const Vector& z);

/// F_delta(z) = min_y F(y) + |y - z|^2 / (2 delta); DF_delta(z) = DF(P(z)),
/// D^2F_delta = D^2F(P) (I + delta D^2F(P))^-1.
Integrand moreau_yosida(const Integrand& f, double delta);

struct ExtensionInfo {
    double radius = 0;
    double sigma = 0;
    double tau = 0;
    double c = 0;       ///< coefficient of (|z| - sigma R)_+^2
    double max_m = 0;   ///< max |M|_2 over the sample grid of B_R
};

/// Convex extension of F (known on B_R) that equals F on B_{sigma R} and grows
/// quadratically outside B_R: eta F + (1 - eta)|z|^2/2 + C (|z| - sigma R)_+^2.
Integrand extend_local(const Integrand& f, double radius, double sigma, double eps_floor,
                       ExtensionInfo* info = nullptr);

struct UhlenbeckIndices {
    double i_a = 0;
    double s_a = 0;
    double k = 1;
    double p = 2;
};

/// inf / sup of t a'(t) / a(t) over 10^3 log-spaced t in [1e-6, 1e6]; K = max{1/(1+i_a), 1+s_a},
/// p = min{2+i_a, (2+s_a)/(1+s_a)}.
UhlenbeckIndices uhlenbeck_indices(const UhlenbeckProfile& profile);

}  // namespace quc
