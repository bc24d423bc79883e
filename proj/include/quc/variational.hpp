#pragma once

// Q1 finite elements on [-L, L]^N for J(w) = int F(Dw) + f w with Dirichlet data,
// a mollify-and-shift regularization cascade solved by damped Newton, the stress
// field V = DF(Du), and localized regularity measurements.

#include "quc/common.hpp"
#include "quc/integrand.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace quc {

using ScalarFn = std::function<double(const Vector&)>;

struct ProblemSpec {
    explicit ProblemSpec(Integrand f);

    int dim = 2;
    double half_width = 1.0;  ///< domain [-L, L]^N
    int n = 32;               ///< cells per axis
    ScalarFn boundary;        ///< Dirichlet data g (also the initial interior guess)
    ScalarFn source;          ///< f
    Integrand integrand;
    double m = 2.0;           ///< Lebesgue exponent attached to f

    void validate() const;
    double spacing() const { return 2.0 * half_width / n; }
    Eigen::Index nodes_per_axis() const { return n + 1; }
    Eigen::Index node_count() const;
    Eigen::Index cell_count() const;
    Vector node(Eigen::Index flat) const;
    Vector cell_center(Eigen::Index flat) const;
    bool on_boundary(Eigen::Index node_flat) const;
    /// Nodal values of g everywhere (the boundary-data extension).
    Vector boundary_extension() const;
};

struct Stage {
    double eps = 0.0;  ///< mollification radius (0: none)
    double mu = 0.0;   ///< quadratic shift
};

struct RegularizationSchedule {
    std::vector<Stage> stages;

    /// eps_n = eps0 4^-k, mu_n = mu0 100^-k for k < count, then the unregularized stage.
    static RegularizationSchedule geometric(double eps0, double mu0, int count);
    static RegularizationSchedule plain();  ///< a single (0, 0) stage
};

struct StageRecord {
    Stage stage;
    int iterations = 0;
    double energy = 0;           ///< J_n(v_n)
    double exact_energy = 0;     ///< J(v_n) with the unregularized integrand
    double gradient_norm = 0;    ///< max |dJ_n/du_i| / h^N
    double lipschitz = 0;        ///< A_n = max |Dv_n| at quadrature points
    double coupling = 0;         ///< mu_n^(p-1) A_n^(2-p)
    bool energy_monotone = true; ///< accepted Newton steps never increased J_n
    std::vector<double> energy_trace;
};

struct DiscreteSolution {
    ProblemSpec spec;
    Vector u;                  ///< nodal values
    double energy = 0;         ///< J(u), unregularized
    double initial_energy = 0; ///< J of the boundary-data extension
    double gradient_norm = 0;  ///< final-stage first-order residual density
    double coupling_exponent = 2;
    std::vector<StageRecord> stages;
};

struct SolverOptions {
    double tol = 1e-9;       ///< on max |dJ/du_i| / h^N
    int max_newton = 200;
    const Vector* initial = nullptr;  ///< warm start (boundary values are overwritten with g)
};

/// Gauss quadrature (2^N points per cell) of F(Dw) plus trapezoid-node quadrature of f w.
double assemble_energy(const ProblemSpec& spec, const Vector& w);
/// Same with an arbitrary integrand in place of spec.integrand.
double assemble_energy(const ProblemSpec& spec, const Integrand& f, const Vector& w);

/// Gradient of the discrete energy with respect to all nodal values.
Vector energy_gradient(const ProblemSpec& spec, const Integrand& f, const Vector& w);

DiscreteSolution minimize(const ProblemSpec& spec, const RegularizationSchedule& schedule,
                          const SolverOptions& options = {});

/// Nodal interpolation of the coarse Q1 solution onto the fine grid (boundary set to g).
Vector prolongate(const DiscreteSolution& coarse, const ProblemSpec& fine);

/// Du at cell centers, N x cells.
Matrix cell_gradients(const ProblemSpec& spec, const Vector& u);
/// V = DF(Du) at cell centers, N x cells.
Matrix stress_field(const DiscreteSolution& sol);

/// max over Q1 hat functions of spacing `test_cells` cells of
/// |int (V, D phi) + int f phi| / ||phi||_{W^{1,p}}; p = 2 when p_norm <= 0.
double euler_lagrange_residual(const DiscreteSolution& sol, int test_cells = 1, double p_norm = 0.0);
double euler_lagrange_residual(const ProblemSpec& spec, const Vector& w, int test_cells = 1, double p_norm = 0.0);

/// (int |w - u|^p + |Dw - Du|^p)^(1/p) with 3^N Gauss points per cell.
double w1p_error(const ProblemSpec& spec, const Vector& w, const ScalarFn& u_exact,
                 const std::function<Vector(const Vector&)>& du_exact, double p);

struct Ball {
    Vector center;
    double radius = 0.25;
};

struct RegularityReport {
    double m = 2, theta = 1;
    double v_lm_b = 0;        ///< ||V||_{L^m(B)}
    double dv_lm_b = 0;       ///< ||DV||_{L^m(B)} (forward differences)
    double v_w1m_b = 0;       ///< (v_lm_b^m + dv_lm_b^m)^(1/m)
    double f_lm_2b = 0;       ///< ||f||_{L^m(2B)}
    double v_ltheta_2b = 0;   ///< ||V||_{L^theta(2B)}
    double c_meas = 0;        ///< v_w1m_b / (f_lm_2b + v_ltheta_2b)
};

/// theta defaults to min{p/(q-1), 1} from the declared K (1 when undeclared).
RegularityReport sobolev_report(const DiscreteSolution& sol, const Ball& b, double m,
                                std::optional<double> theta = std::nullopt);

/// True when C_meas grows by more than 10% at each of the last two refinements.
bool c_meas_grows(const std::vector<double>& c_meas_by_level);

struct CaccioppoliReport {
    double r = 0, s = 0, big_r = 0;
    double lhs = 0;           ///< int_{B_r} |DV|^2
    double annulus = 0;       ///< int_{B_s \ B_r} |V|^2
    double source = 0;        ///< int_{B_2R} f^2
    double c_k = 1;           ///< 1 / (1 - (1 - 1/K)^2)
    double c_empirical = 0;   ///< lhs / (annulus / (s - r)^2 + source)
    bool holds_with_c_k = false;
};

CaccioppoliReport caccioppoli_check(const DiscreteSolution& sol, double r, double s, double big_r,
                                    const Vector& center);

}  // namespace quc
