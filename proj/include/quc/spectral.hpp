#pragma once

// Periodic FFT engine on the 2pi-torus: Riesz transforms, the div-curl resolvent,
// the L^2 div-curl identity and its cutoff version, L^m norms, and the Cordes
// threshold calculators.

#include "quc/common.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace quc {

using CVector = Eigen::VectorXcd;

/// Uniform grid of n^N points on [0, 2pi)^N; flat index i_0 + n i_1 + n^2 i_2.
class PeriodicGrid {
public:
    PeriodicGrid(int dim, int n);

    int dim() const { return dim_; }
    int n() const { return n_; }
    Eigen::Index size() const { return size_; }
    double spacing() const;
    double cell_volume() const;
    /// (2pi)^N
    double volume() const;

    /// Signed wavenumber of index i along one axis; the Nyquist index n/2 maps to 0
    /// and is flagged by is_nyquist.
    int wavenumber(int i) const;
    bool is_nyquist(int i) const { return i == n_ / 2; }
    /// Per-axis indices of a flat index.
    std::vector<int> multi_index(Eigen::Index flat) const;
    Vector point(Eigen::Index flat) const;

    bool operator==(const PeriodicGrid& o) const { return dim_ == o.dim_ && n_ == o.n_; }

private:
    int dim_;
    int n_;
    Eigen::Index size_;
};

/// Physical-space fields are lists of component arrays of length grid.size().
using GridField = std::vector<Vector>;

enum class FieldKind { Scalar, Vector, Skew, Matrix };

/// Number of stored components: 1, N, N(N-1)/2, N^2.
int component_count(FieldKind kind, int dim);

/// Fourier coefficients per component. Skew fields store the entries (k, j), k < j, in
/// lexicographic order; matrix fields store (k, h) row-major, with (k, h) = D_h V_k for
/// gradients.
struct SpectralField {
    PeriodicGrid grid;
    FieldKind kind;
    std::vector<CVector> coeffs;
    std::vector<bool> zero_mean;

    SpectralField(PeriodicGrid g, FieldKind k);
};

SpectralField to_spectral(const PeriodicGrid& grid, FieldKind kind, const GridField& physical);
GridField to_physical(const SpectralField& field);
/// max over coefficients of |c(xi) - conj(c(-xi))| relative to the largest coefficient.
double hermitian_defect(const SpectralField& field);

/// Index of the skew entry (k, j), k < j.
int skew_index(int k, int j, int dim);
/// Expands a skew field to its full N x N matrix (row-major, G_jk = -G_kj).
GridField skew_to_full(const GridField& skew, int dim);

/// Multiplies by the symbol -i xi_j / |xi|; the zero mode and Nyquist modes are annihilated.
SpectralField riesz_apply(int axis, const SpectralField& u);
/// Spectral partial derivative (symbol i xi_j), Nyquist modes annihilated.
SpectralField spectral_derivative(int axis, const SpectralField& u);

/// DV as a matrix field with (k, h) = D_h V_k.
SpectralField gradient_of(const SpectralField& v);
SpectralField divergence_of(const SpectralField& v);
/// curl_kj V = D_j V_k - D_k V_j, stored as a skew field.
SpectralField curl_of(const SpectralField& v);

/// DV of the mean-free solution of Div V = f, curl V = G, via
/// D_h V_k = -R_h R_k f - sum_j R_h R_j G_kj.
SpectralField divcurl_reconstruct(const SpectralField& f, const SpectralField& g);

/// |int |DV|^2 - (1/2 int |curl V|^2 + int (Div V)^2)| / int |DV|^2 (0 for V = 0).
double divcurl_identity_residual(const SpectralField& v);

/// Radial cutoff on the torus: phi = 1 for |x - c| <= r_in, C-infinity transition to 0
/// at r_out. Support must stay strictly inside the fundamental cell.
struct Cutoff {
    Vector center;
    double r_in = 0.5;
    double r_out = 2.5;

    double phi(const Vector& x) const;
    /// phi^2, its gradient and Hessian.
    double phi2(const Vector& x, Vector* grad = nullptr, Matrix* hess = nullptr) const;
};

struct CutoffIdentityReport {
    double lhs = 0;           ///< int phi^2 |DV|^2
    double curl_term = 0;     ///< 1/2 int phi^2 |curl V|^2
    double div_term = 0;      ///< int phi^2 (Div V)^2
    double transport = 0;     ///< 2 int (D phi^2, V) Div V
    double hessian_term = 0;  ///< int (D^2 phi^2, V (x) V)
    double imbalance = 0;     ///< |lhs - rhs| / max(lhs, tiny)
};

CutoffIdentityReport cutoff_identity_check(const SpectralField& v, const Cutoff& cutoff);

/// (int |M(x)|^m dx)^(1/m), |.| the Euclidean norm over all components, midpoint rule.
/// m in (0, 1) is accepted (positively 1-homogeneous quasi-norm).
double lm_matrix_norm(const PeriodicGrid& grid, const GridField& components, double m);

struct LmBoundReport {
    double m = 0;
    double lhs = 0;   ///< ||DV||_m
    double div_norm = 0;
    double curl_norm = 0;
    double rhs = 0;   ///< N^2 (mhat - 1) (||Div V||_m + ||curl V||_m)
    bool holds = false;
};

/// The curl norm uses the full N x N curl matrix.
LmBoundReport verify_lm_bound(const SpectralField& v, double m);

double conjugate_max(double m);  ///< mhat = max{m, m/(m-1)}

/// K0 = 1 / (1 - 1/(sqrt(2) N^2 (mhat - 1))).
double cordes_K0(int dim, double m);

struct CordesWindow {
    double lower = 4.0 / 3.0;  ///< mbar' < 2
    double upper = 4.0;        ///< mbar > 2
};

/// Default endpoint bound 2 sqrt(2) N^2 (mhat - 1) for the resolvent T(f, G) = DV.
double certified_T_bound(int dim, double m);

/// Largest delta with (1 + eta(m)) (1 - 1/K) < 1 for |m - 2| <= delta, where
/// eta(m) = T^theta(m) - 1 and theta interpolates between 2 and the window endpoint on
/// the same side. t_lower / t_upper are endpoint bounds (certified defaults).
double cordes_delta0(double k, int dim, const CordesWindow& window = {},
                     std::optional<double> t_lower = std::nullopt,
                     std::optional<double> t_upper = std::nullopt);

/// delta0 with endpoint norms replaced by the randomized probe (a lower bound, so the
/// result can only be larger than the certified one).
double cordes_delta0_empirical(double k, int dim, const CordesWindow& window, int n, int trials,
                               std::uint64_t seed);

/// max over random band-limited (f, G) of ||T(f, G)||_m / ||(f, G)||_m with
/// T(f, G) = DV for Div V = f, curl V = sqrt(2) G; |(f, G)|^2 = f^2 + |G|^2.
double estimate_T_norm(const PeriodicGrid& grid, double m, int trials, std::uint64_t seed);

/// Random real mean-zero vector field with modes |xi|_inf <= kmax and amplitudes
/// decaying like (1 + |xi|^2)^-1.
SpectralField random_band_limited_vector(const PeriodicGrid& grid, std::uint64_t seed, int kmax = 6);
SpectralField random_band_limited_scalar(const PeriodicGrid& grid, std::uint64_t seed, int kmax = 6);

/// L^2 norm of a field over all components (midpoint rule on the physical values).
double l2_norm(const SpectralField& field);

/// Whitespace-separated "x_1 ... x_N value" lines for one component (2-D: blank line
/// between rows for gnuplot).
std::string export_grid_text(const PeriodicGrid& grid, const Vector& values);

}  // namespace quc
