#include "quc/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace quc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_nd(const PeriodicGrid& grid, CVector& data, bool inverse) {
    Eigen::FFT<double> fft;
    const int n = grid.n();
    std::vector<std::complex<double>> in(n), out(n);
    Eigen::Index stride = 1;
    for (int axis = 0; axis < grid.dim(); ++axis) {
        const Eigen::Index block = stride * n;
        for (Eigen::Index base = 0; base < grid.size(); base += block) {
            for (Eigen::Index off = 0; off < stride; ++off) {
                for (int i = 0; i < n; ++i) in[i] = data(base + off + i * stride);
                if (inverse)
                    fft.inv(out, in);
                else
                    fft.fwd(out, in);
                for (int i = 0; i < n; ++i) data(base + off + i * stride) = out[i];
            }
        }
        stride *= n;
    }
}

// Visits every mode with its wave vector; nyq is true when any axis sits at n/2.
template <typename Fn>
void for_each_mode(const PeriodicGrid& grid, Fn&& fn) {
    const int dim = grid.dim(), n = grid.n();
    std::vector<int> idx(dim, 0);
    Eigen::Vector3d xi = Eigen::Vector3d::Zero();
    for (Eigen::Index flat = 0; flat < grid.size(); ++flat) {
        bool nyq = false;
        for (int a = 0; a < dim; ++a) {
            xi(a) = grid.wavenumber(idx[a]);
            nyq = nyq || grid.is_nyquist(idx[a]);
        }
        fn(flat, xi, nyq);
        for (int a = 0; a < dim; ++a) {
            if (++idx[a] < n) break;
            idx[a] = 0;
        }
    }
}

Eigen::Index mirror_index(const PeriodicGrid& grid, Eigen::Index flat) {
    const auto mi = grid.multi_index(flat);
    Eigen::Index out = 0, stride = 1;
    for (int a = 0; a < grid.dim(); ++a) {
        out += ((grid.n() - mi[a]) % grid.n()) * stride;
        stride *= grid.n();
    }
    return out;
}

void require_kind(const SpectralField& f, FieldKind kind, const char* what) {
    if (f.kind != kind) throw InputError(std::string(what) + ": wrong field kind");
}

double integrate(const PeriodicGrid& grid, const Vector& values) { return values.sum() * grid.cell_volume(); }

}  // namespace

PeriodicGrid::PeriodicGrid(int dim, int n) : dim_(dim), n_(n) {
    if (dim != 2 && dim != 3) throw InputError("PeriodicGrid: dimension must be 2 or 3");
    if (n < 8 || !is_power_of_two(n)) throw InputError("PeriodicGrid: n must be a power of two >= 8");
    size_ = 1;
    for (int a = 0; a < dim; ++a) size_ *= n;
}

double PeriodicGrid::spacing() const { return kTwoPi / n_; }
double PeriodicGrid::cell_volume() const { return std::pow(spacing(), dim_); }
double PeriodicGrid::volume() const { return std::pow(kTwoPi, dim_); }

int PeriodicGrid::wavenumber(int i) const {
    if (i == n_ / 2) return 0;
    return i < n_ / 2 ? i : i - n_;
}

std::vector<int> PeriodicGrid::multi_index(Eigen::Index flat) const {
    std::vector<int> out(dim_);
    for (int a = 0; a < dim_; ++a) {
        out[a] = static_cast<int>(flat % n_);
        flat /= n_;
    }
    return out;
}

Vector PeriodicGrid::point(Eigen::Index flat) const {
    const auto mi = multi_index(flat);
    Vector x(dim_);
    for (int a = 0; a < dim_; ++a) x(a) = mi[a] * spacing();
    return x;
}

int component_count(FieldKind kind, int dim) {
    switch (kind) {
        case FieldKind::Scalar: return 1;
        case FieldKind::Vector: return dim;
        case FieldKind::Skew: return dim * (dim - 1) / 2;
        case FieldKind::Matrix: return dim * dim;
    }
    return 0;
}

SpectralField::SpectralField(PeriodicGrid g, FieldKind k) : grid(g), kind(k) {
    const int c = component_count(kind, grid.dim());
    coeffs.assign(c, CVector::Zero(grid.size()));
    zero_mean.assign(c, true);
}

SpectralField to_spectral(const PeriodicGrid& grid, FieldKind kind, const GridField& physical) {
    SpectralField out(grid, kind);
    if (physical.size() != out.coeffs.size()) throw InputError("to_spectral: component count mismatch");
    for (std::size_t c = 0; c < physical.size(); ++c) {
        if (physical[c].size() != grid.size()) throw InputError("to_spectral: grid size mismatch");
        out.coeffs[c] = physical[c].cast<std::complex<double>>();
        fft_nd(grid, out.coeffs[c], false);
        out.zero_mean[c] = std::abs(out.coeffs[c](0)) <= 1e-12 * (1.0 + out.coeffs[c].cwiseAbs().maxCoeff());
    }
    return out;
}

GridField to_physical(const SpectralField& field) {
    GridField out;
    for (const auto& c : field.coeffs) {
        CVector tmp = c;
        fft_nd(field.grid, tmp, true);
        out.push_back(tmp.real());
    }
    return out;
}

double hermitian_defect(const SpectralField& field) {
    double worst = 0.0, scale = 0.0;
    for (const auto& c : field.coeffs) {
        scale = std::max(scale, c.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < c.size(); ++i)
            worst = std::max(worst, std::abs(c(i) - std::conj(c(mirror_index(field.grid, i)))));
    }
    return scale > 0 ? worst / scale : 0.0;
}

int skew_index(int k, int j, int dim) {
    if (!(0 <= k && k < j && j < dim)) throw InputError("skew_index: need 0 <= k < j < N");
    int idx = 0;
    for (int a = 0; a < k; ++a) idx += dim - 1 - a;
    return idx + (j - k - 1);
}

GridField skew_to_full(const GridField& skew, int dim) {
    if (static_cast<int>(skew.size()) != dim * (dim - 1) / 2) throw InputError("skew_to_full: component count");
    const Eigen::Index sz = skew.empty() ? 0 : skew[0].size();
    GridField full(dim * dim, Vector::Zero(sz));
    for (int k = 0; k < dim; ++k)
        for (int j = k + 1; j < dim; ++j) {
            full[k * dim + j] = skew[skew_index(k, j, dim)];
            full[j * dim + k] = -skew[skew_index(k, j, dim)];
        }
    return full;
}

SpectralField riesz_apply(int axis, const SpectralField& u) {
    require_kind(u, FieldKind::Scalar, "riesz_apply");
    if (axis < 0 || axis >= u.grid.dim()) throw InputError("riesz_apply: axis out of range");
    SpectralField out(u.grid, FieldKind::Scalar);
    const std::complex<double> mi(0.0, -1.0);
    for_each_mode(u.grid, [&](Eigen::Index flat, const Eigen::Vector3d& xi, bool nyq) {
        const double r = xi.norm();
        out.coeffs[0](flat) = (nyq || r == 0.0) ? 0.0 : mi * (xi(axis) / r) * u.coeffs[0](flat);
    });
    return out;
}

SpectralField spectral_derivative(int axis, const SpectralField& u) {
    require_kind(u, FieldKind::Scalar, "spectral_derivative");
    SpectralField out(u.grid, FieldKind::Scalar);
    const std::complex<double> i1(0.0, 1.0);
    for_each_mode(u.grid, [&](Eigen::Index flat, const Eigen::Vector3d& xi, bool nyq) {
        out.coeffs[0](flat) = nyq ? 0.0 : i1 * xi(axis) * u.coeffs[0](flat);
    });
    return out;
}

SpectralField gradient_of(const SpectralField& v) {
    require_kind(v, FieldKind::Vector, "gradient_of");
    const int dim = v.grid.dim();
    SpectralField out(v.grid, FieldKind::Matrix);
    const std::complex<double> i1(0.0, 1.0);
    for_each_mode(v.grid, [&](Eigen::Index flat, const Eigen::Vector3d& xi, bool nyq) {
        for (int k = 0; k < dim; ++k)
            for (int h = 0; h < dim; ++h)
                out.coeffs[k * dim + h](flat) = nyq ? 0.0 : i1 * xi(h) * v.coeffs[k](flat);
    });
    return out;
}

SpectralField divergence_of(const SpectralField& v) {
    require_kind(v, FieldKind::Vector, "divergence_of");
    SpectralField out(v.grid, FieldKind::Scalar);
    const std::complex<double> i1(0.0, 1.0);
    for_each_mode(v.grid, [&](Eigen::Index flat, const Eigen::Vector3d& xi, bool nyq) {
        std::complex<double> acc = 0.0;
        for (int k = 0; k < v.grid.dim(); ++k) acc += i1 * xi(k) * v.coeffs[k](flat);
        out.coeffs[0](flat) = nyq ? 0.0 : acc;
    });
    return out;
}

SpectralField curl_of(const SpectralField& v) {
    require_kind(v, FieldKind::Vector, "curl_of");
    const int dim = v.grid.dim();
    SpectralField out(v.grid, FieldKind::Skew);
    const std::complex<double> i1(0.0, 1.0);
    for_each_mode(v.grid, [&](Eigen::Index flat, const Eigen::Vector3d& xi, bool nyq) {
        for (int k = 0; k < dim; ++k)
            for (int j = k + 1; j < dim; ++j)
                out.coeffs[skew_index(k, j, dim)](flat) =
                    nyq ? 0.0 : i1 * (xi(j) * v.coeffs[k](flat) - xi(k) * v.coeffs[j](flat));
    });
    return out;
}

SpectralField divcurl_reconstruct(const SpectralField& f, const SpectralField& g) {
    require_kind(f, FieldKind::Scalar, "divcurl_reconstruct");
    require_kind(g, FieldKind::Skew, "divcurl_reconstruct");
    if (!(f.grid == g.grid)) throw InputError("divcurl_reconstruct: incompatible grids");
    const int dim = f.grid.dim();
    SpectralField out(f.grid, FieldKind::Matrix);
    auto g_entry = [&](int k, int j, Eigen::Index flat) -> std::complex<double> {
        if (k == j) return 0.0;
        return k < j ? g.coeffs[skew_index(k, j, dim)](flat) : -g.coeffs[skew_index(j, k, dim)](flat);
    };
    // R_h R_k has symbol -xi_h xi_k / |xi|^2
    for_each_mode(f.grid, [&](Eigen::Index flat, const Eigen::Vector3d& xi, bool nyq) {
        const double r2 = xi.squaredNorm();
        for (int k = 0; k < dim; ++k)
            for (int h = 0; h < dim; ++h) {
                std::complex<double> acc = 0.0;
                if (!nyq && r2 > 0.0) {
                    acc = xi(h) * xi(k) / r2 * f.coeffs[0](flat);
                    for (int j = 0; j < dim; ++j) acc += xi(h) * xi(j) / r2 * g_entry(k, j, flat);
                }
                out.coeffs[k * dim + h](flat) = acc;
            }
    });
    return out;
}

double divcurl_identity_residual(const SpectralField& v) {
    require_kind(v, FieldKind::Vector, "divcurl_identity_residual");
    const auto& grid = v.grid;
    const GridField dv = to_physical(gradient_of(v));
    const GridField dvg = to_physical(divergence_of(v));
    const GridField cu = to_physical(curl_of(v));
    double lhs = 0.0, div2 = 0.0, curl2 = 0.0;
    for (const auto& c : dv) lhs += integrate(grid, c.array().square().matrix());
    div2 = integrate(grid, dvg[0].array().square().matrix());
    // |curl|^2 over the full matrix counts each skew entry twice
    for (const auto& c : cu) curl2 += 2.0 * integrate(grid, c.array().square().matrix());
    const double rhs = 0.5 * curl2 + div2;
    if (lhs == 0.0) return std::abs(rhs);
    return std::abs(lhs - rhs) / lhs;
}

namespace {

// Smooth step pieces: g(s) = exp(-1/s) for s > 0 with first and second derivatives.
void smooth_g(double s, double& g, double& g1, double& g2) {
    g = g1 = g2 = 0.0;
    if (s <= 0.0) return;
    g = std::exp(-1.0 / s);
    if (g == 0.0) return;
    const double is = 1.0 / s;
    g1 = g * is * is;
    g2 = g * (is * is * is * is - 2.0 * is * is * is);
}

}  // namespace

double Cutoff::phi(const Vector& x) const {
    const double r = (x - center).norm();
    if (r <= r_in) return 1.0;
    if (r >= r_out) return 0.0;
    const double s = (r - r_in) / (r_out - r_in);
    double a, a1, a2, b, b1, b2;
    smooth_g(1.0 - s, a, a1, a2);
    smooth_g(s, b, b1, b2);
    return a / (a + b);
}

double Cutoff::phi2(const Vector& x, Vector* grad, Matrix* hess) const {
    const int n = static_cast<int>(x.size());
    const Vector d = x - center;
    const double r = d.norm();
    if (grad) grad->setZero(n);
    if (hess) hess->setZero(n, n);
    if (r <= r_in) return 1.0;
    if (r >= r_out) return 0.0;
    const double w = r_out - r_in;
    const double s = (r - r_in) / w;
    double a, a1, a2, b, b1, b2;
    smooth_g(1.0 - s, a, a1, a2);
    smooth_g(s, b, b1, b2);
    // a(s) = g(1 - s): chain rule flips the sign of the first derivative
    a1 = -a1;
    const double den = a + b;
    const double step = a / den;
    const double num1 = a1 * b - a * b1;
    const double step1 = num1 / (den * den);
    const double step2 = (a2 * b - a * b2) / (den * den) - 2.0 * num1 * (a1 + b1) / (den * den * den);
    const double ds = 1.0 / w;
    const double p0 = step * step;
    const double p1 = 2.0 * step * step1 * ds;
    const double p2 = (2.0 * step1 * step1 + 2.0 * step * step2) * ds * ds;
    const Vector u = d / r;
    if (grad) *grad = p1 * u;
    if (hess) *hess = p2 * u * u.transpose() + p1 / r * (Matrix::Identity(n, n) - u * u.transpose());
    return p0;
}

CutoffIdentityReport cutoff_identity_check(const SpectralField& v, const Cutoff& cutoff) {
    require_kind(v, FieldKind::Vector, "cutoff_identity_check");
    const auto& grid = v.grid;
    const int dim = grid.dim();
    if (cutoff.center.size() != dim) throw InputError("cutoff_identity_check: cutoff center dimension");
    if (!(0.0 < cutoff.r_in && cutoff.r_in < cutoff.r_out))
        throw InputError("cutoff_identity_check: need 0 < r_in < r_out");
    for (int a = 0; a < dim; ++a)
        if (!(cutoff.center(a) - cutoff.r_out > 0.0 && cutoff.center(a) + cutoff.r_out < kTwoPi))
            throw InputError("cutoff_identity_check: cutoff support touches the cell boundary");

    const GridField vp = to_physical(v);
    const GridField dv = to_physical(gradient_of(v));
    const GridField dvg = to_physical(divergence_of(v));
    const GridField cu = skew_to_full(to_physical(curl_of(v)), dim);

    CutoffIdentityReport rep;
    Vector grad(dim);
    Matrix hess(dim, dim);
    Vector vv(dim);
    const double dx = grid.cell_volume();
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Vector x = grid.point(i);
        const double w = cutoff.phi2(x, &grad, &hess);
        if (w == 0.0 && grad.isZero(0.0)) continue;
        double dv2 = 0.0, curl2 = 0.0;
        for (const auto& c : dv) dv2 += c(i) * c(i);
        for (const auto& c : cu) curl2 += c(i) * c(i);
        for (int k = 0; k < dim; ++k) vv(k) = vp[k](i);
        const double div = dvg[0](i);
        rep.lhs += w * dv2 * dx;
        rep.curl_term += 0.5 * w * curl2 * dx;
        rep.div_term += w * div * div * dx;
        rep.transport += 2.0 * grad.dot(vv) * div * dx;
        rep.hessian_term += vv.dot(hess * vv) * dx;
    }
    const double rhs = rep.curl_term + rep.div_term + rep.transport + rep.hessian_term;
    rep.imbalance = std::abs(rep.lhs - rhs) / std::max(rep.lhs, 1e-300);
    return rep;
}

double lm_matrix_norm(const PeriodicGrid& grid, const GridField& components, double m) {
    if (!(m > 0.0)) throw InputError("lm_matrix_norm: m must be > 0");
    if (components.empty()) return 0.0;
    Vector sq = Vector::Zero(grid.size());
    for (const auto& c : components) {
        if (c.size() != grid.size()) throw InputError("lm_matrix_norm: grid size mismatch");
        sq += c.array().square().matrix();
    }
    const double total = sq.array().sqrt().pow(m).sum() * grid.cell_volume();
    return std::pow(total, 1.0 / m);
}

LmBoundReport verify_lm_bound(const SpectralField& v, double m) {
    require_kind(v, FieldKind::Vector, "verify_lm_bound");
    if (!(m > 1.0)) throw InputError("verify_lm_bound: m must be > 1");
    const auto& grid = v.grid;
    const int dim = grid.dim();
    LmBoundReport rep;
    rep.m = m;
    rep.lhs = lm_matrix_norm(grid, to_physical(gradient_of(v)), m);
    rep.div_norm = lm_matrix_norm(grid, to_physical(divergence_of(v)), m);
    rep.curl_norm = lm_matrix_norm(grid, skew_to_full(to_physical(curl_of(v)), dim), m);
    rep.rhs = dim * dim * (conjugate_max(m) - 1.0) * (rep.div_norm + rep.curl_norm);
    rep.holds = rep.lhs <= rep.rhs * (1.0 + 1e-12);
    return rep;
}

double conjugate_max(double m) {
    if (!(m > 1.0)) throw InputError("conjugate exponent needs m > 1");
    return std::max(m, m / (m - 1.0));
}

double cordes_K0(int dim, double m) {
    if (dim < 2) throw InputError("cordes_K0: N must be >= 2");
    const double c = std::numbers::sqrt2 * dim * dim * (conjugate_max(m) - 1.0);
    if (!(c > 1.0)) throw InputError("cordes_K0: sqrt(2) N^2 (mhat - 1) must exceed 1");
    return 1.0 / (1.0 - 1.0 / c);
}

double certified_T_bound(int dim, double m) {
    return 2.0 * std::numbers::sqrt2 * dim * dim * (conjugate_max(m) - 1.0);
}

double cordes_delta0(double k, int dim, const CordesWindow& window, std::optional<double> t_lower,
                     std::optional<double> t_upper) {
    if (!(k >= 1.0) || !std::isfinite(k)) throw InputError("cordes_delta0: K must be finite and >= 1");
    if (dim < 2) throw InputError("cordes_delta0: N must be >= 2");
    if (!(window.lower > 1.0 && window.lower < 2.0 && window.upper > 2.0))
        throw InputError("cordes_delta0: window must satisfy 1 < mbar' < 2 < mbar");
    const double tl = t_lower.value_or(certified_T_bound(dim, window.lower));
    const double tu = t_upper.value_or(certified_T_bound(dim, window.upper));
    const double width_up = window.upper - 2.0, width_lo = 2.0 - window.lower;
    if (k == 1.0) return std::min(width_up, width_lo);
    // (1 + eta) e(K) < 1  <=>  theta < ln(K / (K - 1)) / ln T
    const double budget = std::log(k / (k - 1.0));
    auto side = [&](double t, double endpoint, double width) {
        if (!(t > 1.0)) return width;
        const double theta = budget / std::log(t);
        if (theta >= 1.0) return width;
        const double m = 1.0 / ((1.0 - theta) / 2.0 + theta / endpoint);
        return std::abs(m - 2.0);
    };
    return std::min(side(tu, window.upper, width_up), side(tl, window.lower, width_lo));
}

double cordes_delta0_empirical(double k, int dim, const CordesWindow& window, int n, int trials,
                               std::uint64_t seed) {
    const PeriodicGrid grid(dim, n);
    const double tl = estimate_T_norm(grid, window.lower, trials, seed);
    const double tu = estimate_T_norm(grid, window.upper, trials, seed);
    return cordes_delta0(k, dim, window, tl, tu);
}

namespace {

SpectralField random_field(const PeriodicGrid& grid, FieldKind kind, std::uint64_t seed, int kmax) {
    if (kmax < 1 || kmax >= grid.n() / 2) throw InputError("random field: need 1 <= kmax < n/2");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(grid.dim()), static_cast<std::uint32_t>(grid.n())};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SpectralField out(grid, kind);
    const double scale = static_cast<double>(grid.size());
    for (auto& c : out.coeffs) {
        CVector raw = CVector::Zero(grid.size());
        for_each_mode(grid, [&](Eigen::Index flat, const Eigen::Vector3d& xi, bool nyq) {
            if (nyq || xi.cwiseAbs().maxCoeff() > kmax || xi.squaredNorm() == 0.0) return;
            const double amp = scale / (1.0 + xi.squaredNorm());
            raw(flat) = amp * std::complex<double>(gauss(rng), gauss(rng));
        });
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            c(i) = 0.5 * (raw(i) + std::conj(raw(mirror_index(grid, i))));
    }
    return out;
}

}  // namespace

SpectralField random_band_limited_vector(const PeriodicGrid& grid, std::uint64_t seed, int kmax) {
    return random_field(grid, FieldKind::Vector, seed, kmax);
}

SpectralField random_band_limited_scalar(const PeriodicGrid& grid, std::uint64_t seed, int kmax) {
    return random_field(grid, FieldKind::Scalar, seed, kmax);
}

double estimate_T_norm(const PeriodicGrid& grid, double m, int trials, std::uint64_t seed) {
    if (trials < 1) throw InputError("estimate_T_norm: trials must be >= 1");
    const int dim = grid.dim();
    double best = 0.0;
    for (int t = 0; t < trials; ++t) {
        SpectralField v = random_band_limited_vector(grid, seed * 1000003ULL + static_cast<std::uint64_t>(t), 4);
        // alternate mixed, gradient-only and solenoidal-only fields
        if (t % 3 != 0) {
            for_each_mode(grid, [&](Eigen::Index flat, const Eigen::Vector3d& xi, bool) {
                const double r2 = xi.squaredNorm();
                if (r2 == 0.0) return;
                std::complex<double> proj = 0.0;
                for (int k = 0; k < dim; ++k) proj += xi(k) * v.coeffs[k](flat);
                for (int k = 0; k < dim; ++k) {
                    const std::complex<double> grad = xi(k) * proj / r2;
                    v.coeffs[k](flat) = (t % 3 == 1) ? grad : v.coeffs[k](flat) - grad;
                }
            });
        }
        const GridField dv = to_physical(gradient_of(v));
        GridField fg = to_physical(divergence_of(v));
        for (auto& c : skew_to_full(to_physical(curl_of(v)), dim)) fg.push_back(c / std::numbers::sqrt2);
        const double den = lm_matrix_norm(grid, fg, m);
        if (!(den > 0.0)) continue;
        best = std::max(best, lm_matrix_norm(grid, dv, m) / den);
    }
    return best;
}

double l2_norm(const SpectralField& field) { return lm_matrix_norm(field.grid, to_physical(field), 2.0); }

std::string export_grid_text(const PeriodicGrid& grid, const Vector& values) {
    if (values.size() != grid.size()) throw InputError("export_grid_text: size mismatch");
    std::ostringstream os;
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Vector x = grid.point(i);
        for (int a = 0; a < grid.dim(); ++a) os << x(a) << ' ';
        os << values(i) << '\n';
        if (grid.dim() == 2 && (i + 1) % grid.n() == 0) os << '\n';
    }
    return os.str();
}

}  // namespace quc
