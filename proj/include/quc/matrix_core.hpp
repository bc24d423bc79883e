#pragma once

// Pointwise linear algebra behind the curl-reabsorption estimate: for P SPD and
// S symmetric, X = P S satisfies |X - X^t|^2 <= 2 phi(lmin/lmax) |X|^2 (Frobenius).

#include "quc/common.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace quc {

/// Relative floor below which a symmetric matrix is not treated as positive definite.
inline constexpr double kSpdRelativeFloor = 1e-12;
/// Absolute symmetry tolerance accepted for SymMatrix inputs.
inline constexpr double kSymmetryTolerance = 1e-14;

template <typename Scalar>
struct EigenSummary {
    Scalar lambda_min{};
    Scalar lambda_max{};
    /// lambda_max / lambda_min; empty when the matrix is not positive definite.
    std::optional<Scalar> ratio;

    bool positive_definite() const { return ratio.has_value(); }
};

template <typename Derived>
void require_symmetric(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) throw InputError("matrix must be square");
    if (!m.allFinite()) throw InputError("matrix has non-finite entries");
    using Scalar = typename Derived::Scalar;
    const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > Scalar(kSymmetryTolerance) * std::max(Scalar(1), m.cwiseAbs().maxCoeff()))
        throw InputError("matrix is not symmetric");
}

/// Extreme eigenvalues of a symmetric matrix. Degenerate (non-SPD) input is
/// flagged through an empty ratio rather than rejected.
template <typename Derived>
EigenSummary<typename Derived::Scalar> eigen_summary(const Eigen::MatrixBase<Derived>& p) {
    using Scalar = typename Derived::Scalar;
    require_symmetric(p);
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Mat sym = (p + p.transpose()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Mat> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
    EigenSummary<Scalar> out;
    out.lambda_min = solver.eigenvalues().minCoeff();
    out.lambda_max = solver.eigenvalues().maxCoeff();
    if (out.lambda_max > Scalar(0) && out.lambda_min > Scalar(kSpdRelativeFloor) * out.lambda_max)
        out.ratio = out.lambda_max / out.lambda_min;
    return out;
}

/// (1 - t)^2 / (1 + t^2), nonincreasing on [0, 1].
template <typename Scalar>
Scalar phi(Scalar t) {
    if (!(t >= Scalar(0) && t <= Scalar(1))) throw InputError("phi: argument outside [0, 1]");
    return (Scalar(1) - t) * (Scalar(1) - t) / (Scalar(1) + t * t);
}

/// Frobenius norm of X - X^t.
template <typename Derived>
typename Derived::Scalar skew_defect(const Eigen::MatrixBase<Derived>& x) {
    return (x - x.transpose()).norm();
}

struct SkewBoundReport {
    double lhs = 0;  ///< |PS - (PS)^t|^2
    double rhs = 0;  ///< 2 phi(lmin/lmax) |PS|^2
    bool holds = false;
};

template <typename DerivedP, typename DerivedS>
SkewBoundReport verify_skew_bound(const Eigen::MatrixBase<DerivedP>& p,
                                  const Eigen::MatrixBase<DerivedS>& s) {
    require_symmetric(s);
    if (p.rows() != s.rows()) throw InputError("verify_skew_bound: dimension mismatch");
    const auto eig = eigen_summary(p);
    if (!eig.positive_definite()) throw PreconditionError("verify_skew_bound: P is not positive definite");
    const auto x = (p * s).eval();
    SkewBoundReport r;
    const double defect = static_cast<double>(skew_defect(x));
    r.lhs = defect * defect;
    r.rhs = 2.0 * phi(static_cast<double>(eig.lambda_min / eig.lambda_max)) *
            static_cast<double>(x.squaredNorm());
    r.holds = r.lhs <= r.rhs * (1.0 + 1e-10);
    return r;
}

struct CurlBoundFactor {
    double tight = 0;    ///< 2 (K-1)^2 / (K^2+1)
    double relaxed = 0;  ///< 2 (1 - 1/K)^2
};

CurlBoundFactor curl_bound_factor(double k);

/// e(K) = 1 - 1/K.
double ellipticity_defect(double k);

struct MatrixTrialStats {
    int dim = 0;
    std::int64_t trials = 0;
    std::int64_t violations = 0;
    /// max over trials of (lhs - rhs) / rhs; negative when every trial has slack.
    double worst_relative_slack = -std::numeric_limits<double>::infinity();
    /// max over trials of lhs / rhs (how close the bound comes to being tight).
    double max_tightness = 0;
};

/// Randomized check of the skew bound over `trials` (SPD P, symmetric S) pairs
/// per dimension. Each trial draws from an RNG seeded by (seed, dim, index), so
/// results are independent of thread count.
std::vector<MatrixTrialStats> run_skew_bound_trials(const std::vector<int>& dims,
                                                    std::int64_t trials, std::uint64_t seed);

/// The extremal pair P = diag(lmin, ..., lmax), S = e_1 (x) e_N + e_N (x) e_1.
SkewBoundReport extremal_skew_pair(int dim, double lambda_min, double lambda_max);

}  // namespace quc
