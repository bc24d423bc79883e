#include "quc/matrix_core.hpp"

#include "quc/parallel.hpp"

#include <Eigen/QR>

#include <random>

namespace quc {

double ellipticity_defect(double k) {
    if (!(k >= 1.0)) throw InputError("ellipticity constant K must be >= 1");
    return 1.0 - 1.0 / k;
}

CurlBoundFactor curl_bound_factor(double k) {
    if (!(k >= 1.0) || !std::isfinite(k)) throw InputError("curl_bound_factor: K must be a finite value >= 1");
    CurlBoundFactor f;
    f.tight = 2.0 * (k - 1.0) * (k - 1.0) / (k * k + 1.0);
    const double e = ellipticity_defect(k);
    f.relaxed = 2.0 * e * e;
    return f;
}

SkewBoundReport extremal_skew_pair(int dim, double lambda_min, double lambda_max) {
    if (dim < 2) throw InputError("extremal_skew_pair: dimension must be >= 2");
    Vector diag = Vector::LinSpaced(dim, lambda_min, lambda_max);
    Matrix p = diag.asDiagonal();
    Matrix s = Matrix::Zero(dim, dim);
    s(0, dim - 1) = s(dim - 1, 0) = 1.0;
    return verify_skew_bound(p, s);
}

namespace {

struct TrialPair {
    Matrix p;
    Matrix s;
};

// Mixes well-conditioned and badly conditioned SPD matrices: random orthogonal
// frame with log-uniform spectrum in [1e-4, 1e4], plus a few Gram matrices.
TrialPair draw_pair(int dim, std::mt19937_64& rng, std::int64_t index) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-4.0, 4.0);
    Matrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = gauss(rng);
    TrialPair t;
    if (index % 4 == 3) {
        t.p = g * g.transpose() + 1e-3 * Matrix::Identity(dim, dim);
    } else {
        Eigen::HouseholderQR<Matrix> qr(g);
        Matrix q = qr.householderQ();
        Vector lambda(dim);
        for (int i = 0; i < dim; ++i) lambda(i) = std::pow(10.0, unif(rng));
        t.p = q * lambda.asDiagonal() * q.transpose();
        t.p = (t.p + t.p.transpose()).eval() / 2.0;
    }
    Matrix h(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) h(i, j) = gauss(rng);
    t.s = (h + h.transpose()) / 2.0;
    return t;
}

}  // namespace

std::vector<MatrixTrialStats> run_skew_bound_trials(const std::vector<int>& dims, std::int64_t trials,
                                                    std::uint64_t seed) {
    if (trials < 1) throw InputError("run_skew_bound_trials: trials must be >= 1");
    std::vector<MatrixTrialStats> out;
    for (int dim : dims) {
        if (dim < 2) throw InputError("run_skew_bound_trials: dimension must be >= 2");
        std::vector<double> slack(static_cast<std::size_t>(trials));
        std::vector<double> tight(static_cast<std::size_t>(trials));
        parallel_chunks(slack.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                std::seed_seq sq{seed, static_cast<std::uint64_t>(dim), static_cast<std::uint64_t>(i)};
                std::mt19937_64 rng(sq);
                const TrialPair t = draw_pair(dim, rng, static_cast<std::int64_t>(i));
                const SkewBoundReport r = verify_skew_bound(t.p, t.s);
                slack[i] = (r.lhs - r.rhs) / std::max(r.rhs, std::numeric_limits<double>::min());
                tight[i] = r.rhs > 0 ? r.lhs / r.rhs : 0.0;
            }
        });
        MatrixTrialStats st;
        st.dim = dim;
        st.trials = trials;
        for (std::size_t i = 0; i < slack.size(); ++i) {
            st.worst_relative_slack = std::max(st.worst_relative_slack, slack[i]);
            st.max_tightness = std::max(st.max_tightness, tight[i]);
            if (slack[i] > 1e-10) ++st.violations;
        }
        out.push_back(st);
    }
    return out;
}

}  // namespace quc
