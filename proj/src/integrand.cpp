#include "quc/integrand.hpp"

#include "quc/cantor.hpp"
#include "quc/matrix_core.hpp"
#include "quc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <set>

namespace quc {

void IntegrandModel::hessian(const Vector& z, Matrix& out) const {
    const int n = dim();
    const double step = std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + z.norm());
    out.resize(n, n);
    Vector zp = z, zm = z, gp(n), gm(n);
    for (int i = 0; i < n; ++i) {
        zp(i) = z(i) + step;
        zm(i) = z(i) - step;
        gradient(zp, gp);
        gradient(zm, gm);
        out.col(i) = (gp - gm) / (2.0 * step);
        zp(i) = zm(i) = z(i);
    }
    out = (0.5 * (out + out.transpose())).eval();
}

Integrand::Integrand(std::shared_ptr<const IntegrandModel> model, IntegrandInfo info)
    : model_(std::move(model)), info_(std::move(info)) {
    if (!model_) throw InputError("Integrand: null model");
    if (info_.minimizer.size() == 0) info_.minimizer = Vector::Zero(model_->dim());
}

Vector Integrand::gradient(const Vector& z) const {
    Vector g(dim());
    model_->gradient(z, g);
    return g;
}

Matrix Integrand::hessian(const Vector& z) const {
    Matrix h(dim(), dim());
    model_->hessian(z, h);
    return h;
}

std::optional<double> Integrand::growth_p() const {
    if (!info_.declared_k) return std::nullopt;
    return 1.0 + 1.0 / *info_.declared_k;
}

std::optional<double> Integrand::growth_q() const {
    if (!info_.declared_k) return std::nullopt;
    return 1.0 + *info_.declared_k;
}

nlohmann::json Integrand::descriptor() const {
    nlohmann::json j = info_.params;
    j["name"] = info_.name;
    return j;
}

namespace {

constexpr double kTinyNorm = 1e-150;

double power_k(double p) { return std::max(p - 1.0, 1.0 / (p - 1.0)); }

void require_exponent(double p, const char* what) {
    if (!(p > 1.0) || !std::isfinite(p)) throw InputError(std::string(what) + ": exponent must be > 1");
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// |w|^p / p
class PowerModel final : public IntegrandModel {
public:
    PowerModel(int dim, double p, Vector center) : dim_(dim), p_(p), center_(std::move(center)) {}
    int dim() const override { return dim_; }
    double value(const Vector& z) const override { return std::pow((z - center_).norm(), p_) / p_; }
    void gradient(const Vector& z, Vector& out) const override {
        const Vector w = z - center_;
        const double r = w.norm();
        if (r == 0.0) {
            out.setZero(dim_);
            return;
        }
        out = std::pow(r, p_ - 2.0) * w;
    }
    void hessian(const Vector& z, Matrix& out) const override {
        const Vector w = z - center_;
        const double r = std::max(w.norm(), kTinyNorm);
        out = Matrix::Identity(dim_, dim_);
        if (w.norm() > 0) {
            const Vector u = w / r;
            out += (p_ - 2.0) * u * u.transpose();
        }
        out *= std::pow(r, p_ - 2.0);
        if (w.norm() == 0 && p_ > 2.0) out.setZero();
        if (w.norm() == 0 && p_ == 2.0) out.setIdentity();
    }
    HessianKind hessian_kind() const override { return HessianKind::Analytic; }

private:
    int dim_;
    double p_;
    Vector center_;
};

class SumModel final : public IntegrandModel {
public:
    SumModel(std::shared_ptr<const IntegrandModel> a, std::shared_ptr<const IntegrandModel> b)
        : a_(std::move(a)), b_(std::move(b)) {}
    int dim() const override { return a_->dim(); }
    double value(const Vector& z) const override { return a_->value(z) + b_->value(z); }
    void gradient(const Vector& z, Vector& out) const override {
        Vector tmp(dim());
        a_->gradient(z, out);
        b_->gradient(z, tmp);
        out += tmp;
    }
    void hessian(const Vector& z, Matrix& out) const override {
        Matrix tmp(dim(), dim());
        a_->hessian(z, out);
        b_->hessian(z, tmp);
        out += tmp;
    }
    HessianKind hessian_kind() const override {
        return a_->hessian_kind() == HessianKind::Analytic && b_->hessian_kind() == HessianKind::Analytic
                   ? HessianKind::Analytic
                   : HessianKind::FiniteDifference;
    }

private:
    std::shared_ptr<const IntegrandModel> a_, b_;
};

class QuadraticShiftModel final : public IntegrandModel {
public:
    QuadraticShiftModel(std::shared_ptr<const IntegrandModel> f, double mu) : f_(std::move(f)), mu_(mu) {}
    int dim() const override { return f_->dim(); }
    double value(const Vector& z) const override { return f_->value(z) + 0.5 * mu_ * z.squaredNorm(); }
    void gradient(const Vector& z, Vector& out) const override {
        f_->gradient(z, out);
        out += mu_ * z;
    }
    void hessian(const Vector& z, Matrix& out) const override {
        f_->hessian(z, out);
        out.diagonal().array() += mu_;
    }
    HessianKind hessian_kind() const override { return f_->hessian_kind(); }

private:
    std::shared_ptr<const IntegrandModel> f_;
    double mu_;
};

// |z|^p/p + |z_1|^q/q
class MixedModel final : public IntegrandModel {
public:
    MixedModel(int dim, double p, double q) : power_(dim, p, Vector::Zero(dim)), dim_(dim), q_(q) {}
    int dim() const override { return dim_; }
    double value(const Vector& z) const override {
        return power_.value(z) + std::pow(std::abs(z(0)), q_) / q_;
    }
    void gradient(const Vector& z, Vector& out) const override {
        power_.gradient(z, out);
        const double a = std::abs(z(0));
        if (a > 0) out(0) += std::pow(a, q_ - 2.0) * z(0);
    }
    void hessian(const Vector& z, Matrix& out) const override {
        power_.hessian(z, out);
        out(0, 0) += (q_ - 1.0) * std::pow(std::max(std::abs(z(0)), kTinyNorm), q_ - 2.0);
    }
    HessianKind hessian_kind() const override { return HessianKind::Analytic; }

private:
    PowerModel power_;
    int dim_;
    double q_;
};

class OrthotropicModel final : public IntegrandModel {
public:
    OrthotropicModel(int dim, double p) : dim_(dim), p_(p) {}
    int dim() const override { return dim_; }
    double value(const Vector& z) const override { return z.array().abs().pow(p_).sum(); }
    void gradient(const Vector& z, Vector& out) const override {
        out.resize(dim_);
        for (int i = 0; i < dim_; ++i) {
            const double a = std::abs(z(i));
            out(i) = a > 0 ? p_ * std::pow(a, p_ - 2.0) * z(i) : 0.0;
        }
    }
    void hessian(const Vector& z, Matrix& out) const override {
        out.setZero(dim_, dim_);
        for (int i = 0; i < dim_; ++i) {
            const double a = std::abs(z(i));
            if (a > 0)
                out(i, i) = p_ * (p_ - 1.0) * std::pow(a, p_ - 2.0);
            else if (p_ == 2.0)
                out(i, i) = 2.0;
        }
    }
    HessianKind hessian_kind() const override { return HessianKind::Analytic; }

private:
    int dim_;
    double p_;
};

// t^p/p composed with H(z) = sqrt(z^t A z) + b.z
class AnisotropicModel final : public IntegrandModel {
public:
    AnisotropicModel(double p, Matrix a, Vector b) : p_(p), a_(std::move(a)), b_(std::move(b)) {}
    int dim() const override { return static_cast<int>(b_.size()); }
    double gauge(const Vector& z) const { return std::sqrt(z.dot(a_ * z)) + b_.dot(z); }
    double value(const Vector& z) const override { return std::pow(gauge(z), p_) / p_; }
    void gradient(const Vector& z, Vector& out) const override {
        const double n = std::sqrt(z.dot(a_ * z));
        if (n == 0.0) {
            out.setZero(dim());
            return;
        }
        const Vector dh = a_ * z / n + b_;
        out = std::pow(n + b_.dot(z), p_ - 1.0) * dh;
    }

private:
    double p_;
    Matrix a_;
    Vector b_;
};

// Radial F(w) = G(|w|) with G' = t a(t); D^2F = a I + |w| a' what (x) what.
class UhlenbeckModel final : public IntegrandModel {
public:
    UhlenbeckModel(int dim, UhlenbeckProfile profile) : dim_(dim), profile_(std::move(profile)) {}
    int dim() const override { return dim_; }
    double value(const Vector& z) const override {
        const double r = z.norm();
        if (profile_.primitive) return profile_.primitive(r);
        return integrate_adaptive([&](double t) { return t * profile_.a(t); }, 0.0, r).value;
    }
    void gradient(const Vector& z, Vector& out) const override {
        const double r = z.norm();
        if (r == 0.0) {
            out.setZero(dim_);
            return;
        }
        out = profile_.a(r) * z;
    }
    void hessian(const Vector& z, Matrix& out) const override {
        const double r = std::max(z.norm(), kTinyNorm);
        out = profile_.a(r) * Matrix::Identity(dim_, dim_);
        if (z.norm() > 0) {
            const Vector u = z / r;
            out += r * profile_.a_prime(r) * u * u.transpose();
        }
    }
    HessianKind hessian_kind() const override { return HessianKind::Analytic; }

private:
    int dim_;
    UhlenbeckProfile profile_;
};

// |w|^2/2 + H_L(|w|); the a.e. Hessian is exact because h_L is piecewise affine.
class CantorModel final : public IntegrandModel {
public:
    CantorModel(int dim, int level) : dim_(dim), profile_(level) {}
    int dim() const override { return dim_; }
    double value(const Vector& z) const override {
        const double t = z.norm();
        return 0.5 * t * t + profile_.antiderivative(t);
    }
    void gradient(const Vector& z, Vector& out) const override {
        const double t = z.norm();
        if (t == 0.0) {
            out.setZero(dim_);
            return;
        }
        out = (t + profile_.h(t)) / t * z;
    }
    void hessian(const Vector& z, Matrix& out) const override {
        const double t = z.norm();
        const double slope0 = std::pow(1.5, profile_.level());
        if (t == 0.0) {
            out = (1.0 + slope0) * Matrix::Identity(dim_, dim_);
            return;
        }
        const Vector u = z / t;
        const double radial = 1.0 + profile_.h_prime(t);
        const double tangential = (t + profile_.h(t)) / t;
        out = tangential * Matrix::Identity(dim_, dim_) + (radial - tangential) * u * u.transpose();
    }
    HessianKind hessian_kind() const override { return HessianKind::Analytic; }
    const CantorProfile& profile() const { return profile_; }

private:
    int dim_;
    CantorProfile profile_;
};

// Worst-case eigen ratio of the level-L Cantor integrand; by periodicity of h the
// supremum over t > 0 is attained on (0, 2], where each affine piece is monotone.
double cantor_declared_k(int level) {
    const CantorProfile prof(level);
    const auto bp = prof.breakpoints();
    double k = 1.0;
    auto consider = [&](double t, double slope) {
        if (t <= 0.0) return;
        const double ht = prof.h(t) / t;
        const double rad = 1.0 + slope, tan = 1.0 + ht;
        k = std::max({k, rad / tan, tan / rad});
    };
    for (int shift = 0; shift <= 1; ++shift) {
        for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
            const double a = bp[i] + shift, b = bp[i + 1] + shift;
            if (b <= a) continue;
            const double slope = prof.h_prime(0.5 * (a + b));
            consider(a, slope);
            consider(b, slope);
        }
    }
    // t -> 0+: h(t)/t tends to the slope of the first piece, ratio 1
    return k;
}

void require_dim(int dim) {
    if (dim < 1) throw InputError("integrand dimension must be >= 1");
}

}  // namespace

Integrand power_integrand(int dim, double p, std::optional<Vector> center) {
    require_dim(dim);
    require_exponent(p, "power");
    Vector c = center.value_or(Vector::Zero(dim));
    if (c.size() != dim) throw InputError("power: center dimension mismatch");
    IntegrandInfo info;
    info.name = "power";
    info.params = {{"dim", dim}, {"p", p}};
    if (center) info.params["center"] = to_std(c);
    info.declared_k = power_k(p);
    info.minimizer = c;
    info.degenerate_points = {c};
    return Integrand(std::make_shared<PowerModel>(dim, p, c), info);
}

Integrand two_center_integrand(double p, const Vector& z0) {
    require_exponent(p, "two_center");
    const int dim = static_cast<int>(z0.size());
    require_dim(dim);
    auto a = std::make_shared<PowerModel>(dim, p, z0);
    auto b = std::make_shared<PowerModel>(dim, p, -z0);
    // |w|^p = p * (|w|^p / p)
    auto sum = std::make_shared<SumModel>(a, b);
    struct Scaled final : IntegrandModel {
        std::shared_ptr<const IntegrandModel> f;
        double s;
        int dim() const override { return f->dim(); }
        double value(const Vector& z) const override { return s * f->value(z); }
        void gradient(const Vector& z, Vector& out) const override {
            f->gradient(z, out);
            out *= s;
        }
        void hessian(const Vector& z, Matrix& out) const override {
            f->hessian(z, out);
            out *= s;
        }
        HessianKind hessian_kind() const override { return HessianKind::Analytic; }
    };
    auto scaled = std::make_shared<Scaled>();
    scaled->f = sum;
    scaled->s = p;
    IntegrandInfo info;
    info.name = "two_center";
    info.params = {{"p", p}, {"z0", to_std(z0)}};
    info.declared_k = power_k(p);
    info.minimizer = Vector::Zero(dim);
    if (p < 2.0) info.degenerate_points = {z0, -z0};
    return Integrand(scaled, info);
}

Integrand mixed_integrand(int dim, double p, double q) {
    require_dim(dim);
    require_exponent(p, "mixed");
    require_exponent(q, "mixed");
    IntegrandInfo info;
    info.name = "mixed";
    info.params = {{"dim", dim}, {"p", p}, {"q", q}};
    if (p == q && p == 2.0) info.declared_k = 2.0;
    info.degenerate_points = {Vector::Zero(dim)};
    return Integrand(std::make_shared<MixedModel>(dim, p, q), info);
}

Integrand orthotropic_integrand(int dim, double p) {
    require_dim(dim);
    require_exponent(p, "orthotropic");
    IntegrandInfo info;
    info.name = "orthotropic";
    info.params = {{"dim", dim}, {"p", p}};
    if (p == 2.0) info.declared_k = 1.0;
    return Integrand(std::make_shared<OrthotropicModel>(dim, p), info);
}

Integrand anisotropic_integrand(double p, const Matrix& a, const Vector& b) {
    require_exponent(p, "anisotropic");
    const int dim = static_cast<int>(b.size());
    require_dim(dim);
    if (a.rows() != dim || a.cols() != dim) throw InputError("anisotropic: A must be N x N");
    const auto eig = eigen_summary(a);
    if (!eig.positive_definite()) throw InputError("anisotropic: A must be positive definite");
    const Matrix ainv = a.inverse();
    if (!(b.dot(ainv * b) < 1.0)) throw InputError("anisotropic: need |A^(-1/2) b| < 1 so that H > 0");
    IntegrandInfo info;
    info.name = "anisotropic";
    info.params = {{"p", p}, {"b", to_std(b)}};
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < dim; ++i) rows.push_back(to_std(a.row(i).transpose()));
    info.params["A"] = rows;
    info.degenerate_points = {Vector::Zero(dim)};
    return Integrand(std::make_shared<AnisotropicModel>(p, a, b), info);
}

Integrand cantor_integrand(int dim, int level) {
    require_dim(dim);
    if (level < 1) throw InputError("cantor: level must be >= 1");
    IntegrandInfo info;
    info.name = "cantor";
    info.params = {{"dim", dim}, {"level", level}};
    info.declared_k = cantor_declared_k(level);
    return Integrand(std::make_shared<CantorModel>(dim, level), info);
}

UhlenbeckProfile power_profile(double p) {
    require_exponent(p, "power_profile");
    UhlenbeckProfile prof;
    prof.kind = "power";
    prof.p = p;
    prof.a = [p](double t) { return std::pow(t, p - 2.0); };
    prof.a_prime = [p](double t) { return (p - 2.0) * std::pow(t, p - 3.0); };
    prof.primitive = [p](double t) { return std::pow(t, p) / p; };
    return prof;
}

UhlenbeckProfile regularized_power_profile(double p) {
    require_exponent(p, "regularized_power_profile");
    UhlenbeckProfile prof;
    prof.kind = "regularized_power";
    prof.p = p;
    prof.a = [p](double t) { return std::pow(1.0 + t * t, 0.5 * (p - 2.0)); };
    prof.a_prime = [p](double t) { return (p - 2.0) * t * std::pow(1.0 + t * t, 0.5 * (p - 4.0)); };
    prof.primitive = [p](double t) { return (std::pow(1.0 + t * t, 0.5 * p) - 1.0) / p; };
    return prof;
}

Integrand uhlenbeck_integrand(int dim, const UhlenbeckProfile& profile) {
    require_dim(dim);
    if (!profile.a || !profile.a_prime) throw InputError("uhlenbeck: profile needs a and a'");
    IntegrandInfo info;
    info.name = "uhlenbeck";
    info.params = {{"dim", dim}, {"profile", profile.kind}, {"p", profile.p}};
    if (profile.kind == "power" || profile.kind == "regularized_power") {
        info.declared_k = power_k(profile.p);
    } else {
        info.declared_k = uhlenbeck_indices(profile).k;
    }
    if (profile.kind != "regularized_power") info.degenerate_points = {Vector::Zero(dim)};
    return Integrand(std::make_shared<UhlenbeckModel>(dim, profile), info);
}

Integrand sum_integrand(const Integrand& f1, const Integrand& f2) {
    if (f1.dim() != f2.dim()) throw InputError("sum: dimension mismatch");
    IntegrandInfo info;
    info.name = "sum";
    info.params = {{"terms", nlohmann::json::array({f1.descriptor(), f2.descriptor()})}};
    if (f1.declared_k() && f2.declared_k()) info.declared_k = std::max(*f1.declared_k(), *f2.declared_k());
    info.degenerate_points = f1.info().degenerate_points;
    for (const auto& d : f2.info().degenerate_points) info.degenerate_points.push_back(d);
    auto model = std::make_shared<SumModel>(f1.model(), f2.model());
    Integrand tmp(model, info);
    // minimizer of the sum: a few Newton steps from the midpoint of the two minimizers
    Vector z = 0.5 * (f1.minimizer() + f2.minimizer());
    for (int it = 0; it < 100; ++it) {
        const Vector g = tmp.gradient(z);
        if (g.norm() < 1e-13) break;
        Matrix h = tmp.hessian(z);
        h.diagonal().array() += 1e-12;
        Vector step = -h.ldlt().solve(g);
        double alpha = 1.0;
        const double f0 = tmp.value(z);
        while (alpha > 1e-12 && tmp.value(z + alpha * step) > f0 + 1e-4 * alpha * g.dot(step)) alpha *= 0.5;
        z += alpha * step;
    }
    info.minimizer = z;
    return Integrand(model, info);
}

Integrand add_quadratic(const Integrand& f, double mu) {
    if (!(mu >= 0.0)) throw InputError("add_quadratic: mu must be >= 0");
    IntegrandInfo info = f.info();
    info.name = "quadratic_shift";
    info.params = {{"base", f.descriptor()}, {"mu", mu}};
    // (lmax + mu) / (lmin + mu) <= K whenever lmax <= K lmin
    if (mu == 0.0) return Integrand(f.model(), info);
    return Integrand(std::make_shared<QuadraticShiftModel>(f.model(), mu), info);
}

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
    std::set<std::string> ok{"name"};
    for (const char* a : allowed) ok.insert(a);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw InputError("integrand descriptor: unknown key '" + it.key() + "'");
}

Vector vec_from(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Integrand make_integrand(const nlohmann::json& d) {
    if (!d.is_object() || !d.contains("name")) throw InputError("integrand descriptor must be an object with a name");
    const std::string name = d.at("name").get<std::string>();
    try {
        if (name == "power") {
            check_keys(d, {"dim", "p", "center"});
            std::optional<Vector> c;
            if (d.contains("center")) c = vec_from(d.at("center"));
            return power_integrand(d.value("dim", 2), d.at("p").get<double>(), c);
        }
        if (name == "two_center") {
            check_keys(d, {"p", "z0"});
            return two_center_integrand(d.at("p").get<double>(), vec_from(d.at("z0")));
        }
        if (name == "mixed") {
            check_keys(d, {"dim", "p", "q"});
            return mixed_integrand(d.value("dim", 2), d.at("p").get<double>(), d.at("q").get<double>());
        }
        if (name == "orthotropic") {
            check_keys(d, {"dim", "p"});
            return orthotropic_integrand(d.value("dim", 2), d.at("p").get<double>());
        }
        if (name == "anisotropic") {
            check_keys(d, {"p", "A", "b"});
            const auto rows = d.at("A").get<std::vector<std::vector<double>>>();
            const Vector b = vec_from(d.at("b"));
            Matrix a(b.size(), b.size());
            if (rows.size() != static_cast<std::size_t>(b.size())) throw InputError("anisotropic: A shape");
            for (Eigen::Index i = 0; i < b.size(); ++i) {
                if (rows[i].size() != static_cast<std::size_t>(b.size())) throw InputError("anisotropic: A shape");
                for (Eigen::Index k = 0; k < b.size(); ++k) a(i, k) = rows[i][k];
            }
            return anisotropic_integrand(d.at("p").get<double>(), a, b);
        }
        if (name == "cantor") {
            check_keys(d, {"dim", "level"});
            return cantor_integrand(d.value("dim", 2), d.value("level", 12));
        }
        if (name == "uhlenbeck") {
            check_keys(d, {"dim", "profile", "p"});
            const std::string kind = d.value("profile", std::string("power"));
            const double p = d.at("p").get<double>();
            if (kind == "power") return uhlenbeck_integrand(d.value("dim", 2), power_profile(p));
            if (kind == "regularized_power")
                return uhlenbeck_integrand(d.value("dim", 2), regularized_power_profile(p));
            throw InputError("uhlenbeck: unknown profile '" + kind + "'");
        }
        if (name == "sum") {
            check_keys(d, {"terms"});
            const auto& terms = d.at("terms");
            if (!terms.is_array() || terms.size() < 2) throw InputError("sum: need at least two terms");
            Integrand acc = make_integrand(terms.at(0));
            for (std::size_t i = 1; i < terms.size(); ++i) acc = sum_integrand(acc, make_integrand(terms.at(i)));
            return acc;
        }
        if (name == "quadratic_shift") {
            check_keys(d, {"base", "mu"});
            return add_quadratic(make_integrand(d.at("base")), d.at("mu").get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("integrand descriptor: ") + e.what());
    }
    throw InputError("unknown integrand '" + name + "'");
}

// ---------------------------------------------------------------------------

double eigen_ratio_at(const Integrand& f, const Vector& z) {
    const Matrix h = f.hessian(z);
    if (!h.allFinite()) return std::numeric_limits<double>::infinity();
    const auto eig = eigen_summary(0.5 * (h + h.transpose()));
    return eig.ratio.value_or(std::numeric_limits<double>::infinity());
}

std::vector<Vector> AnnulusSampler::points(int dim) const {
    if (!(r0 > 0.0) || !(r1 >= r0)) throw InputError("AnnulusSampler: need 0 < r0 <= r1");
    if (shells < 1 || directions < 1) throw InputError("AnnulusSampler: shells and directions must be >= 1");
    const Vector c = center.size() == dim ? center : Vector::Zero(dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vector> pts;
    pts.reserve(static_cast<std::size_t>(shells) * directions);
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int s = 0; s < shells; ++s) {
        const double frac = shells == 1 ? 0.0 : static_cast<double>(s) / (shells - 1);
        const double r = r0 * std::pow(r1 / r0, frac);
        for (int k = 0; k < directions; ++k) {
            Vector u(dim);
            if (dim == 1) {
                u(0) = (k % 2 == 0) ? 1.0 : -1.0;
            } else if (dim == 2) {
                const double ang = 2.0 * std::numbers::pi * (k + golden * s) / directions;
                u << std::cos(ang), std::sin(ang);
            } else {
                for (int i = 0; i < dim; ++i) u(i) = gauss(rng);
                u.normalize();
            }
            pts.push_back(c + r * u);
        }
    }
    return pts;
}

double estimate_k(const Integrand& f, const AnnulusSampler& sampler) {
    const auto pts = sampler.points(f.dim());
    double k = 0.0;
    int used = 0, degenerate = 0;
    for (const auto& z : pts) {
        bool skip = false;
        for (const auto& d : f.info().degenerate_points)
            if ((z - d).norm() <= 1e-9 * (1.0 + d.norm())) skip = true;
        if (skip) continue;
        const double r = eigen_ratio_at(f, z);
        ++used;
        if (!std::isfinite(r)) ++degenerate;
        k = std::max(k, r);
    }
    if (used == 0 || degenerate == used) throw NumericError("estimate_k: every sample point is degenerate");
    return k;
}

GrowthReport verify_growth(const Integrand& f, double k, const std::vector<Vector>& samples) {
    if (!(k >= 1.0)) throw InputError("verify_growth: K must be >= 1");
    std::vector<Vector> pts = samples;
    if (pts.empty()) {
        AnnulusSampler s;
        s.r0 = 1e-3;
        s.r1 = 1e8;
        s.shells = 45;
        s.directions = 32;
        pts = s.points(f.dim());
    }
    GrowthReport rep;
    rep.p = 1.0 + 1.0 / k;
    rep.q = 1.0 + k;
    // smallest C on the grid 10^(j/16), j = 0..192, satisfying a predicate monotone in C
    auto smallest_c = [](auto&& ok) {
        for (int j = 0; j <= 192; ++j) {
            const double c = std::pow(10.0, j / 16.0);
            if (ok(c)) return c;
        }
        return std::numeric_limits<double>::infinity();
    };
    double worst = 0.0;
    rep.worst_point = pts.front();
    for (const auto& z : pts) {
        const double r = z.norm();
        const double fv = f.value(z);
        const double gv = f.gradient(z).norm();
        const double rp = std::pow(r, rep.p), rp1 = std::pow(r, rep.p - 1.0);
        const double rq = std::pow(r, rep.q), rq1 = std::pow(r, rep.q - 1.0);
        const double lo = smallest_c([&](double c) { return rp / c - c <= fv && rp1 / c - c <= gv; });
        const double up = smallest_c([&](double c) { return fv <= c * (rq + 1.0) && gv <= c * (rq1 + 1.0); });
        rep.c_lower = std::max(rep.c_lower, lo);
        rep.c_upper = std::max(rep.c_upper, up);
        if (std::max(lo, up) > worst) {
            worst = std::max(lo, up);
            rep.worst_point = z;
        }
    }
    rep.c = std::max(rep.c_lower, rep.c_upper);
    rep.holds = rep.c <= 1e12;
    return rep;
}

// ---------------------------------------------------------------------------

namespace {

struct KernelNode {
    Vector y;
    double w;
};

std::vector<KernelNode> mollifier_nodes(int dim) {
    const GaussRule g = gauss_legendre(8);
    std::vector<KernelNode> nodes;
    std::vector<int> idx(dim, 0);
    double mass = 0.0;
    while (true) {
        Vector y(dim);
        double w = 1.0;
        for (int d = 0; d < dim; ++d) {
            y(d) = g.nodes[idx[d]];
            w *= g.weights[idx[d]];
        }
        const double r2 = y.squaredNorm();
        if (r2 < 1.0) {
            const double phi = std::pow(1.0 - r2, 4);
            nodes.push_back({y, w * phi});
            mass += w * phi;
        }
        int d = 0;
        while (d < dim && ++idx[d] == 8) idx[d++] = 0;
        if (d == dim) break;
    }
    for (auto& n : nodes) n.w /= mass;
    return nodes;
}

class MollifiedModel final : public IntegrandModel {
public:
    MollifiedModel(std::shared_ptr<const IntegrandModel> f, double eps)
        : f_(std::move(f)), eps_(eps), nodes_(mollifier_nodes(f_->dim())) {}
    int dim() const override { return f_->dim(); }
    double value(const Vector& z) const override {
        double acc = 0.0;
        for (const auto& n : nodes_) acc += n.w * f_->value(z - eps_ * n.y);
        if (!std::isfinite(acc)) throw NumericError("mollify: non-finite quadrature value");
        return acc;
    }
    void gradient(const Vector& z, Vector& out) const override {
        out.setZero(dim());
        Vector g(dim()), shifted(dim());
        for (const auto& n : nodes_) {
            shifted = z - eps_ * n.y;
            f_->gradient(shifted, g);
            out += n.w * g;
        }
    }
    void hessian(const Vector& z, Matrix& out) const override {
        out.setZero(dim(), dim());
        Matrix h(dim(), dim());
        Vector shifted(dim());
        for (const auto& n : nodes_) {
            shifted = z - eps_ * n.y;
            f_->hessian(shifted, h);
            out += n.w * h;
        }
    }
    HessianKind hessian_kind() const override { return f_->hessian_kind(); }

private:
    std::shared_ptr<const IntegrandModel> f_;
    double eps_;
    std::vector<KernelNode> nodes_;
};

Vector newton_minimizer(const Integrand& f, Vector z) {
    for (int it = 0; it < 200; ++it) {
        const Vector g = f.gradient(z);
        if (g.norm() < 1e-13 * (1.0 + z.norm())) break;
        Matrix h = f.hessian(z);
        h.diagonal().array() += 1e-12 * (1.0 + h.norm());
        const Vector step = -h.ldlt().solve(g);
        double alpha = 1.0;
        const double f0 = f.value(z);
        while (alpha > 1e-14 && f.value(z + alpha * step) > f0 + 1e-4 * alpha * g.dot(step)) alpha *= 0.5;
        if (alpha <= 1e-14) break;
        z += alpha * step;
    }
    return z;
}

}  // namespace

Integrand mollify(const Integrand& f, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("mollify: eps must be > 0");
    IntegrandInfo info = f.info();
    info.name = "mollified";
    info.params = {{"base", f.descriptor()}, {"eps", eps}};
    info.degenerate_points.clear();
    auto model = std::make_shared<MollifiedModel>(f.model(), eps);
    Integrand tmp(model, info);
    info.minimizer = newton_minimizer(tmp, f.minimizer());
    return Integrand(model, info);
}

Vector prox_point(const Integrand& f, double delta, const Vector& z) {
    if (!(delta > 0.0)) throw InputError("prox_point: delta must be > 0");
    if (z.size() != f.dim()) throw InputError("prox_point: dimension mismatch");
    const int n = f.dim();
    const double tol = 1e-12 * (1.0 + z.norm());
    auto merit = [&](const Vector& p) { return f.value(p) + (p - z).squaredNorm() / (2.0 * delta); };
    Vector p = z;
    Vector g(n);
    Matrix h(n, n);
    double res = 0;
    for (int it = 0; it < 200; ++it) {
        f.gradient(p, g);
        const Vector r = p + delta * g - z;
        res = r.norm();
        if (res <= tol) return p;
        f.hessian(p, h);
        Matrix jac = Matrix::Identity(n, n) + delta * h;
        const Vector step = -jac.ldlt().solve(r);
        Vector trial = p + step;
        Vector g2(n);
        f.gradient(trial, g2);
        if ((trial + delta * g2 - z).norm() <= 0.5 * res) {
            p = trial;
            continue;
        }
        // Armijo on the strongly convex merit; its gradient is r / delta
        const double m0 = merit(p);
        const double slope = r.dot(step) / delta;
        double alpha = 1.0;
        while (alpha > 1e-10 && merit(trial) > m0 + 1e-4 * alpha * slope) {
            alpha *= 0.5;
            trial = p + alpha * step;
        }
        if (alpha <= 1e-10) break;
        p = trial;
    }
    f.gradient(p, g);
    res = (p + delta * g - z).norm();
    if (res <= tol) return p;
    char msg[96];
    std::snprintf(msg, sizeof msg, "prox_point: Newton did not converge (residual %.3e)", res);
    throw NumericError(msg);
}

namespace {

class MoreauYosidaModel final : public IntegrandModel {
public:
    MoreauYosidaModel(Integrand f, double delta) : f_(std::move(f)), delta_(delta) {}
    int dim() const override { return f_.dim(); }
    double value(const Vector& z) const override {
        const Vector p = prox_point(f_, delta_, z);
        return f_.value(p) + (p - z).squaredNorm() / (2.0 * delta_);
    }
    void gradient(const Vector& z, Vector& out) const override { out = f_.gradient(prox_point(f_, delta_, z)); }
    void hessian(const Vector& z, Matrix& out) const override {
        const Matrix h = f_.hessian(prox_point(f_, delta_, z));
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.transpose()));
        Vector lam = es.eigenvalues();
        for (Eigen::Index i = 0; i < lam.size(); ++i) lam(i) = lam(i) / (1.0 + delta_ * lam(i));
        out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    }
    HessianKind hessian_kind() const override { return f_.hessian_kind(); }

private:
    Integrand f_;
    double delta_;
};

}  // namespace

Integrand moreau_yosida(const Integrand& f, double delta) {
    if (!(delta > 0.0)) throw InputError("moreau_yosida: delta must be > 0");
    IntegrandInfo info = f.info();
    info.name = "moreau_yosida";
    info.params = {{"base", f.descriptor()}, {"delta", delta}};
    return Integrand(std::make_shared<MoreauYosidaModel>(f, delta), info);
}

// ---------------------------------------------------------------------------

namespace {

// C^2 quintic step: 1 on [0, a], 0 on [b, inf)
struct RadialCutoff {
    double a, b;
    double value(double r) const {
        if (r <= a) return 1.0;
        if (r >= b) return 0.0;
        const double x = (r - a) / (b - a);
        return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    }
    double d1(double r) const {
        if (r <= a || r >= b) return 0.0;
        const double x = (r - a) / (b - a);
        return -30.0 * x * x * (1.0 - x) * (1.0 - x) / (b - a);
    }
    double d2(double r) const {
        if (r <= a || r >= b) return 0.0;
        const double x = (r - a) / (b - a);
        return -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / ((b - a) * (b - a));
    }
};

class ExtendedModel final : public IntegrandModel {
public:
    ExtendedModel(Integrand f, double radius, double sigma, double c)
        : f_(std::move(f)), radius_(radius), sigma_(sigma), c_(c),
          eta_{0.5 * (1.0 + sigma) * radius, radius} {}
    int dim() const override { return f_.dim(); }

    // M = (1-eta) I + Deta (x) DF + DF (x) Deta - Deta (x) z - z (x) Deta + (F - |z|^2/2) D^2 eta
    Matrix m_matrix(const Vector& z) const {
        const int n = dim();
        const double r = z.norm();
        const double eta = eta_.value(r);
        Matrix m = (1.0 - eta) * Matrix::Identity(n, n);
        if (r <= eta_.a || r >= eta_.b) return m;
        const Vector u = z / r;
        const Vector deta = eta_.d1(r) * u;
        const Matrix d2eta = eta_.d2(r) * u * u.transpose() +
                             eta_.d1(r) / r * (Matrix::Identity(n, n) - u * u.transpose());
        const Vector df = f_.gradient(z);
        m += deta * df.transpose() + df * deta.transpose() - deta * z.transpose() - z * deta.transpose();
        m += (f_.value(z) - 0.5 * z.squaredNorm()) * d2eta;
        return m;
    }

    double value(const Vector& z) const override {
        const double r = z.norm();
        const double eta = eta_.value(r);
        double v = (1.0 - eta) * 0.5 * r * r;
        if (eta > 0.0) v += eta * f_.value(z);
        const double excess = std::max(0.0, r - sigma_ * radius_);
        return v + c_ * excess * excess;
    }
    void gradient(const Vector& z, Vector& out) const override {
        const double r = z.norm();
        const double eta = eta_.value(r);
        out = (1.0 - eta) * z;
        if (eta > 0.0) out += eta * f_.gradient(z);
        if (r > eta_.a && r < eta_.b) {
            const Vector deta = eta_.d1(r) * z / r;
            out += (f_.value(z) - 0.5 * r * r) * deta;
        }
        const double excess = std::max(0.0, r - sigma_ * radius_);
        if (excess > 0.0) out += 2.0 * c_ * excess * z / r;
    }
    void hessian(const Vector& z, Matrix& out) const override {
        const int n = dim();
        const double r = z.norm();
        const double eta = eta_.value(r);
        out = m_matrix(z);
        if (eta > 0.0) out += eta * f_.hessian(z);
        const double sr = sigma_ * radius_;
        if (r > sr) {
            const Vector u = z / r;
            const Matrix a = sr / r * u * u.transpose() + (1.0 - sr / r) * Matrix::Identity(n, n);
            out += 2.0 * c_ * a;
        }
    }
    HessianKind hessian_kind() const override { return f_.hessian_kind(); }

private:
    Integrand f_;
    double radius_, sigma_, c_;
    RadialCutoff eta_;
};

}  // namespace

Integrand extend_local(const Integrand& f, double radius, double sigma, double eps_floor, ExtensionInfo* info_out) {
    if (!(radius > 0.0)) throw InputError("extend_local: radius must be > 0");
    if (!(sigma > 0.0 && sigma < 1.0)) throw InputError("extend_local: sigma must lie in (0, 1)");
    if (!(eps_floor > 0.0)) throw InputError("extend_local: eps_floor must be > 0");
    const int n = f.dim();
    const double tau = 0.5 * (1.0 + sigma);

    AnnulusSampler ann;
    ann.r0 = sigma * radius;
    ann.r1 = radius * (1.0 - 1e-9);
    ann.shells = 24;
    ann.directions = 48;
    for (const auto& z : ann.points(n)) {
        const auto eig = eigen_summary(0.5 * (f.hessian(z) + f.hessian(z).transpose()));
        if (!(eig.lambda_min >= eps_floor))
            throw PreconditionError("extend_local: lambda_min(D^2F) below eps_floor on the annulus");
    }

    // |M|_2 only depends on F where eta is non-constant, i.e. on tau R < |z| < R
    ExtendedModel probe(f, radius, sigma, 0.0);
    AnnulusSampler shell;
    shell.r0 = tau * radius;
    shell.r1 = radius;
    shell.shells = 64;
    shell.directions = 64;
    double max_m = 1.0;  // |(1 - eta) I| on B_R contributes at most sqrt(N); keep a floor of 1
    for (const auto& z : shell.points(n)) max_m = std::max(max_m, probe.m_matrix(z).norm());
    max_m = std::max(max_m, std::sqrt(static_cast<double>(n)));
    const double c = max_m / (1.0 - sigma / tau);

    IntegrandInfo info;
    info.name = "extended";
    info.params = {{"base", f.descriptor()}, {"radius", radius}, {"sigma", sigma}, {"eps_floor", eps_floor}};
    info.minimizer = f.minimizer().norm() < sigma * radius ? f.minimizer() : Vector::Zero(n);
    info.degenerate_points = f.info().degenerate_points;
    if (info_out) *info_out = ExtensionInfo{radius, sigma, tau, c, max_m};
    return Integrand(std::make_shared<ExtendedModel>(f, radius, sigma, c), info);
}

UhlenbeckIndices uhlenbeck_indices(const UhlenbeckProfile& profile) {
    if (!profile.a || !profile.a_prime) throw InputError("uhlenbeck_indices: profile needs a and a'");
    UhlenbeckIndices out;
    out.i_a = std::numeric_limits<double>::infinity();
    out.s_a = -std::numeric_limits<double>::infinity();
    constexpr int kPoints = 1000;
    for (int i = 0; i < kPoints; ++i) {
        const double t = std::pow(10.0, -6.0 + 12.0 * i / (kPoints - 1));
        const double a = profile.a(t);
        if (!(a > 0.0) || !std::isfinite(a)) throw InputError("uhlenbeck_indices: a(t) must be positive and finite");
        const double idx = t * profile.a_prime(t) / a;
        out.i_a = std::min(out.i_a, idx);
        out.s_a = std::max(out.s_a, idx);
    }
    if (!(out.i_a > -1.0)) throw InputError("uhlenbeck_indices: inadmissible profile (i_a <= -1)");
    if (!std::isfinite(out.s_a)) throw InputError("uhlenbeck_indices: inadmissible profile (s_a unbounded)");
    out.k = std::max(1.0 / (1.0 + out.i_a), 1.0 + out.s_a);
    out.p = std::min(2.0 + out.i_a, (2.0 + out.s_a) / (1.0 + out.s_a));
    return out;
}

}  // namespace quc
