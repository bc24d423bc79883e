#include "quc/variational.hpp"

#include "quc/parallel.hpp"
#include "quc/quadrature.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace quc {

ProblemSpec::ProblemSpec(Integrand f)
    : boundary([](const Vector&) { return 0.0; }), source([](const Vector&) { return 0.0; }),
      integrand(std::move(f)) {
    dim = integrand.dim();
}

void ProblemSpec::validate() const {
    if (dim != 2 && dim != 3) throw InputError("ProblemSpec: dimension must be 2 or 3");
    if (integrand.dim() != dim) throw InputError("ProblemSpec: integrand dimension mismatch");
    if (n < 2) throw InputError("ProblemSpec: need at least 2 cells per axis");
    if (!(half_width > 0.0)) throw InputError("ProblemSpec: half width must be > 0");
    if (!boundary || !source) throw InputError("ProblemSpec: boundary and source are required");
    if (!(m > 0.0)) throw InputError("ProblemSpec: m must be > 0");
}

Eigen::Index ProblemSpec::node_count() const {
    Eigen::Index c = 1;
    for (int d = 0; d < dim; ++d) c *= nodes_per_axis();
    return c;
}

Eigen::Index ProblemSpec::cell_count() const {
    Eigen::Index c = 1;
    for (int d = 0; d < dim; ++d) c *= n;
    return c;
}

Vector ProblemSpec::node(Eigen::Index flat) const {
    Vector x(dim);
    for (int d = 0; d < dim; ++d) {
        x(d) = -half_width + static_cast<double>(flat % nodes_per_axis()) * spacing();
        flat /= nodes_per_axis();
    }
    return x;
}

Vector ProblemSpec::cell_center(Eigen::Index flat) const {
    Vector x(dim);
    for (int d = 0; d < dim; ++d) {
        x(d) = -half_width + (static_cast<double>(flat % n) + 0.5) * spacing();
        flat /= n;
    }
    return x;
}

bool ProblemSpec::on_boundary(Eigen::Index flat) const {
    for (int d = 0; d < dim; ++d) {
        const Eigen::Index i = flat % nodes_per_axis();
        if (i == 0 || i == n) return true;
        flat /= nodes_per_axis();
    }
    return false;
}

Vector ProblemSpec::boundary_extension() const {
    Vector u(node_count());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = boundary(node(i));
    return u;
}

RegularizationSchedule RegularizationSchedule::geometric(double eps0, double mu0, int count) {
    if (count < 0 || !(eps0 >= 0.0) || !(mu0 >= 0.0)) throw InputError("geometric schedule: bad parameters");
    RegularizationSchedule s;
    for (int k = 0; k < count; ++k) s.stages.push_back({eps0 * std::pow(4.0, -k), mu0 * std::pow(100.0, -k)});
    s.stages.push_back({0.0, 0.0});
    return s;
}

RegularizationSchedule RegularizationSchedule::plain() { return {{{0.0, 0.0}}}; }

namespace {

// Reference Q1 data on [-1, 1]^N with `order` Gauss points per axis.
struct Q1Ref {
    int dim = 2, nloc = 4, ngp = 4;
    std::vector<Vector> shape;  ///< per gp: values of the nloc shape functions
    std::vector<Matrix> dshape; ///< per gp: N x nloc reference derivatives
    std::vector<double> weight; ///< per gp, on the reference cell

    Q1Ref(int d, int order) : dim(d), nloc(1 << d) {
        const GaussRule g = gauss_legendre(order);
        ngp = 1;
        for (int k = 0; k < d; ++k) ngp *= order;
        for (int q = 0; q < ngp; ++q) {
            Vector xi(d);
            double w = 1.0;
            int rem = q;
            for (int k = 0; k < d; ++k) {
                xi(k) = g.nodes[rem % order];
                w *= g.weights[rem % order];
                rem /= order;
            }
            weight.push_back(w);
            shape.push_back(values(xi));
            dshape.push_back(derivatives(xi));
        }
    }

    Vector values(const Vector& xi) const {
        Vector v(nloc);
        for (int a = 0; a < nloc; ++a) {
            double p = 1.0;
            for (int k = 0; k < dim; ++k) p *= 0.5 * (1.0 + sgn(a, k) * xi(k));
            v(a) = p;
        }
        return v;
    }
    Matrix derivatives(const Vector& xi) const {
        Matrix dn(dim, nloc);
        for (int a = 0; a < nloc; ++a)
            for (int k = 0; k < dim; ++k) {
                double p = 0.5 * sgn(a, k);
                for (int j = 0; j < dim; ++j)
                    if (j != k) p *= 0.5 * (1.0 + sgn(a, j) * xi(j));
                dn(k, a) = p;
            }
        return dn;
    }
    static double sgn(int a, int k) { return (a >> k) & 1 ? 1.0 : -1.0; }
};

const Q1Ref& q1_ref(int dim, int order) {
    static thread_local std::vector<std::unique_ptr<Q1Ref>> cache;
    for (const auto& c : cache)
        if (c->dim == dim && static_cast<int>(c->weight.size()) == static_cast<int>(std::pow(order, dim)) &&
            c->ngp == static_cast<int>(std::pow(order, dim)))
            return *c;
    cache.push_back(std::make_unique<Q1Ref>(dim, order));
    return *cache.back();
}

void cell_nodes(const ProblemSpec& spec, Eigen::Index cell, std::vector<Eigen::Index>& out) {
    const int dim = spec.dim;
    std::vector<Eigen::Index> c(dim);
    Eigen::Index rem = cell;
    for (int d = 0; d < dim; ++d) {
        c[d] = rem % spec.n;
        rem /= spec.n;
    }
    out.resize(1u << dim);
    for (int a = 0; a < (1 << dim); ++a) {
        Eigen::Index flat = 0, stride = 1;
        for (int d = 0; d < dim; ++d) {
            flat += (c[d] + ((a >> d) & 1)) * stride;
            stride *= spec.nodes_per_axis();
        }
        out[a] = flat;
    }
}

// Trapezoid weight of a node.
double node_weight(const ProblemSpec& spec, Eigen::Index flat) {
    double w = std::pow(spec.spacing(), spec.dim);
    for (int d = 0; d < spec.dim; ++d) {
        const Eigen::Index i = flat % spec.nodes_per_axis();
        if (i == 0 || i == spec.n) w *= 0.5;
        flat /= spec.nodes_per_axis();
    }
    return w;
}

Vector source_weights(const ProblemSpec& spec) {
    Vector fw(spec.node_count());
    for (Eigen::Index i = 0; i < fw.size(); ++i) fw(i) = node_weight(spec, i) * spec.source(spec.node(i));
    if (!fw.allFinite()) throw NumericError("source is not finite on the grid");
    return fw;
}

struct Assembly {
    double energy = 0;
    Vector gradient;
    std::vector<Eigen::Triplet<double>> hessian;
    double lipschitz = 0;
};

// Element loop; per-cell results are computed in parallel and reduced serially.
Assembly assemble(const ProblemSpec& spec, const Integrand& f, const Vector& u, const Vector& fw, bool want_grad,
                  bool want_hess) {
    const int dim = spec.dim;
    const Q1Ref& ref = q1_ref(dim, 2);
    const double h = spec.spacing();
    const double jac = std::pow(0.5 * h, dim);
    const double scale = 2.0 / h;
    const Eigen::Index cells = spec.cell_count();
    const int nloc = ref.nloc;

    Vector cell_energy(cells);
    Vector cell_lip(cells);
    Matrix cell_grad(want_grad ? nloc : 0, want_grad ? cells : 0);
    Matrix cell_hess(want_hess ? nloc * nloc : 0, want_hess ? cells : 0);

    parallel_chunks(static_cast<std::size_t>(cells), [&](std::size_t b, std::size_t e) {
        std::vector<Eigen::Index> nodes;
        Vector ue(nloc), z(dim), g(dim);
        Matrix hz(dim, dim), ge(nloc, 1), he(nloc, nloc), bmat(dim, nloc);
        for (std::size_t c = b; c < e; ++c) {
            cell_nodes(spec, static_cast<Eigen::Index>(c), nodes);
            for (int a = 0; a < nloc; ++a) ue(a) = u(nodes[a]);
            double en = 0.0, lip = 0.0;
            if (want_grad) ge.setZero();
            if (want_hess) he.setZero();
            for (int q = 0; q < ref.ngp; ++q) {
                bmat = scale * ref.dshape[q];
                z = bmat * ue;
                const double w = ref.weight[q] * jac;
                en += w * f.value(z);
                lip = std::max(lip, z.norm());
                if (want_grad) {
                    f.gradient(z, g);
                    ge.col(0) += w * bmat.transpose() * g;
                }
                if (want_hess) {
                    f.hessian(z, hz);
                    he += w * bmat.transpose() * hz * bmat;
                }
            }
            cell_energy(c) = en;
            cell_lip(c) = lip;
            if (want_grad) cell_grad.col(c) = ge.col(0);
            if (want_hess) cell_hess.col(c) = Eigen::Map<Vector>(he.data(), nloc * nloc);
        }
    });

    Assembly out;
    out.energy = cell_energy.sum() + fw.dot(u);
    out.lipschitz = cell_lip.maxCoeff();
    if (!std::isfinite(out.energy)) throw NumericError("discrete energy is not finite");
    if (want_grad) out.gradient = fw;
    if (want_hess) out.hessian.reserve(static_cast<std::size_t>(cells) * nloc * nloc);
    std::vector<Eigen::Index> nodes;
    for (Eigen::Index c = 0; c < cells && (want_grad || want_hess); ++c) {
        cell_nodes(spec, c, nodes);
        for (int a = 0; a < nloc; ++a) {
            if (want_grad) out.gradient(nodes[a]) += cell_grad(a, c);
            if (want_hess)
                for (int bb = 0; bb < nloc; ++bb)
                    out.hessian.emplace_back(static_cast<int>(nodes[a]), static_cast<int>(nodes[bb]),
                                             cell_hess(a + nloc * bb, c));
        }
    }
    return out;
}

void require_grid_vector(const ProblemSpec& spec, const Vector& w) {
    if (w.size() != spec.node_count()) throw InputError("nodal vector does not match the grid");
}

}  // namespace

double assemble_energy(const ProblemSpec& spec, const Integrand& f, const Vector& w) {
    spec.validate();
    require_grid_vector(spec, w);
    return assemble(spec, f, w, source_weights(spec), false, false).energy;
}

double assemble_energy(const ProblemSpec& spec, const Vector& w) {
    spec.validate();
    require_grid_vector(spec, w);
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (spec.on_boundary(i)) {
            const double g = spec.boundary(spec.node(i));
            if (std::abs(w(i) - g) > 1e-12 * (1.0 + std::abs(g)))
                throw PreconditionError("assemble_energy: w does not match the boundary data");
        }
    return assemble_energy(spec, spec.integrand, w);
}

Vector energy_gradient(const ProblemSpec& spec, const Integrand& f, const Vector& w) {
    spec.validate();
    require_grid_vector(spec, w);
    return assemble(spec, f, w, source_weights(spec), true, false).gradient;
}

DiscreteSolution minimize(const ProblemSpec& spec, const RegularizationSchedule& schedule,
                          const SolverOptions& options) {
    spec.validate();
    if (schedule.stages.empty()) throw InputError("minimize: empty schedule");
    for (const auto& st : schedule.stages)
        if (!(st.eps >= 0.0) || !(st.mu >= 0.0)) throw InputError("minimize: stage parameters must be >= 0");
    if (!(options.tol > 0.0)) throw InputError("minimize: tol must be > 0");

    const Eigen::Index nn = spec.node_count();
    const Vector fw = source_weights(spec);
    const Vector ext = spec.boundary_extension();
    if (!ext.allFinite()) throw InputError("minimize: boundary data not finite");

    DiscreteSolution sol{spec, ext, 0, 0, 0, 2, {}};
    sol.coupling_exponent = spec.integrand.growth_p().value_or(2.0);
    sol.initial_energy = assemble(spec, spec.integrand, ext, fw, false, false).energy;
    if (options.initial) {
        require_grid_vector(spec, *options.initial);
        sol.u = *options.initial;
        for (Eigen::Index i = 0; i < nn; ++i)
            if (spec.on_boundary(i)) sol.u(i) = ext(i);
    }

    std::vector<Eigen::Index> interior_of(nn, -1);
    std::vector<Eigen::Index> interior;
    for (Eigen::Index i = 0; i < nn; ++i)
        if (!spec.on_boundary(i)) {
            interior_of[i] = static_cast<Eigen::Index>(interior.size());
            interior.push_back(i);
        }
    const Eigen::Index ni = static_cast<Eigen::Index>(interior.size());
    const double cell_measure = std::pow(spec.spacing(), spec.dim);

    for (const auto& st : schedule.stages) {
        Integrand fn = st.eps > 0.0 ? mollify(spec.integrand, st.eps) : spec.integrand;
        if (st.mu > 0.0) fn = add_quadratic(fn, st.mu);

        StageRecord rec;
        rec.stage = st;
        Assembly cur = assemble(spec, fn, sol.u, fw, true, true);
        rec.energy_trace.push_back(cur.energy);
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
        bool analyzed = false;
        auto residual = [&](const Assembly& a) {
            double g = 0.0;
            for (Eigen::Index k = 0; k < ni; ++k) g = std::max(g, std::abs(a.gradient(interior[k])));
            return g / cell_measure;
        };
        double gn = residual(cur);
        while (gn > options.tol) {
            if (rec.iterations >= options.max_newton)
                throw NumericError("minimize: Newton did not converge in stage (eps=" + std::to_string(st.eps) +
                                   ", mu=" + std::to_string(st.mu) + "), residual " + std::to_string(gn));
            ++rec.iterations;
            std::vector<Eigen::Triplet<double>> trip;
            trip.reserve(cur.hessian.size());
            double max_diag = 0.0;
            for (const auto& t : cur.hessian) {
                const Eigen::Index r = interior_of[t.row()], c = interior_of[t.col()];
                if (r < 0 || c < 0) continue;
                trip.emplace_back(static_cast<int>(r), static_cast<int>(c), t.value());
                if (r == c) max_diag = std::max(max_diag, std::abs(t.value()));
            }
            // floor keeps the Newton system definite where D^2F degenerates
            const double floor = 1e-12 * std::max(max_diag, 1e-300);
            for (Eigen::Index k = 0; k < ni; ++k) trip.emplace_back(static_cast<int>(k), static_cast<int>(k), floor);
            Eigen::SparseMatrix<double> hmat(ni, ni);
            hmat.setFromTriplets(trip.begin(), trip.end());
            if (!analyzed) {
                solver.analyzePattern(hmat);
                analyzed = true;
            }
            solver.factorize(hmat);
            if (solver.info() != Eigen::Success) throw NumericError("minimize: Newton system is not definite");
            Vector rhs(ni);
            for (Eigen::Index k = 0; k < ni; ++k) rhs(k) = -cur.gradient(interior[k]);
            Vector dir = solver.solve(rhs);
            double slope = -rhs.dot(dir);
            if (!(slope < 0.0)) {
                // fallback: diagonally preconditioned steepest descent
                const Vector diag = hmat.diagonal();
                dir = rhs.cwiseQuotient(diag);
                slope = -rhs.dot(dir);
            }
            double alpha = 1.0;
            Vector trial = sol.u;
            Assembly next;
            bool accepted = false;
            while (alpha > 1e-12) {
                trial = sol.u;
                for (Eigen::Index k = 0; k < ni; ++k) trial(interior[k]) += alpha * dir(k);
                next = assemble(spec, fn, trial, fw, false, false);
                if (next.energy <= cur.energy + 1e-4 * alpha * slope) {
                    accepted = true;
                    break;
                }
                // at roundoff level the energy cannot resolve progress; accept a full step
                // that does not raise the energy beyond its floating-point noise
                if (alpha == 1.0 && next.energy - cur.energy <= 64.0 * std::numeric_limits<double>::epsilon() *
                                                                      (std::abs(cur.energy) + 1.0)) {
                    Assembly probe = assemble(spec, fn, trial, fw, true, false);
                    if (residual(probe) < gn) {
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if (!accepted)
                throw NumericError("minimize: line search failed in stage (eps=" + std::to_string(st.eps) +
                                   "), residual " + std::to_string(gn));
            if (next.energy > cur.energy) rec.energy_monotone = rec.energy_monotone &&
                                              next.energy - cur.energy <= 64.0 * std::numeric_limits<double>::epsilon() *
                                                                               (std::abs(cur.energy) + 1.0);
            sol.u = trial;
            cur = assemble(spec, fn, sol.u, fw, true, true);
            rec.energy_trace.push_back(cur.energy);
            gn = residual(cur);
        }
        rec.energy = cur.energy;
        rec.gradient_norm = gn;
        rec.lipschitz = cur.lipschitz;
        rec.exact_energy = assemble(spec, spec.integrand, sol.u, fw, false, false).energy;
        const double p = sol.coupling_exponent;
        rec.coupling = st.mu > 0.0 ? std::pow(st.mu, p - 1.0) * std::pow(std::max(rec.lipschitz, 1e-300), 2.0 - p) : 0.0;
        sol.stages.push_back(rec);
    }
    sol.energy = sol.stages.back().exact_energy;
    sol.gradient_norm = sol.stages.back().gradient_norm;
    return sol;
}

Vector prolongate(const DiscreteSolution& coarse, const ProblemSpec& fine) {
    const ProblemSpec& cs = coarse.spec;
    if (cs.dim != fine.dim || cs.half_width != fine.half_width) throw InputError("prolongate: domains differ");
    const Q1Ref& ref = q1_ref(cs.dim, 2);
    Vector out(fine.node_count());
    std::vector<Eigen::Index> nodes;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (fine.on_boundary(i)) {
            out(i) = fine.boundary(fine.node(i));
            continue;
        }
        const Vector x = fine.node(i);
        Eigen::Index cell = 0, stride = 1;
        Vector xi(cs.dim);
        for (int d = 0; d < cs.dim; ++d) {
            const double t = (x(d) + cs.half_width) / cs.spacing();
            const Eigen::Index c = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(t)), 0, cs.n - 1);
            xi(d) = 2.0 * (t - static_cast<double>(c)) - 1.0;
            cell += c * stride;
            stride *= cs.n;
        }
        cell_nodes(cs, cell, nodes);
        const Vector sh = ref.values(xi);
        double v = 0.0;
        for (int a = 0; a < ref.nloc; ++a) v += sh(a) * coarse.u(nodes[a]);
        out(i) = v;
    }
    return out;
}

Matrix cell_gradients(const ProblemSpec& spec, const Vector& u) {
    require_grid_vector(spec, u);
    const Q1Ref& ref = q1_ref(spec.dim, 2);
    const Matrix dn = (2.0 / spec.spacing()) * ref.derivatives(Vector::Zero(spec.dim));
    Matrix out(spec.dim, spec.cell_count());
    std::vector<Eigen::Index> nodes;
    Vector ue(ref.nloc);
    for (Eigen::Index c = 0; c < spec.cell_count(); ++c) {
        cell_nodes(spec, c, nodes);
        for (int a = 0; a < ref.nloc; ++a) ue(a) = u(nodes[a]);
        out.col(c) = dn * ue;
    }
    return out;
}

Matrix stress_field(const DiscreteSolution& sol) {
    const Matrix du = cell_gradients(sol.spec, sol.u);
    Matrix v(du.rows(), du.cols());
    Vector g(du.rows());
    for (Eigen::Index c = 0; c < du.cols(); ++c) {
        sol.spec.integrand.gradient(du.col(c), g);
        v.col(c) = g;
    }
    return v;
}

double euler_lagrange_residual(const ProblemSpec& spec, const Vector& w, int test_cells, double p_norm) {
    spec.validate();
    require_grid_vector(spec, w);
    if (test_cells < 1 || 2 * test_cells > spec.n) throw InputError("euler_lagrange_residual: bad test spacing");
    const double p = p_norm > 0.0 ? p_norm : 2.0;
    const Vector grad = assemble(spec, spec.integrand, w, source_weights(spec), true, false).gradient;
    const int dim = spec.dim;
    const int k = test_cells;
    const Eigen::Index npa = spec.nodes_per_axis();

    // ||phi||_{W^{1,p}} of one hat of half-width k cells (translation invariant)
    double norm_p = 0.0;
    {
        const Q1Ref& ref = q1_ref(dim, 3);
        const double h = spec.spacing();
        const double jac = std::pow(0.5 * h, dim);
        std::vector<int> idx(dim, 0);
        const int span = 2 * k;
        while (true) {
            // cell with lower corner at offset idx - k from the hat center
            for (int q = 0; q < ref.ngp; ++q) {
                double val = 1.0;
                Vector dv = Vector::Ones(dim);
                Vector xi = Vector::Zero(dim);
                // reconstruct the Gauss point from the shape data
                for (int d = 0; d < dim; ++d) {
                    double s = 0.0;
                    for (int a = 0; a < ref.nloc; ++a) s += ref.shape[q](a) * Q1Ref::sgn(a, d);
                    xi(d) = s;
                }
                Vector fac(dim), dfac(dim);
                for (int d = 0; d < dim; ++d) {
                    const double t = (idx[d] - k) + 0.5 * (xi(d) + 1.0);
                    fac(d) = std::max(0.0, 1.0 - std::abs(t) / k);
                    dfac(d) = std::abs(t) < k ? -(t > 0 ? 1.0 : -1.0) / (k * h) : 0.0;
                }
                for (int d = 0; d < dim; ++d) val *= fac(d);
                for (int d = 0; d < dim; ++d) {
                    double prod = dfac(d);
                    for (int j = 0; j < dim; ++j)
                        if (j != d) prod *= fac(j);
                    dv(d) = prod;
                }
                norm_p += ref.weight[q] * jac * (std::pow(std::abs(val), p) + std::pow(dv.norm(), p));
            }
            int d = 0;
            while (d < dim && ++idx[d] == span) idx[d++] = 0;
            if (d == dim) break;
        }
    }
    const double norm = std::pow(norm_p, 1.0 / p);

    double worst = 0.0;
    std::vector<Eigen::Index> ci(dim);
    std::vector<int> off(dim);
    for (Eigen::Index c = 0; c < spec.node_count(); ++c) {
        Eigen::Index rem = c;
        bool ok = true;
        for (int d = 0; d < dim; ++d) {
            ci[d] = rem % npa;
            rem /= npa;
            if (ci[d] % k != 0 || ci[d] < k || ci[d] > spec.n - k) ok = false;
        }
        if (!ok) continue;
        double pairing = 0.0;
        std::fill(off.begin(), off.end(), -k);
        while (true) {
            Eigen::Index flat = 0, stride = 1;
            double phi = 1.0;
            for (int d = 0; d < dim; ++d) {
                flat += (ci[d] + off[d]) * stride;
                stride *= npa;
                phi *= 1.0 - std::abs(static_cast<double>(off[d])) / k;
            }
            if (phi > 0.0) pairing += phi * grad(flat);
            int d = 0;
            while (d < dim && ++off[d] > k) off[d++] = -k;
            if (d == dim) break;
        }
        worst = std::max(worst, std::abs(pairing) / norm);
    }
    return worst;
}

double euler_lagrange_residual(const DiscreteSolution& sol, int test_cells, double p_norm) {
    return euler_lagrange_residual(sol.spec, sol.u, test_cells, p_norm);
}

double w1p_error(const ProblemSpec& spec, const Vector& w, const ScalarFn& u_exact,
                 const std::function<Vector(const Vector&)>& du_exact, double p) {
    spec.validate();
    require_grid_vector(spec, w);
    if (!(p >= 1.0)) throw InputError("w1p_error: p must be >= 1");
    const Q1Ref& ref = q1_ref(spec.dim, 3);
    const double h = spec.spacing();
    const double jac = std::pow(0.5 * h, spec.dim);
    std::vector<Eigen::Index> nodes;
    Vector ue(ref.nloc);
    double acc = 0.0;
    for (Eigen::Index c = 0; c < spec.cell_count(); ++c) {
        cell_nodes(spec, c, nodes);
        for (int a = 0; a < ref.nloc; ++a) ue(a) = w(nodes[a]);
        const Vector x0 = spec.node(nodes[0]);
        for (int q = 0; q < ref.ngp; ++q) {
            Vector x = x0;
            for (int a = 0; a < ref.nloc; ++a)
                for (int d = 0; d < spec.dim; ++d) x(d) += ref.shape[q](a) * (((a >> d) & 1) ? h : 0.0);
            const double uh = ref.shape[q].dot(ue);
            const Vector duh = (2.0 / h) * ref.dshape[q] * ue;
            const double w_q = ref.weight[q] * jac;
            acc += w_q * (std::pow(std::abs(uh - u_exact(x)), p) + std::pow((duh - du_exact(x)).norm(), p));
        }
    }
    return std::pow(acc, 1.0 / p);
}

namespace {

// Area of {x in [x0, x1] x [y0, y1] : |x| <= rho} for a disc centred at the origin.
double disc_rect_area(double x0, double x1, double y0, double y1, double rho) {
    // int_{x0}^{x1} length([y0, y1] cap [-s, s]) dx, s = sqrt(rho^2 - x^2); the integrand is
    // smooth between the breakpoints where s crosses y0 or y1, so split there
    std::vector<double> cuts{x0, x1};
    for (double y : {y0, y1})
        if (std::abs(y) < rho) {
            const double xc = std::sqrt(rho * rho - y * y);
            for (double c : {-xc, xc})
                if (c > x0 && c < x1) cuts.push_back(c);
        }
    for (double c : {-rho, rho})
        if (c > x0 && c < x1) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    // antiderivative of sqrt(rho^2 - x^2)
    auto prim = [rho](double x) {
        const double t = std::clamp(x / rho, -1.0, 1.0);
        return 0.5 * (x * std::sqrt(std::max(0.0, rho * rho - x * x)) + rho * rho * std::asin(t));
    };
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        const double mid = 0.5 * (a + b);
        if (std::abs(mid) >= rho) continue;
        const double s = std::sqrt(rho * rho - mid * mid);
        // on this piece each bound is either a fixed y or +-s
        const bool top_is_s = s < y1, bottom_is_s = -s > y0;
        if (std::min(y1, s) <= std::max(y0, -s)) continue;
        double top = top_is_s ? prim(b) - prim(a) : y1 * (b - a);
        double bottom = bottom_is_s ? -(prim(b) - prim(a)) : y0 * (b - a);
        area += top - bottom;
    }
    return area;
}

// Fraction of each cell inside the ball |x - c| <= rho: exact in 2-D, 8^3 midpoint
// subsamples in 3-D.
Vector coverage(const ProblemSpec& spec, const Vector& center, double rho) {
    const int dim = spec.dim;
    const double h = spec.spacing();
    Vector out = Vector::Zero(spec.cell_count());
    for (Eigen::Index c = 0; c < spec.cell_count(); ++c) {
        const Vector xc = spec.cell_center(c);
        const double dist = (xc - center).norm();
        const double half_diag = 0.5 * h * std::sqrt(static_cast<double>(dim));
        if (dist - half_diag > rho) continue;
        if (dist + half_diag <= rho) {
            out(c) = 1.0;
            continue;
        }
        const Vector lo = xc - center - Vector::Constant(dim, 0.5 * h);
        if (dim == 2) {
            out(c) = disc_rect_area(lo(0), lo(0) + h, lo(1), lo(1) + h, rho) / (h * h);
            continue;
        }
        const int sub = 8;
        int inside = 0;
        for (int s = 0; s < sub * sub * sub; ++s) {
            Vector x = lo;
            int rem = s;
            for (int d = 0; d < dim; ++d) {
                x(d) += h * (rem % sub + 0.5) / sub;
                rem /= sub;
            }
            if (x.norm() <= rho) ++inside;
        }
        out(c) = static_cast<double>(inside) / (sub * sub * sub);
    }
    return out;
}

// Forward-difference DV per cell (Frobenius norm); NaN where a forward neighbour is missing.
Vector forward_dv_norm(const ProblemSpec& spec, const Matrix& v) {
    const int dim = spec.dim;
    const double h = spec.spacing();
    Vector out(spec.cell_count());
    for (Eigen::Index c = 0; c < spec.cell_count(); ++c) {
        Eigen::Index rem = c, stride = 1;
        double sq = 0.0;
        bool ok = true;
        for (int d = 0; d < dim; ++d) {
            const Eigen::Index i = rem % spec.n;
            rem /= spec.n;
            if (i + 1 >= spec.n) {
                ok = false;
                break;
            }
            sq += ((v.col(c + stride) - v.col(c)) / h).squaredNorm();
            stride *= spec.n;
        }
        out(c) = ok ? std::sqrt(sq) : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

double weighted_lm(const Vector& weights, const Vector& values, double m, double cell) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < weights.size(); ++c)
        if (weights(c) > 0.0) {
            if (!std::isfinite(values(c))) throw PreconditionError("localized norm touches the domain edge");
            acc += weights(c) * cell * std::pow(std::abs(values(c)), m);
        }
    return std::pow(acc, 1.0 / m);
}

void require_inside(const ProblemSpec& spec, const Vector& center, double rho, const char* what) {
    if (center.size() != spec.dim) throw InputError(std::string(what) + ": center dimension mismatch");
    for (int d = 0; d < spec.dim; ++d)
        if (std::abs(center(d)) + rho > spec.half_width + 1e-12)
            throw PreconditionError(std::string(what) + ": ball not inside the domain");
}

}  // namespace

RegularityReport sobolev_report(const DiscreteSolution& sol, const Ball& b, double m, std::optional<double> theta) {
    const ProblemSpec& spec = sol.spec;
    if (!(b.radius > 0.0)) throw InputError("sobolev_report: radius must be > 0");
    if (!(m >= 1.0)) throw InputError("sobolev_report: m must be >= 1");
    require_inside(spec, b.center, 4.0 * b.radius, "sobolev_report (4B)");
    RegularityReport rep;
    rep.m = m;
    if (theta) {
        rep.theta = *theta;
    } else if (auto k = spec.integrand.declared_k()) {
        const double p = 1.0 + 1.0 / *k, q = 1.0 + *k;
        rep.theta = std::min(p / (q - 1.0), 1.0);
    } else {
        rep.theta = 1.0;
    }
    if (!(rep.theta > 0.0 && rep.theta <= m)) throw InputError("sobolev_report: theta must lie in (0, m]");

    const Matrix v = stress_field(sol);
    Vector vnorm(v.cols()), fval(v.cols());
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        vnorm(c) = v.col(c).norm();
        fval(c) = spec.source(spec.cell_center(c));
    }
    const double cell = std::pow(spec.spacing(), spec.dim);
    const Vector wb = coverage(spec, b.center, b.radius);
    const Vector w2b = coverage(spec, b.center, 2.0 * b.radius);
    rep.v_lm_b = weighted_lm(wb, vnorm, m, cell);
    rep.dv_lm_b = weighted_lm(wb, forward_dv_norm(spec, v), m, cell);
    rep.v_w1m_b = std::pow(std::pow(rep.v_lm_b, m) + std::pow(rep.dv_lm_b, m), 1.0 / m);
    rep.f_lm_2b = weighted_lm(w2b, fval, m, cell);
    rep.v_ltheta_2b = weighted_lm(w2b, vnorm, rep.theta, cell);
    const double den = rep.f_lm_2b + rep.v_ltheta_2b;
    rep.c_meas = den > 0.0 ? rep.v_w1m_b / den : std::numeric_limits<double>::infinity();
    return rep;
}

bool c_meas_grows(const std::vector<double>& c) {
    if (c.size() < 3) return false;
    const std::size_t n = c.size();
    return c[n - 1] > 1.1 * c[n - 2] && c[n - 2] > 1.1 * c[n - 3];
}

CaccioppoliReport caccioppoli_check(const DiscreteSolution& sol, double r, double s, double big_r,
                                    const Vector& center) {
    const ProblemSpec& spec = sol.spec;
    if (!(big_r > 0.0 && big_r <= r && r < s && s <= 2.0 * big_r))
        throw InputError("caccioppoli_check: need R <= r < s <= 2R");
    require_inside(spec, center, 2.0 * big_r, "caccioppoli_check (B_2R)");
    if (s - r < 4.0 * spec.spacing()) throw InputError("caccioppoli_check: annulus thinner than 4 cells");
    CaccioppoliReport rep;
    rep.r = r;
    rep.s = s;
    rep.big_r = big_r;
    const Matrix v = stress_field(sol);
    const Vector dvn = forward_dv_norm(spec, v);
    const double cell = std::pow(spec.spacing(), spec.dim);
    const Vector wr = coverage(spec, center, r), ws = coverage(spec, center, s), w2 = coverage(spec, center, 2.0 * big_r);
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        if (wr(c) > 0.0) {
            if (!std::isfinite(dvn(c))) throw PreconditionError("caccioppoli_check: B_r touches the domain edge");
            rep.lhs += wr(c) * cell * dvn(c) * dvn(c);
        }
        rep.annulus += (ws(c) - wr(c)) * cell * v.col(c).squaredNorm();
        if (w2(c) > 0.0) {
            const double f = spec.source(spec.cell_center(c));
            rep.source += w2(c) * cell * f * f;
        }
    }
    const double k = spec.integrand.declared_k().value_or(1.0);
    const double e = 1.0 - 1.0 / k;
    rep.c_k = 1.0 / (1.0 - e * e);
    const double rhs_unit = rep.annulus / ((s - r) * (s - r)) + rep.source;
    rep.c_empirical = rhs_unit > 0.0 ? rep.lhs / rhs_unit : 0.0;
    rep.holds_with_c_k = rep.lhs <= rep.c_k * rhs_unit;
    return rep;
}

}  // namespace quc
