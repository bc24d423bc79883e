#include "commands.hpp"

#include "quc/gallery.hpp"
#include "quc/integrand.hpp"
#include "quc/matrix_core.hpp"
#include "quc/radial.hpp"
#include "quc/spectral.hpp"
#include "quc/variational.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>

namespace quc::cli {

namespace {

/// JSON has no infinity; non-finite values become null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

bool all_true(const json& checks) {
    for (const auto& [k, v] : checks.items())
        if (!v.get<bool>()) return false;
    return true;
}

void emit(const RunContext& ctx, const json& summary, const std::string& csv) {
    if (ctx.config().format == "csv" && !csv.empty())
        std::cout << csv;
    else
        std::cout << summary.dump(2) << "\n";
}

RadialSource make_source(const std::string& kind, double value, double beta) {
    if (kind == "const") {
        if (beta != 0.0) throw InputError("source 'const' takes no beta");
        return RadialSource::constant(value);
    }
    if (kind == "power") return RadialSource::power(value, beta);
    throw InputError("unknown source kind '" + kind + "' (const | power)");
}

json source_json(const RadialSource& s) { return {{"kind", s.kind}, {"value", s.value}, {"beta", s.beta}}; }

}  // namespace

// ---------------------------------------------------------------------------

bool run_matrix_check(RunContext& ctx, const MatrixCheckArgs& a) {
    if (a.trials < 1) throw InputError("--trials must be >= 1");
    const auto dims = parse_int_list(a.dims);
    for (int d : dims)
        if (d < 1) throw InputError("--dims entries must be >= 1");
    ctx.inputs() = {{"trials", a.trials}, {"dims", dims}, {"seed", ctx.config().seed}};

    const auto stats = run_skew_bound_trials(dims, a.trials, ctx.config().seed);
    json rows = json::array();
    Csv csv({"dim", "trials", "violations", "worst_relative_slack", "max_tightness", "extremal_lhs", "extremal_rhs"});
    bool no_violation = true, extremal_equal = true;
    for (const auto& s : stats) {
        json row = {{"dim", s.dim},
                    {"trials", s.trials},
                    {"violations", s.violations},
                    {"worst_relative_slack", num(s.worst_relative_slack)},
                    {"max_tightness", s.max_tightness}};
        no_violation = no_violation && s.violations == 0;
        json ext = nullptr;
        std::string el, er;
        if (s.dim >= 2) {
            const auto e = extremal_skew_pair(s.dim, 1.0, 4.0);
            ext = {{"lambda_min", 1.0}, {"lambda_max", 4.0}, {"lhs", e.lhs}, {"rhs", e.rhs}};
            extremal_equal = extremal_equal && std::abs(e.lhs - e.rhs) <= 1e-12 * std::max(1.0, e.rhs);
            el = fmt(e.lhs);
            er = fmt(e.rhs);
        }
        row["extremal"] = ext;
        rows.push_back(row);
        csv.row({std::to_string(s.dim), std::to_string(s.trials), std::to_string(s.violations),
                 fmt(s.worst_relative_slack), fmt(s.max_tightness), el, er});
    }
    json checks = {{"no_violations", no_violation}, {"extremal_equality", extremal_equal}};
    const bool pass = all_true(checks);
    json out = {{"schema_version", kSchemaVersion}, {"seed", ctx.config().seed}, {"trials_per_dim", a.trials},
                {"dims", rows}, {"checks", checks}, {"pass", pass}};
    ctx.write_json("matrix_check.json", out);
    ctx.write_file("matrix_check.csv", csv.str());
    emit(ctx, out, csv.str());
    return pass;
}

// ---------------------------------------------------------------------------

bool run_integrand(RunContext& ctx, const IntegrandArgs& a) {
    json descriptor;
    if (!a.spec.empty() == !ctx.config().config_path.empty())
        throw InputError("integrand: give exactly one of --spec or --config");
    if (!a.spec.empty()) {
        try {
            descriptor = json::parse(a.spec);
        } catch (const json::exception& e) {
            throw InputError(std::string("--spec is not valid JSON: ") + e.what());
        }
    } else {
        const json cfg = load_json_file(ctx.config().config_path);
        reject_unknown_keys(cfg, {"schema_version", "integrand"}, "integrand config");
        if (cfg.value("schema_version", 0) != kSchemaVersion) throw InputError("integrand config: schema_version must be 1");
        if (!cfg.contains("integrand")) throw InputError("integrand config: missing 'integrand'");
        descriptor = cfg.at("integrand");
    }
    const Integrand f = make_integrand(descriptor);
    AnnulusSampler sampler;
    sampler.r0 = a.r0;
    sampler.r1 = a.r1;
    sampler.shells = a.shells;
    sampler.directions = a.directions;
    sampler.seed = ctx.config().seed;
    ctx.inputs() = {{"integrand", descriptor}, {"shells", a.shells}, {"directions", a.directions},
                    {"r0", a.r0}, {"r1", a.r1}, {"seed", ctx.config().seed}};

    const double k_est = estimate_k(f, sampler);
    json checks = json::object();
    json out = {{"schema_version", kSchemaVersion},
                {"descriptor", f.descriptor()},
                {"dim", f.dim()},
                {"hessian_kind", f.hessian_kind() == HessianKind::Analytic ? "analytic" : "finite_difference"},
                {"declared_k", f.declared_k() ? json(*f.declared_k()) : json(nullptr)},
                {"growth_p", f.growth_p() ? json(*f.growth_p()) : json(nullptr)},
                {"growth_q", f.growth_q() ? json(*f.growth_q()) : json(nullptr)},
                {"estimated_k", num(k_est)},
                {"sampler", {{"r0", a.r0}, {"r1", a.r1}, {"shells", a.shells}, {"directions", a.directions}}}};
    if (f.declared_k()) {
        const double k = *f.declared_k();
        checks["estimated_k_within_declared"] = k_est <= k * (1.0 + 1e-6) + 1e-9;
        const auto g = verify_growth(f, k);
        out["growth"] = {{"p", g.p}, {"q", g.q}, {"c_lower", num(g.c_lower)}, {"c_upper", num(g.c_upper)},
                         {"c", num(g.c)}, {"holds", g.holds}, {"worst_point", vec_json(g.worst_point)}};
        checks["growth_holds"] = g.holds;
    } else {
        out["growth"] = nullptr;
    }

    // per-shell maximum eigen ratio
    Csv shells({"radius", "max_ratio"});
    for (int i = 0; i < a.shells; ++i) {
        AnnulusSampler one = sampler;
        const double t = a.shells == 1 ? 0.0 : static_cast<double>(i) / (a.shells - 1);
        one.r0 = one.r1 = a.r0 * std::pow(a.r1 / a.r0, t);
        one.shells = 1;
        double worst = 0;
        bool any = false;
        for (const auto& z : one.points(f.dim())) {
            const double r = eigen_ratio_at(f, z);
            if (std::isfinite(r)) {
                worst = std::max(worst, r);
                any = true;
            }
        }
        shells.row({fmt(one.r0), any ? fmt(worst) : std::string("nan")});
    }
    ctx.write_file("integrand_shells.csv", shells.str());

    if (descriptor.value("name", std::string()) == "uhlenbeck") {
        const double p = descriptor.at("p").get<double>();
        const auto prof = descriptor.value("profile", std::string("power")) == "power" ? power_profile(p)
                                                                                       : regularized_power_profile(p);
        const auto ix = uhlenbeck_indices(prof);
        out["uhlenbeck_indices"] = {{"i_a", ix.i_a}, {"s_a", ix.s_a}, {"k", ix.k}, {"p", ix.p}};
        Csv table({"t", "t_a_prime_over_a"});
        for (int i = 0; i <= 48; ++i) {
            const double t = std::pow(10.0, -6.0 + 12.0 * i / 48.0);
            table.row({fmt(t), fmt(t * prof.a_prime(t) / prof.a(t))});
        }
        ctx.write_file("uhlenbeck_index_table.csv", table.str());
    } else {
        out["uhlenbeck_indices"] = nullptr;
    }
    const bool pass = all_true(checks);
    out["checks"] = checks;
    out["pass"] = pass;
    ctx.write_json("integrand.json", out);
    emit(ctx, out, shells.str());
    return pass;
}

// ---------------------------------------------------------------------------

bool run_cordes(RunContext& ctx, const CordesArgs& a) {
    if (a.dim < 2) throw InputError("--N must be >= 2");
    if (!(a.m > 1.0) || !std::isfinite(a.m)) throw InputError("--m must be > 1");
    if (!(a.k >= 1.0) || !std::isfinite(a.k)) throw InputError("--K must be finite and >= 1");
    CordesWindow window;
    window.lower = a.window_lower;
    window.upper = a.window_upper;
    ctx.inputs() = {{"N", a.dim}, {"m", a.m}, {"K", a.k}, {"window_lower", a.window_lower},
                    {"window_upper", a.window_upper}, {"empirical", a.empirical}};

    const double mhat = conjugate_max(a.m);
    const double k0 = cordes_K0(a.dim, a.m);
    const double e = ellipticity_defect(a.k);
    const double c = std::sqrt(2.0) * a.dim * a.dim * (mhat - 1.0);
    const double lhs = c * e;
    const double delta0 = cordes_delta0(a.k, a.dim, window);
    json out = {{"schema_version", kSchemaVersion},
                {"N", a.dim},
                {"m", a.m},
                {"K", a.k},
                {"mhat", mhat},
                {"K0", num(k0)},
                {"ellipticity_defect", e},
                {"cordes_lhs", lhs},
                {"admissible", lhs < 1.0},
                {"T_bound", certified_T_bound(a.dim, a.m)},
                {"window", {{"lower", a.window_lower}, {"upper", a.window_upper}}},
                {"delta0", delta0},
                {"admissible_m_interval", {2.0 - delta0, 2.0 + delta0}}};
    json checks = {{"K0_formula", std::abs(k0 - 1.0 / (1.0 - 1.0 / c)) <= 1e-12 * k0},
                   {"admissible_iff_K_below_K0", (lhs < 1.0) == (a.k < k0)},
                   {"delta0_nonnegative", delta0 >= 0.0 && std::isfinite(delta0)}};
    if (a.empirical) {
        const double d_emp = cordes_delta0_empirical(a.k, a.dim, window, a.grid, a.trials, ctx.config().seed);
        out["empirical"] = {{"grid", a.grid}, {"trials", a.trials}, {"delta0", d_emp}};
        checks["empirical_not_below_certified"] = d_emp >= delta0 - 1e-12;
    } else {
        out["empirical"] = nullptr;
    }
    const bool pass = all_true(checks);
    out["checks"] = checks;
    out["pass"] = pass;
    ctx.write_json("cordes.json", out);
    emit(ctx, out, "");
    return pass;
}

// ---------------------------------------------------------------------------

namespace {

double relative_distance(const SpectralField& a, const SpectralField& b) {
    double num2 = 0, den2 = 0;
    for (std::size_t c = 0; c < a.coeffs.size(); ++c) {
        num2 += (a.coeffs[c] - b.coeffs[c]).squaredNorm();
        den2 += b.coeffs[c].squaredNorm();
    }
    return den2 > 0 ? std::sqrt(num2 / den2) : std::sqrt(num2);
}

}  // namespace

bool run_riesz_check(RunContext& ctx, const RieszArgs& a) {
    if (a.trials < 1) throw InputError("--trials must be >= 1");
    const auto ms = parse_double_list(a.m_list);
    const PeriodicGrid grid(a.dim, a.n);
    ctx.inputs() = {{"N", a.dim}, {"n", a.n}, {"trials", a.trials}, {"kmax", a.kmax}, {"m", ms},
                    {"probe_trials", a.probe_trials}, {"seed", ctx.config().seed}};

    std::vector<std::string> header = {"trial", "seed", "identity_residual", "roundtrip_error", "riesz_sum_defect",
                                       "riesz_isometry_defect", "cutoff_imbalance"};
    for (double m : ms) header.push_back("lm_ratio_m" + fmt(m));
    Csv csv(header);

    double worst_id = 0, worst_rt = 0, worst_sum = 0, worst_iso = 0, worst_cut = 0, worst_lm = 0;
    int lm_failures = 0;
    Cutoff cutoff;
    cutoff.center = Vector::Constant(a.dim, std::numbers::pi);
    for (int t = 0; t < a.trials; ++t) {
        const std::uint64_t seed = ctx.config().seed + static_cast<std::uint64_t>(t);
        const auto v = random_band_limited_vector(grid, seed, a.kmax);
        const double id = divcurl_identity_residual(v);
        const double rt = relative_distance(divcurl_reconstruct(divergence_of(v), curl_of(v)), gradient_of(v));

        const auto u = random_band_limited_scalar(grid, seed, a.kmax);
        SpectralField sum(grid, FieldKind::Scalar);
        sum.coeffs[0] = CVector::Zero(grid.size());
        double iso = 0;
        for (int j = 0; j < a.dim; ++j) {
            const auto rj = riesz_apply(j, u);
            sum.coeffs[0] += riesz_apply(j, rj).coeffs[0];
            iso += std::pow(l2_norm(rj), 2);
        }
        sum.coeffs[0] += u.coeffs[0];  // sum_j R_j R_j = -I on mean-free fields
        const double un = l2_norm(u);
        const double sum_defect = l2_norm(sum) / un;
        const double iso_defect = std::abs(iso - un * un) / (un * un);
        const double cut = cutoff_identity_check(v, cutoff).imbalance;

        std::vector<std::string> row = {std::to_string(t), std::to_string(seed), fmt(id), fmt(rt), fmt(sum_defect),
                                        fmt(iso_defect), fmt(cut)};
        for (double m : ms) {
            const auto r = verify_lm_bound(v, m);
            if (!r.holds) ++lm_failures;
            worst_lm = std::max(worst_lm, r.lhs / r.rhs);
            row.push_back(fmt(r.lhs / r.rhs));
        }
        csv.row(row);
        worst_id = std::max(worst_id, id);
        worst_rt = std::max(worst_rt, rt);
        worst_sum = std::max(worst_sum, sum_defect);
        worst_iso = std::max(worst_iso, iso_defect);
        worst_cut = std::max(worst_cut, cut);
        if (t == 0 && a.export_field) {
            const auto phys = to_physical(v);
            ctx.write_file("riesz_field_v1.txt", export_grid_text(grid, phys[0]));
            ctx.write_file("riesz_field_div.txt", export_grid_text(grid, to_physical(divergence_of(v))[0]));
        }
    }
    const double probe = estimate_T_norm(grid, 2.0, a.probe_trials, ctx.config().seed);
    json checks = {{"identity", worst_id <= 1e-10},          {"roundtrip", worst_rt <= 1e-10},
                   {"riesz_sum", worst_sum <= 1e-10},        {"riesz_isometry", worst_iso <= 1e-10},
                   {"cutoff_identity", worst_cut <= 1e-4},   {"lm_bound", lm_failures == 0},
                   {"probe_m2", probe >= 0.9 && probe <= 1.0 + 1e-9}};
    const bool pass = all_true(checks);
    json out = {{"schema_version", kSchemaVersion},
                {"N", a.dim},
                {"n", a.n},
                {"trials", a.trials},
                {"worst", {{"identity_residual", worst_id},
                           {"roundtrip_error", worst_rt},
                           {"riesz_sum_defect", worst_sum},
                           {"riesz_isometry_defect", worst_iso},
                           {"cutoff_imbalance", worst_cut},
                           {"lm_ratio", worst_lm}}},
                {"lm_failures", lm_failures},
                {"probe_T_norm_m2", probe},
                {"checks", checks},
                {"pass", pass}};
    ctx.write_file("riesz_check.csv", csv.str());
    ctx.write_json("riesz_check.json", out);
    emit(ctx, out, csv.str());
    return pass;
}

// ---------------------------------------------------------------------------

namespace {

struct SolveSetup {
    json echo;
    int dim = 2;
    double half_width = 1;
    std::vector<int> levels;
    json integrand;
    ScalarFn source, boundary;
    std::optional<RadialSolution> oracle;
    double oracle_p = 2;
    double m = 2;
    RegularizationSchedule schedule;
    SolverOptions options;
    Ball ball;
    std::optional<double> theta;
};

double get_number(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw InputError(where + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

Vector get_vector(const json& j, const char* key, int dim, const std::string& where) {
    if (!j.contains(key)) return Vector::Zero(dim);
    const auto& a = j.at(key);
    if (!a.is_array() || static_cast<int>(a.size()) != dim)
        throw InputError(where + ": '" + key + "' must be an array of " + std::to_string(dim) + " numbers");
    Vector v(dim);
    for (int i = 0; i < dim; ++i) {
        if (!a[i].is_number()) throw InputError(where + ": '" + key + "' must hold numbers");
        v(i) = a[i].get<double>();
    }
    return v;
}

SolveSetup parse_solve_config(const json& cfg, const std::string& level_override) {
    reject_unknown_keys(cfg, {"schema_version", "dim", "half_width", "levels", "integrand", "source", "boundary", "m",
                              "schedule", "solver", "ball", "theta"},
                        "solve config");
    if (!cfg.contains("schema_version") || cfg.at("schema_version") != kSchemaVersion)
        throw InputError("solve config: schema_version must be 1");
    if (!cfg.contains("integrand")) throw InputError("solve config: missing 'integrand'");
    SolveSetup s;
    s.echo = cfg;
    s.dim = static_cast<int>(get_number(cfg, "dim", 2, "solve config"));
    if (s.dim < 1 || s.dim > 3) throw InputError("solve config: dim must be 1, 2 or 3");
    s.half_width = get_number(cfg, "half_width", 1.0, "solve config");
    if (!(s.half_width > 0)) throw InputError("solve config: half_width must be > 0");
    if (!level_override.empty()) {
        s.levels = parse_int_list(level_override);
    } else if (cfg.contains("levels")) {
        if (!cfg.at("levels").is_array()) throw InputError("solve config: 'levels' must be an array");
        for (const auto& l : cfg.at("levels")) {
            if (!l.is_number_integer()) throw InputError("solve config: 'levels' must hold integers");
            s.levels.push_back(l.get<int>());
        }
    } else {
        s.levels = {32};
    }
    if (s.levels.empty()) throw InputError("solve config: no levels");
    for (std::size_t i = 0; i < s.levels.size(); ++i) {
        if (s.levels[i] < 2) throw InputError("solve config: levels must be >= 2");
        if (i > 0 && s.levels[i] <= s.levels[i - 1]) throw InputError("solve config: levels must increase");
    }
    s.integrand = cfg.at("integrand");
    const Integrand f = make_integrand(s.integrand);
    if (f.dim() != s.dim) throw InputError("solve config: integrand dimension differs from dim");
    s.m = get_number(cfg, "m", 2.0, "solve config");

    // source
    double const_value = 0;
    bool const_source = false;
    {
        const json src = cfg.value("source", json{{"kind", "const"}, {"value", 0.0}});
        const std::string kind = src.value("kind", std::string());
        if (kind == "const") {
            reject_unknown_keys(src, {"kind", "value"}, "source");
            const_value = get_number(src, "value", 0.0, "source");
            const_source = true;
            s.source = [const_value](const Vector&) { return const_value; };
        } else if (kind == "affine") {
            reject_unknown_keys(src, {"kind", "value", "slope"}, "source");
            const double v0 = get_number(src, "value", 0.0, "source");
            const Vector slope = get_vector(src, "slope", s.dim, "source");
            s.source = [v0, slope](const Vector& x) { return v0 + slope.dot(x); };
        } else {
            throw InputError("source: kind must be const | affine");
        }
    }

    // boundary data
    {
        const json bd = cfg.value("boundary", json{{"kind", "zero"}});
        const std::string kind = bd.value("kind", std::string());
        if (kind == "zero") {
            reject_unknown_keys(bd, {"kind"}, "boundary");
            s.boundary = [](const Vector&) { return 0.0; };
        } else if (kind == "affine") {
            reject_unknown_keys(bd, {"kind", "slope", "offset"}, "boundary");
            const Vector slope = get_vector(bd, "slope", s.dim, "boundary");
            const double off = get_number(bd, "offset", 0.0, "boundary");
            s.boundary = [slope, off](const Vector& x) { return off + slope.dot(x); };
        } else if (kind == "quadratic") {
            reject_unknown_keys(bd, {"kind", "scale"}, "boundary");
            const double c = get_number(bd, "scale", 1.0, "boundary");
            s.boundary = [c](const Vector& x) { return c * x.squaredNorm(); };
        } else if (kind == "radial") {
            // exact radial solution of the same problem; needs an isotropic power integrand
            reject_unknown_keys(bd, {"kind"}, "boundary");
            const std::string name = s.integrand.value("name", std::string());
            const bool power = name == "power" && !s.integrand.contains("center");
            const bool uhl = name == "uhlenbeck" && s.integrand.value("profile", std::string("power")) == "power";
            if (!power && !uhl) throw InputError("boundary 'radial' needs integrand power (no center) or uhlenbeck power");
            if (!const_source) throw InputError("boundary 'radial' needs a const source");
            RadialProblem rp;
            rp.dim = s.dim;
            s.oracle_p = s.integrand.at("p").get<double>();
            rp.profile = power_profile(s.oracle_p);
            rp.source = RadialSource::constant(const_value);
            rp.radius = s.half_width * std::sqrt(static_cast<double>(s.dim)) * (1.0 + 1e-6);
            s.oracle = solve_radial(rp);
            const RadialSolution* sol = &*s.oracle;
            s.boundary = [sol](const Vector& x) { return sol->v_at(x.norm()); };
        } else {
            throw InputError("boundary: kind must be zero | affine | quadratic | radial");
        }
    }

    // schedule
    {
        const json sc = cfg.value("schedule", json{{"kind", "geometric"}});
        const std::string kind = sc.value("kind", std::string());
        if (kind == "geometric") {
            reject_unknown_keys(sc, {"kind", "eps0", "mu0", "count"}, "schedule");
            s.schedule = RegularizationSchedule::geometric(get_number(sc, "eps0", 0.1, "schedule"),
                                                           get_number(sc, "mu0", 1e-2, "schedule"),
                                                           static_cast<int>(get_number(sc, "count", 2, "schedule")));
        } else if (kind == "plain") {
            reject_unknown_keys(sc, {"kind"}, "schedule");
            s.schedule = RegularizationSchedule::plain();
        } else if (kind == "stages") {
            reject_unknown_keys(sc, {"kind", "stages"}, "schedule");
            if (!sc.contains("stages") || !sc.at("stages").is_array() || sc.at("stages").empty())
                throw InputError("schedule: 'stages' must be a non-empty array");
            for (const auto& st : sc.at("stages")) {
                reject_unknown_keys(st, {"eps", "mu"}, "schedule stage");
                Stage g;
                g.eps = get_number(st, "eps", 0.0, "schedule stage");
                g.mu = get_number(st, "mu", 0.0, "schedule stage");
                if (g.eps < 0 || g.mu < 0) throw InputError("schedule stage: eps and mu must be >= 0");
                s.schedule.stages.push_back(g);
            }
        } else {
            throw InputError("schedule: kind must be geometric | plain | stages");
        }
    }

    if (cfg.contains("solver")) {
        const auto& so = cfg.at("solver");
        reject_unknown_keys(so, {"tol", "max_newton"}, "solver");
        s.options.tol = get_number(so, "tol", s.options.tol, "solver");
        s.options.max_newton = static_cast<int>(get_number(so, "max_newton", s.options.max_newton, "solver"));
        if (!(s.options.tol > 0) || s.options.max_newton < 1) throw InputError("solver: tol > 0 and max_newton >= 1");
    }
    {
        const json b = cfg.value("ball", json::object());
        reject_unknown_keys(b, {"center", "radius"}, "ball");
        s.ball.center = get_vector(b, "center", s.dim, "ball");
        s.ball.radius = get_number(b, "radius", 0.25, "ball");
        if (!(s.ball.radius > 0)) throw InputError("ball: radius must be > 0");
    }
    if (cfg.contains("theta")) s.theta = get_number(cfg, "theta", 1.0, "solve config");
    return s;
}

json regularity_json(const RegularityReport& r) {
    return {{"m", r.m},
            {"theta", r.theta},
            {"v_lm_b", r.v_lm_b},
            {"dv_lm_b", r.dv_lm_b},
            {"v_w1m_b", r.v_w1m_b},
            {"f_lm_2b", r.f_lm_2b},
            {"v_ltheta_2b", r.v_ltheta_2b},
            {"c_meas", num(r.c_meas)}};
}

std::string solution_text(const DiscreteSolution& sol) {
    const auto& spec = sol.spec;
    std::string out;
    const Eigen::Index row = spec.nodes_per_axis();
    for (Eigen::Index i = 0; i < spec.node_count(); ++i) {
        const Vector x = spec.node(i);
        for (Eigen::Index d = 0; d < x.size(); ++d) out += fmt(x(d)) + " ";
        out += fmt(sol.u(i)) + "\n";
        if (spec.dim == 2 && (i + 1) % row == 0) out += "\n";
    }
    return out;
}

}  // namespace

bool run_solve(RunContext& ctx, const SolveArgs& a) {
    if (ctx.config().config_path.empty()) throw InputError("solve: --config is required");
    const SolveSetup s = parse_solve_config(load_json_file(ctx.config().config_path), a.levels);
    ctx.inputs() = {{"config", s.echo}, {"levels", s.levels}};

    const Integrand f = make_integrand(s.integrand);
    std::optional<DiscreteSolution> prev;
    json levels = json::array();
    std::vector<double> cmeas;
    Csv csv({"n", "h", "energy", "initial_energy", "gradient_norm", "el_residual", "w1p_error", "c_meas", "v_w1m_b",
             "f_lm_2b", "v_ltheta_2b", "newton_iterations"});
    bool energy_below = true, monotone = true, el_ok = true;
    for (int n : s.levels) {
        ProblemSpec spec(f);
        spec.dim = s.dim;
        spec.half_width = s.half_width;
        spec.n = n;
        spec.boundary = s.boundary;
        spec.source = s.source;
        spec.m = s.m;
        SolverOptions opt = s.options;
        Vector init;
        if (prev) {
            init = prolongate(*prev, spec);
            opt.initial = &init;
        }
        auto sol = minimize(spec, prev ? RegularizationSchedule::plain() : s.schedule, opt);
        const double el = euler_lagrange_residual(sol);
        std::optional<double> err;
        if (s.oracle) {
            const RadialSolution* o = &*s.oracle;
            err = w1p_error(
                spec, sol.u, [o](const Vector& x) { return o->v_at(x.norm()); },
                [o](const Vector& x) -> Vector {
                    const double r = x.norm();
                    return r > 0 ? Vector(o->dv_at(r) * x / r) : Vector(Vector::Zero(x.size()));
                },
                s.oracle_p);
        }
        const auto rep = sobolev_report(sol, s.ball, s.m, s.theta);
        cmeas.push_back(rep.c_meas);
        int iterations = 0;
        json stages = json::array();
        for (const auto& st : sol.stages) {
            iterations += st.iterations;
            monotone = monotone && st.energy_monotone;
            stages.push_back({{"eps", st.stage.eps},
                              {"mu", st.stage.mu},
                              {"iterations", st.iterations},
                              {"energy", st.energy},
                              {"exact_energy", st.exact_energy},
                              {"gradient_norm", st.gradient_norm},
                              {"lipschitz", st.lipschitz},
                              {"coupling", num(st.coupling)},
                              {"energy_monotone", st.energy_monotone}});
        }
        energy_below = energy_below && sol.energy <= sol.initial_energy + 1e-12 * std::abs(sol.initial_energy);
        el_ok = el_ok && el <= 1e-6;
        levels.push_back({{"n", n},
                          {"h", spec.spacing()},
                          {"energy", sol.energy},
                          {"initial_energy", sol.initial_energy},
                          {"gradient_norm", sol.gradient_norm},
                          {"el_residual", el},
                          {"w1p_error", err ? json(*err) : json(nullptr)},
                          {"report", regularity_json(rep)},
                          {"stages", stages}});
        csv.row({std::to_string(n), fmt(spec.spacing()), fmt(sol.energy), fmt(sol.initial_energy),
                 fmt(sol.gradient_norm), fmt(el), err ? fmt(*err) : std::string(), fmt(rep.c_meas), fmt(rep.v_w1m_b),
                 fmt(rep.f_lm_2b), fmt(rep.v_ltheta_2b), std::to_string(iterations)});
        prev = std::move(sol);
    }
    const bool grows = c_meas_grows(cmeas);
    json checks = {{"energy_below_initial", energy_below},
                   {"energy_monotone", monotone},
                   {"el_residual", el_ok},
                   {"c_meas_not_growing", !grows}};
    const bool pass = all_true(checks);
    json out = {{"schema_version", kSchemaVersion},
                {"ball", {{"center", vec_json(s.ball.center)}, {"radius", s.ball.radius}}},
                {"levels", levels},
                {"c_meas_grows", grows},
                {"checks", checks},
                {"pass", pass}};
    ctx.write_file("solution.txt", solution_text(*prev));
    ctx.write_json("regularity.json", out);
    ctx.write_file("convergence.csv", csv.str());
    emit(ctx, out, csv.str());
    return pass;
}

// ---------------------------------------------------------------------------

bool run_radial(RunContext& ctx, const RadialArgs& a) {
    if (!(a.p > 1.0)) throw InputError("--p must be > 1");
    if (a.dim < 1) throw InputError("--N must be >= 1");
    RadialProblem rp;
    rp.dim = a.dim;
    rp.profile = power_profile(a.p);
    rp.source = make_source(a.f_kind, a.f_value, a.beta);
    rp.r0 = a.r0;
    rp.radius = a.radius;
    rp.flux_c = a.flux_c;
    rp.boundary_value = a.boundary_value;
    rp.per_octave = a.per_octave;
    rp.octaves = a.octaves;
    ctx.inputs() = {{"p", a.p}, {"N", a.dim}, {"source", source_json(rp.source)}, {"m", a.m}, {"radius", a.radius},
                    {"r0", a.r0}, {"flux_c", a.flux_c}, {"boundary_value", a.boundary_value},
                    {"per_octave", a.per_octave}, {"octaves", a.octaves}};

    const auto sol = solve_radial(rp);
    const int n = static_cast<int>(sol.r.size());
    const double N = a.dim;

    // closed-form flux for f = value r^-beta: r^(1-N) (value (r^(N-beta) - r0^(N-beta)) / (N - beta) + c)
    const bool closed = a.beta < N;
    double closed_err = 0, flux_scale = 1;
    Csv csv({"r", "v", "dv", "stress", "h"});
    for (int i = 0; i < n; ++i) {
        const double r = sol.r(i);
        csv.row({fmt(r), fmt(sol.v(i)), fmt(sol.dv(i)), fmt(sol.flux(i)), fmt(sol.h(i))});
        flux_scale = std::max(flux_scale, std::abs(std::pow(r, N - 1) * sol.flux(i)));
        if (closed && r > 0) {
            const double e = N - a.beta;
            const double exact =
                std::pow(r, 1 - N) * (a.f_value * (std::pow(r, e) - std::pow(a.r0, e)) / e + a.flux_c);
            closed_err = std::max(closed_err, std::abs(sol.flux(i) - exact) / std::max(1.0, std::abs(exact)));
        }
    }

    // norms over B_R \ B_r0 by the trapezoid rule on the radial grid
    const double area = sphere_area(a.dim);
    double v_m = 0, dv_m = 0, f_m = 0, v_1 = 0;
    for (int i = 1; i < n; ++i) {
        auto dens = [&](int j, double& vv, double& dd, double& ff, double& v1) {
            const double r = sol.r(j);
            const double w = std::pow(r, N - 1);
            if (r <= 0) {
                vv = dd = ff = v1 = 0;
                return;
            }
            const double h = sol.h(j), fr = rp.source(r);
            const double dvn = std::sqrt((N - 1) * h * h + (fr - (N - 1) * h) * (fr - (N - 1) * h));
            vv = w * std::pow(std::abs(sol.flux(j)), a.m);
            dd = w * std::pow(dvn, a.m);
            ff = w * std::pow(std::abs(fr), a.m);
            v1 = w * std::abs(sol.flux(j));
        };
        double a0, b0, c0, d0, a1, b1, c1, d1;
        dens(i - 1, a0, b0, c0, d0);
        dens(i, a1, b1, c1, d1);
        const double dr = sol.r(i) - sol.r(i - 1);
        v_m += 0.5 * dr * (a0 + a1);
        dv_m += 0.5 * dr * (b0 + b1);
        f_m += 0.5 * dr * (c0 + c1);
        v_1 += 0.5 * dr * (d0 + d1);
    }
    const double inv = 1.0 / a.m;
    json norms = {{"v_lm", num(std::pow(area * v_m, inv))},
                  {"dv_lm", num(std::pow(area * dv_m, inv))},
                  {"v_w1m", num(std::pow(area * (v_m + dv_m), inv))},
                  {"f_lm", num(std::pow(area * f_m, inv))},
                  {"v_l1", num(area * v_1)}};

    const auto fit = holder_exponent(sol.r, sol.dv);
    const double defect = sol.flux_identity_defect();
    json checks = {{"flux_identity", defect <= 1e-9 * flux_scale}};
    if (closed) checks["closed_form_stress"] = closed_err <= 1e-10;
    const double p_conj = a.p / (a.p - 1.0);
    json out = {{"schema_version", kSchemaVersion},
                {"p", a.p},
                {"p_conj", p_conj},
                {"N", a.dim},
                {"source", source_json(rp.source)},
                {"points", n},
                {"flux_identity_defect", defect},
                {"closed_form_stress_error", closed ? json(closed_err) : json(nullptr)},
                {"norms", norms},
                {"holder_fit", {{"exponent", fit.exponent},
                                {"ci_low", fit.ci_low},
                                {"ci_high", fit.ci_high},
                                {"scales", fit.scales},
                                {"zero_modulus", fit.zero_modulus}}},
                {"expected_du_exponent", std::min(p_conj, 2.0) - 1.0}};
    const bool pass = all_true(checks);
    out["checks"] = checks;
    out["pass"] = pass;
    ctx.write_file("radial.csv", csv.str());
    ctx.write_json("radial.json", out);
    emit(ctx, out, csv.str());
    return pass;
}

// ---------------------------------------------------------------------------

bool run_cpprime_sweep(RunContext& ctx, const CpPrimeArgs& a) {
    const auto ps = parse_double_list(a.p_list);
    for (double p : ps)
        if (!(p > 1.0)) throw InputError("--p-list entries must be > 1");
    const auto src = make_source(a.f_kind, a.f_value, a.beta);
    ctx.inputs() = {{"N", a.dim}, {"p", ps}, {"source", source_json(src)}, {"m", a.m}, {"per_octave", a.per_octave}};

    Csv csv({"p", "p_conj", "target", "du_exponent", "ci_low", "ci_high", "u_exponent", "v_w1m", "f_lm", "v_l1",
             "ratio", "holds", "m_p", "alpha_p", "admissible"});
    json rows = json::array();
    bool all_hold = true;
    for (double p : ps) {
        const auto r = cp_prime_verify(p, src, a.m, a.dim, a.per_octave);
        const auto ap = alpha_p(a.dim, p);
        all_hold = all_hold && r.holds;
        rows.push_back({{"p", r.p},
                        {"p_conj", r.p_conj},
                        {"target", r.target},
                        {"du_exponent", r.du_exponent},
                        {"ci_low", r.ci_low},
                        {"ci_high", r.ci_high},
                        {"u_exponent", r.u_exponent},
                        {"v_w1m", r.v_w1m},
                        {"f_lm", r.f_lm},
                        {"v_l1", r.v_l1},
                        {"ratio", num(r.ratio)},
                        {"holds", r.holds},
                        {"m_p", ap.m_p_infinite ? json(nullptr) : json(ap.m_p)},
                        {"alpha_p", num(ap.alpha_p)},
                        {"admissible", ap.admissible}});
        csv.row({fmt(r.p), fmt(r.p_conj), fmt(r.target), fmt(r.du_exponent), fmt(r.ci_low), fmt(r.ci_high),
                 fmt(r.u_exponent), fmt(r.v_w1m), fmt(r.f_lm), fmt(r.v_l1), fmt(r.ratio), r.holds ? "1" : "0",
                 ap.m_p_infinite ? std::string("inf") : fmt(ap.m_p), fmt(ap.alpha_p), ap.admissible ? "1" : "0"});
    }
    // the exponent check is only meaningful for bounded sources
    json checks = {{"exponents_reach_target", src.beta == 0.0 ? all_hold : true}};
    const bool pass = all_true(checks);
    json out = {{"schema_version", kSchemaVersion}, {"N", a.dim},     {"source", source_json(src)},
                {"m", a.m},                         {"rows", rows},   {"checks", checks},
                {"pass", pass}};
    ctx.write_file("cpprime_sweep.csv", csv.str());
    ctx.write_json("cpprime_sweep.json", out);
    emit(ctx, out, csv.str());
    return pass;
}

// ---------------------------------------------------------------------------

bool run_cantor(RunContext& ctx, const CantorArgs& a) {
    const auto levels = parse_int_list(a.levels);
    for (int l : levels)
        if (l < 0 || l > 30) throw InputError("--levels entries must be in 0..30");
    ctx.inputs() = {{"levels", levels}, {"count", a.count}, {"directions", a.directions}, {"angular", a.angular},
                    {"export_level", a.export_level}, {"export_n", a.export_n}};
    const Disc disc;

    Csv res_csv({"level", "max_residual", "ratio_to_previous"});
    std::vector<double> res;
    for (int l : levels) {
        res.push_back(cantor_weak_residual(l, disc, a.count).max_residual);
        const std::string ratio = res.size() > 1 ? fmt(res.back() / res[res.size() - 2]) : std::string();
        res_csv.row({std::to_string(l), fmt(res.back()), ratio});
    }
    const auto table = sobolev_blowup_diagnostic(levels, disc, a.directions, a.angular);
    Csv blow({"level", "w11", "w12", "smooth_w11"});
    json rows = json::array();
    bool w11_inc = true, w12_inc = true, smooth = true;
    const double s0 = table.front().smooth_w11;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& t = table[i];
        blow.row({std::to_string(t.level), fmt(t.w11), fmt(t.w12), fmt(t.smooth_w11)});
        rows.push_back({{"level", t.level}, {"w11", t.w11}, {"w12", t.w12}, {"smooth_w11", t.smooth_w11},
                        {"max_residual", res[i]}});
        if (i > 0) {
            w11_inc = w11_inc && t.w11 > table[i - 1].w11;
            w12_inc = w12_inc && t.w12 > table[i - 1].w12;
        }
        smooth = smooth && std::abs(t.smooth_w11 - s0) <= 0.05 * s0;
    }

    // empirical rates (no target value exists)
    json obs = json::object();
    if (res.size() >= 2) {
        double logsum = 0;
        int cnt = 0;
        for (std::size_t i = 1; i < res.size(); ++i)
            if (res[i] > 0 && res[i - 1] > 0) {
                logsum += std::log(res[i] / res[i - 1]);
                ++cnt;
            }
        obs["residual_ratio_geomean"] = cnt ? json(std::exp(logsum / cnt)) : json(nullptr);
        const std::size_t k = table.size() - 1;
        obs["w12_ratio_last"] = table[k].w12 / table[k - 1].w12;
        if (table.size() >= 3) {
            const double inc = table[k].w11 - table[k - 1].w11;
            const double prev_inc = table[k - 1].w11 - table[k - 2].w11;
            const double rho = prev_inc != 0 ? inc / prev_inc : std::numeric_limits<double>::quiet_NaN();
            obs["w11_increment_ratio_last"] = num(rho);
            obs["w11_extrapolated_limit"] = rho > 0 && rho < 1 ? json(table[k].w11 + inc * rho / (1 - rho)) : json(nullptr);
        }
    }
    if (a.export_level >= 0) {
        const int L = a.export_level;
        const PlanarField v = [L](const Vec2& z) { return cantor_stress(z, L); };
        ctx.write_file("cantor_field_L" + std::to_string(L) + ".txt", export_planar_field(v, disc, a.export_n));
    }
    const double worst_res = *std::max_element(res.begin(), res.end());
    json checks = {{"residual_below_1e-3", worst_res <= 1e-3},
                   {"w11_increasing", w11_inc},
                   {"w12_increasing", w12_inc},
                   {"smooth_control_stable", smooth}};
    const bool pass = all_true(checks);
    json out = {{"schema_version", kSchemaVersion},
                {"disc", {{"center", {disc.center.x(), disc.center.y()}}, {"radius", disc.radius}}},
                {"rows", rows},
                {"observations", obs},
                {"checks", checks},
                {"pass", pass}};
    ctx.write_file("blowup.csv", blow.str());
    ctx.write_file("residual.csv", res_csv.str());
    ctx.write_json("cantor.json", out);
    emit(ctx, out, blow.str());
    return pass;
}

// ---------------------------------------------------------------------------

bool run_report(RunContext& ctx, const ReportArgs& a) {
    const std::filesystem::path dir = a.dir.empty() ? ctx.config().out_dir : std::filesystem::path(a.dir);
    if (!std::filesystem::is_directory(dir)) throw InputError("report: '" + dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> manifests;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        const std::string suffix = ".manifest.json";
        if (name.size() > suffix.size() && name.ends_with(suffix) && name != "report.manifest.json")
            manifests.push_back(e.path());
    }
    std::sort(manifests.begin(), manifests.end());
    ctx.inputs() = {{"dir", dir.string()}};
    json entries = json::array();
    Csv csv({"subcommand", "status", "outputs"});
    int failed = 0;
    for (const auto& m : manifests) {
        const json j = load_json_file(m.string());
        if (!j.contains("subcommand") || !j.contains("status"))
            throw InputError("report: " + m.string() + " is not a manifest");
        const std::string status = j.at("status").get<std::string>();
        if (status != "pass") ++failed;
        entries.push_back({{"subcommand", j.at("subcommand")},
                           {"status", status},
                           {"version", j.value("version", std::string())},
                           {"seed", j.value("seed", std::uint64_t{0})},
                           {"outputs", j.value("outputs", json::array())}});
        csv.row({j.at("subcommand").get<std::string>(), status, std::to_string(j.value("outputs", json::array()).size())});
    }
    const bool pass = failed == 0 && !entries.empty();
    json out = {{"schema_version", kSchemaVersion},
                {"runs", entries},
                {"failed", failed},
                {"checks", {{"all_runs_pass", failed == 0}, {"found_runs", !entries.empty()}}},
                {"pass", pass}};
    ctx.write_json("report.json", out);
    emit(ctx, out, csv.str());
    return pass;
}

}  // namespace quc::cli
