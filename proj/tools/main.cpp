// quc: command-line entry point. Exit codes: 0 all checks pass, 1 a check or module
// failed, 2 input error.

#include "commands.hpp"

#include "quc/common.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <memory>

using namespace quc::cli;

namespace {

void error_json(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

struct Command {
    CLI::App* app;
    RunConfig cfg;
    std::function<bool(RunContext&)> run;
};

void add_common(Command& c) {
    c.app->add_option("--out", c.cfg.out_dir, "output directory")->capture_default_str();
    c.app->add_option("--seed", c.cfg.seed, "RNG seed")->capture_default_str();
    c.app->add_option("--format", c.cfg.format, "stdout format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quc: quasiuniform convexity toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version());

    std::vector<std::unique_ptr<Command>> cmds;
    auto make = [&](const std::string& name, const std::string& help) -> Command& {
        cmds.push_back(std::make_unique<Command>());
        auto& c = *cmds.back();
        c.app = app.add_subcommand(name, help);
        c.cfg.subcommand = name;
        add_common(c);
        return c;
    };

    MatrixCheckArgs mc;
    {
        auto& c = make("matrix-check", "randomized check of the pointwise skew bound");
        c.app->add_option("--trials", mc.trials, "trials per dimension")->capture_default_str();
        c.app->add_option("--dims", mc.dims, "dimensions, a..b or a,b,c")->capture_default_str();
        c.run = [&](RunContext& ctx) { return run_matrix_check(ctx, mc); };
    }
    IntegrandArgs ia;
    {
        auto& c = make("integrand", "K estimate, growth report and index tables of an integrand");
        c.app->add_option("--spec", ia.spec, "inline JSON descriptor");
        c.app->add_option("--config", c.cfg.config_path, "JSON file {schema_version, integrand}");
        c.app->add_option("--shells", ia.shells)->capture_default_str();
        c.app->add_option("--directions", ia.directions)->capture_default_str();
        c.app->add_option("--r0", ia.r0)->capture_default_str();
        c.app->add_option("--r1", ia.r1)->capture_default_str();
        c.run = [&](RunContext& ctx) { return run_integrand(ctx, ia); };
    }
    CordesArgs co;
    {
        auto& c = make("cordes", "Cordes threshold K0, delta0 and admissibility");
        c.app->add_option("--N", co.dim)->capture_default_str();
        c.app->add_option("--m", co.m)->capture_default_str();
        c.app->add_option("--K", co.k)->capture_default_str();
        c.app->add_option("--window-lower", co.window_lower)->capture_default_str();
        c.app->add_option("--window-upper", co.window_upper)->capture_default_str();
        c.app->add_flag("--empirical", co.empirical, "also report delta0 from the randomized norm probe");
        c.app->add_option("--grid", co.grid, "probe grid size")->capture_default_str();
        c.app->add_option("--trials", co.trials, "probe trials")->capture_default_str();
        c.run = [&](RunContext& ctx) { return run_cordes(ctx, co); };
    }
    RieszArgs ra;
    {
        auto& c = make("riesz-check", "property suite of the periodic Riesz / div-curl engine");
        c.app->add_option("--N", ra.dim)->capture_default_str();
        c.app->add_option("--n", ra.n, "grid points per axis")->capture_default_str();
        c.app->add_option("--trials", ra.trials)->capture_default_str();
        c.app->add_option("--kmax", ra.kmax)->capture_default_str();
        c.app->add_option("--m-list", ra.m_list)->capture_default_str();
        c.app->add_option("--probe-trials", ra.probe_trials)->capture_default_str();
        c.app->add_flag("--export-field", ra.export_field, "write grid snapshots of the first field");
        c.run = [&](RunContext& ctx) { return run_riesz_check(ctx, ra); };
    }
    SolveArgs sa;
    {
        auto& c = make("solve", "Q1 minimization with regularization cascade and regularity report");
        c.app->add_option("--config", c.cfg.config_path, "problem JSON")->required();
        c.app->add_option("--levels", sa.levels, "override levels, a,b,c");
        c.run = [&](RunContext& ctx) { return run_solve(ctx, sa); };
    }
    RadialArgs rd;
    {
        auto& c = make("radial", "radial p-Laplace oracle");
        c.app->add_option("--p", rd.p)->capture_default_str();
        c.app->add_option("--N", rd.dim)->capture_default_str();
        c.app->add_option("--f,--f-kind", rd.f_kind, "const | power")->capture_default_str();
        c.app->add_option("--f-value", rd.f_value)->capture_default_str();
        c.app->add_option("--beta", rd.beta)->capture_default_str();
        c.app->add_option("--m", rd.m)->capture_default_str();
        c.app->add_option("--radius", rd.radius)->capture_default_str();
        c.app->add_option("--r0", rd.r0)->capture_default_str();
        c.app->add_option("--flux-c", rd.flux_c)->capture_default_str();
        c.app->add_option("--boundary-value", rd.boundary_value)->capture_default_str();
        c.app->add_option("--per-octave", rd.per_octave)->capture_default_str();
        c.app->add_option("--octaves", rd.octaves)->capture_default_str();
        c.run = [&](RunContext& ctx) { return run_radial(ctx, rd); };
    }
    CpPrimeArgs cp;
    {
        auto& c = make("cpprime-sweep", "Hoelder exponents and norms over a p grid");
        c.app->add_option("--N", cp.dim)->capture_default_str();
        c.app->add_option("--p-list", cp.p_list)->capture_default_str();
        c.app->add_option("--f,--f-kind", cp.f_kind)->capture_default_str();
        c.app->add_option("--f-value", cp.f_value)->capture_default_str();
        c.app->add_option("--beta", cp.beta)->capture_default_str();
        c.app->add_option("--m", cp.m)->capture_default_str();
        c.app->add_option("--per-octave", cp.per_octave)->capture_default_str();
        c.run = [&](RunContext& ctx) { return run_cpprime_sweep(ctx, cp); };
    }
    CantorArgs ca;
    {
        auto& c = make("cantor", "truncated Cantor stress: weak residuals and Sobolev blow-up table");
        c.app->add_option("--levels", ca.levels, "a..b or a,b,c")->capture_default_str();
        c.app->add_option("--bumps", ca.count)->capture_default_str();
        c.app->add_option("--directions", ca.directions)->capture_default_str();
        c.app->add_option("--angular", ca.angular)->capture_default_str();
        c.app->add_option("--export-level", ca.export_level, "write the field of this level as a grid");
        c.app->add_option("--export-n", ca.export_n)->capture_default_str();
        c.run = [&](RunContext& ctx) { return run_cantor(ctx, ca); };
    }
    ReportArgs rp;
    {
        auto& c = make("report", "aggregate the manifests in a directory");
        c.app->add_option("--dir", rp.dir, "directory to scan (default: --out)");
        c.run = [&](RunContext& ctx) { return run_report(ctx, rp); };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    for (auto& c : cmds) {
        if (!c->app->parsed()) continue;
        try {
            RunContext ctx(c->cfg);
            const bool pass = c->run(ctx);
            ctx.finish(pass);
            return pass ? 0 : 1;
        } catch (const quc::InputError& e) {
            error_json("input", e.what());
            return 2;
        } catch (const quc::PreconditionError& e) {
            error_json("precondition", e.what());
            return 2;
        } catch (const nlohmann::json::exception& e) {
            error_json("input", e.what());
            return 2;
        } catch (const quc::NumericError& e) {
            error_json("numeric", e.what());
            return 1;
        } catch (const quc::DomainError& e) {
            error_json("domain", e.what());
            return 1;
        } catch (const std::exception& e) {
            error_json("internal", e.what());
            return 1;
        }
    }
    return 2;
}
