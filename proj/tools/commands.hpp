#pragma once

#include "io.hpp"

#include <string>

namespace quc::cli {

struct MatrixCheckArgs {
    std::int64_t trials = 1000;
    std::string dims = "2..8";
};

struct IntegrandArgs {
    std::string spec;  ///< inline JSON descriptor (alternative to --config)
    int shells = 40;
    int directions = 32;
    double r0 = 1e-2, r1 = 1e2;
};

struct CordesArgs {
    int dim = 2;
    double m = 2;
    double k = 1.1;
    double window_lower = 4.0 / 3.0;
    double window_upper = 4.0;
    bool empirical = false;
    int grid = 32;
    int trials = 20;
};

struct RieszArgs {
    int dim = 2;
    int n = 64;
    int trials = 20;
    int kmax = 6;
    std::string m_list = "1.5,2,3,6";
    int probe_trials = 20;
    bool export_field = false;
};

struct SolveArgs {
    std::string levels;  ///< overrides config "levels"
};

struct RadialArgs {
    double p = 3;
    int dim = 2;
    std::string f_kind = "const";
    double f_value = 1;
    double beta = 0;
    double m = 2;
    double radius = 1;
    double r0 = 0;
    double flux_c = 0;
    double boundary_value = 0;
    int per_octave = 16;
    int octaves = 48;
};

struct CpPrimeArgs {
    int dim = 2;
    std::string p_list = "1.2,1.5,2,2.5,3,4,6";
    std::string f_kind = "const";
    double f_value = 1;
    double beta = 0;
    double m = 2;
    int per_octave = 16;
};

struct CantorArgs {
    std::string levels = "4..14";
    int count = 60;
    int directions = 16;
    int angular = 256;
    int export_level = -1;
    int export_n = 101;
};

struct ReportArgs {
    std::string dir;
};

// Each returns true when every checked invariant holds.
bool run_matrix_check(RunContext& ctx, const MatrixCheckArgs& a);
bool run_integrand(RunContext& ctx, const IntegrandArgs& a);
bool run_cordes(RunContext& ctx, const CordesArgs& a);
bool run_riesz_check(RunContext& ctx, const RieszArgs& a);
bool run_solve(RunContext& ctx, const SolveArgs& a);
bool run_radial(RunContext& ctx, const RadialArgs& a);
bool run_cpprime_sweep(RunContext& ctx, const CpPrimeArgs& a);
bool run_cantor(RunContext& ctx, const CantorArgs& a);
bool run_report(RunContext& ctx, const ReportArgs& a);

}  // namespace quc::cli
