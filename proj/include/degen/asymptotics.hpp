#pragma once

#include <string>
#include <vector>

#include "degen/bs_solver.hpp"

namespace degen {

// Everything a sweep needs besides the coupling list. Per-lambda grids are
// derived from grid_spec with e_min tied to the first-order prediction.
struct SweepTemplate {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    int surface_resolution = 64;
    GridSpec grid_spec;
    std::vector<double> ws_e_sequence;  // empty: skip W_S (mandatory for r >= 2)
    int index = 1;
    bool certify = true;        // re-verify each solve on a refined grid
    bool track_vectors = true;  // eigenvector distances (gaussian kind only)
    int threads = 1;
    double mu_tol = 1e-8;       // |mu_i - 1| at the accepted root
};

struct SweepRow {
    double lambda = 0.0;
    int index = 1;
    double e = 0.0;
    double lambda_f_e = 0.0;
    double target = 0.0;  // -1/a_S^i
    double first_order_residual = 0.0;
    double b_lambda = 0.0;
    double second_order_residual = 0.0;
    double eigenvector_distance = -1.0;  // -1: not tracked
    double bs_residual = 0.0;
    double certificate_delta = 0.0;  // |e_refined - e|/e
    std::string grid_id;
    std::string status;  // "ok", "no-bound-state", "resolution-failure"

    // solver state for downstream cross-checks; not serialized
    std::shared_ptr<const MomentumGrid> grid;
    Vector eigenvector;
};

struct SweepReport {
    int index = 1;
    double a_i = 0.0;
    double u_W_u = 0.0;  // (u_i, W_S u_i), 0 when W_S absent
    std::vector<SweepRow> rows;  // sorted by decreasing lambda

    double extrapolated_lambda_f = 0.0;  // const term of the two-term fit
    double fit_slope = 0.0;
    double extrapolation_error = 0.0;  // |extrapolated*|a| - 1|
    bool first_order_pass = false;     // extrapolation within 2%
    bool residuals_monotone = false;   // |lambda f - 1/|a|| decreasing in lambda

    bool second_order_available = false;
    double second_vs_first_ratio = 0.0;  // at the smallest lambda
    bool second_order_ratio_pass = false;      // ratio <= 0.5
    bool second_order_decreasing = false;      // over the last three lambdas
    double perturbation_consistency = 0.0;     // |b - (a - lambda u_W_u)| / |b| at lambda_min
    std::vector<double> ws_cauchy;

    bool vector_distances_monotone = false;

    bool all_rows_ok() const;
};

SweepReport first_order_sweep(const SweepTemplate& tmpl, const std::vector<double>& lambdas,
                              int index);

// Adds the Theorem-2 refinement columns to an existing first-order report
// (requires W_S in the template; refuses r >= 2).
void second_order_extend(const SweepTemplate& tmpl, SweepReport& report);

// Convenience: first order plus second order when W_S is available.
SweepReport run_sweep(const SweepTemplate& tmpl, const std::vector<double>& lambdas, int index);

struct CountingReport {
    double lambda = 0.0;
    double e_resolve = 0.0;
    int direct_negative_count = 0;
    int surface_resolved_count = 0;
    bool pass = false;  // direct >= surface among resolvable magnitudes
};

CountingReport counting_check(const SweepTemplate& tmpl, double lambda, int direct_count = 48);

struct KernelCaseEntry {
    int index = 0;        // position in the VS spectrum
    double a = 0.0;       // near-kernel eigenvalue
    double u_W_u = 0.0;   // must be positive at a crossing
    double identity_gap = 0.0;  // |(u,Bu) - ((u,VSu) - lambda (u,WSu))|
};

// Scans |a_S^i| < tol; empty when no near-kernel vector exists.
std::vector<KernelCaseEntry> kernel_case_check(const SurfaceOperatorSet& set, double tol,
                                               double lambda);

// Normalized subspace distance between V^{1/2} psi_lambda (from the solved
// grid eigenvector) and span{V^{1/2} F_S* u : u in the a_i eigenspace}.
double eigenvector_distance(const SweepTemplate& tmpl, const SurfaceOperatorSet& set,
                            const MomentumGrid& grid, const SolveRecord& rec);

// Geometric coupling ladder lambda_j = lambda0 * ratio^-j... j = 0..count-1.
std::vector<double> geometric_lambdas(double lambda0, double ratio, int count);

} // namespace degen
