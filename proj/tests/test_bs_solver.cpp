#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "degen/bs_solver.hpp"
#include "degen/numerics.hpp"

using namespace degen;

namespace {

// Cheap-ish grid for solver tests.
GridSpec test_spec() {
    GridSpec s;
    s.angular = 24;
    s.grading_ratio = 0.6;
    return s;
}

BSContext make_ctx(const KineticSymbol& sym, const Potential& V, double lambda, double e_min,
                   GridSpec spec) {
    return BSContext{sym, V, std::make_shared<MomentumGrid>(build_momentum_grid(sym, e_min, spec)),
                     lambda, SignMode::attractive};
}

double a1_n2_bcs_gauss() { return -0.5 * std::exp(-1.0) * std::cyl_bessel_i(0.0, 1.0); }

// Tabulated transform of a repulsive gaussian +A e^{-|x|^2/(2w^2)}.
Potential repulsive_gaussian_tab(int n, double A, double w, double kmax) {
    std::vector<double> rs, vs;
    for (int i = 0; i <= 4000; ++i) {
        double k = kmax * i / 4000.0;
        rs.push_back(k);
        vs.push_back(A * std::pow(w, n) * std::exp(-0.5 * w * w * k * k));
    }
    return Potential::tabulated(n, rs, vs, true, false);
}

} // namespace

TEST_CASE("f closed forms per exponent branch") {
    CHECK(f_of_e(1.0, 1.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
    CHECK(f_of_e(1.0, 2.0) == doctest::Approx(M_PI).epsilon(1e-15));
    CHECK_THROWS_AS(f_of_e(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(f_of_e(0.0, 1.0), std::invalid_argument);
    // strictly decreasing
    CHECK(f_of_e(0.1, 1.5) > f_of_e(0.2, 1.5));
    CHECK(f_of_e(1e-4, 1.0) > f_of_e(1e-3, 1.0));
}

TEST_CASE("f matches the defining integral 2 int dt/(t^r + e)") {
    for (double r : {1.25, 1.5, 2.0, 3.0}) {
        for (double e : {1e-4, 1e-2, 0.2, 1.0}) {
            // split: t in [0, 1] direct; t in [1, inf) via u = 1/t, then
            // u = v^8 to flatten the u^{r-2} endpoint
            auto head = [&](double t) { return 2.0 / (std::pow(t, r) + e); };
            auto tail = [&](double v) {
                return 16.0 * std::pow(v, 8.0 * r - 9.0) / (1.0 + e * std::pow(v, 8.0 * r));
            };
            double oracle = integrate_adaptive(head, 0.0, 1.0, 1e-13) +
                            integrate_adaptive(tail, 0.0, 1.0, 1e-13);
            CHECK(f_of_e(e, r) == doctest::Approx(oracle).epsilon(1e-8));
        }
    }
    // r = 1: logarithm identity for the [0,1] cutoff integral
    for (double e : {1e-4, 1e-2, 1.0})
        CHECK(2.0 * std::log((1.0 + e) / e) == doctest::Approx(f_of_e(e, 1.0)).epsilon(1e-14));
}

TEST_CASE("f_inverse round trips") {
    for (double r : {1.0, 1.5, 2.0, 3.0})
        for (double e : {1e-5, 1e-3, 0.3})
            CHECK(f_inverse(f_of_e(e, r), r) == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("g branches") {
    CHECK(g_of_e(0.37, 1.5) == 1.0);
    CHECK(g_of_e(1.0, 2.0) == doctest::Approx(1.0 + std::log(2.0)));
    CHECK(g_of_e(0.5, 3.0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(g_of_e(1.0, 0.9), std::invalid_argument);
}

TEST_CASE("BS operator: lambda 0, monotonicity in e, linearity in lambda") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    GridSpec spec = test_spec();
    spec.angular = 12;
    BSContext ctx = make_ctx(sym, V, 0.0, 1e-2, spec);
    BSOperator op0(ctx);
    CHECK(op0.top_eigs(0.1, 3).values.cwiseAbs().maxCoeff() == 0.0);

    ctx.lambda = 0.4;
    BSOperator op(ctx);
    Spectrum s1 = op.top_eigs(0.05, 5);
    Spectrum s2 = op.top_eigs(0.15, 5);
    for (int i = 0; i < 5; ++i) CHECK(s2.values(i) < s1.values(i));

    BSContext ctx2 = ctx;
    ctx2.lambda = 0.8;
    BSOperator opd(ctx2);
    Matrix d1 = op.dense(0.07), d2 = opd.dense(0.07);
    CHECK((d2 - 2.0 * d1).norm() <= 1e-14 * d1.norm());
}

TEST_CASE("BS operator dense matches matvec") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    GridSpec spec = test_spec();
    spec.angular = 8;
    BSContext ctx = make_ctx(sym, V, 0.3, 1e-1, spec);
    BSOperator op(ctx);
    Vector x = Vector::LinSpaced(op.size(), -1.0, 1.0);
    Vector via_mat = op.dense(0.2) * x;
    Vector via_mv = op.apply(0.2, x);
    CHECK((via_mat - via_mv).norm() <= 1e-12 * via_mat.norm());
}

TEST_CASE("BS top eigenvalue factorizes into lambda f(e) |a1| as e -> 0") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    double lambda = 0.01;
    double a1 = a1_n2_bcs_gauss();
    BSContext ctx = make_ctx(sym, V, lambda, 1e-3, test_spec());
    BSOperator op(ctx);
    double q2 = op.top_eigs(1e-2, 1).values(0) / (lambda * f_of_e(1e-2, 1.0) * std::abs(a1));
    double q3 = op.top_eigs(1e-3, 1).values(0) / (lambda * f_of_e(1e-3, 1.0) * std::abs(a1));
    // the o(1) term decays like 1/f(e); check magnitude and rate
    CHECK(std::abs(q2 - 1.0) < 1.0 / f_of_e(1e-2, 1.0));
    CHECK(std::abs(q3 - 1.0) < 1.0 / f_of_e(1e-3, 1.0));
    CHECK(std::abs(q3 - 1.0) < std::abs(q2 - 1.0));
    double rate = (q3 - 1.0) / (q2 - 1.0);
    double predicted = f_of_e(1e-2, 1.0) / f_of_e(1e-3, 1.0);
    CHECK(std::abs(rate - predicted) < 0.15 * predicted);
}

TEST_CASE("top_eigs resolves exactly degenerate pairs (vs dense)") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    GridSpec spec = test_spec();
    spec.angular = 10;
    BSContext ctx = make_ctx(sym, V, 0.5, 1e-1, spec);
    BSOperator op(ctx);
    const double e = 0.12;
    Eigen::SelfAdjointEigenSolver<Matrix> dense(op.dense(e));
    Spectrum it = op.top_eigs(e, 5);
    int n = static_cast<int>(dense.eigenvalues().size());
    for (int i = 0; i < 5; ++i) {
        double truth = dense.eigenvalues()(n - 1 - i);
        CHECK(it.values(i) == doctest::Approx(truth).epsilon(1e-9));
    }
    // the m = +-1 modes are an exact pair on the symmetric angular grid
    CHECK(it.values(1) == doctest::Approx(it.values(2)).epsilon(1e-12));
}

TEST_CASE("solve_e: no bound state for V = 0") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V0 = Potential::gaussian(2, 0.0, 1.0);
    GridSpec spec = test_spec();
    spec.angular = 8;
    BSContext ctx = make_ctx(sym, V0, 0.5, 1e-2, spec);
    BSOperator op(ctx);
    CHECK_THROWS_AS(solve_e(op, 1, 1e-3, 1e-1), NoBoundState);
}

TEST_CASE("solve_e: monotone in lambda and 15% first-order accuracy") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    double a1 = a1_n2_bcs_gauss();

    auto solve_at = [&](double lambda) {
        double e_pred = f_inverse(1.0 / (lambda * std::abs(a1)), 1.0);
        BSContext ctx = make_ctx(sym, V, lambda, e_pred / 10.0, test_spec());
        BSOperator op(ctx);
        auto [lo, hi] = default_bracket(lambda, a1, 1.0);
        return solve_e(op, 1, lo, hi);
    };
    SolveRecord r1 = solve_at(0.4);
    SolveRecord r2 = solve_at(0.6);
    CHECK(r2.e > r1.e);
    CHECK(r1.bs_residual <= 1e-8);

    // lambda |a1| ~ 0.05
    double lam = 0.05 / std::abs(a1);
    SolveRecord r3 = solve_at(lam);
    double lf = lam * f_of_e(r3.e, 1.0);
    CHECK(std::abs(lf * std::abs(a1) - 1.0) < 0.15);
}

TEST_CASE("solve_e is deterministic") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    BSContext ctx = make_ctx(sym, V, 0.5, 1e-3, test_spec());
    BSOperator op(ctx);
    SolveRecord a = solve_e(op, 1, 1e-3, 1.0);
    SolveRecord b = solve_e(op, 1, 1e-3, 1.0);
    CHECK(a.e == b.e);
    CHECK(a.bs_residual == b.bs_residual);
}

TEST_CASE("eigenvector identity at the solution") {
    // phi = -S D^{1/2} x solves lambda V^{1/2}(T+e)^{-1}|V|^{1/2} phi = -phi
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    double lambda = 0.6;
    BSContext ctx = make_ctx(sym, V, lambda, 1e-3, test_spec());
    BSOperator op(ctx);
    SolveRecord rec = solve_e(op, 1, 1e-4, 1.0);

    const MomentumGrid& g = *ctx.grid;
    const std::size_t M = g.size();
    const double norm = std::pow(2.0 * M_PI, -0.5 * g.dim);
    Matrix S(M, M);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t mm = m; mm < M; ++mm) {
            double val = std::sqrt(g.weights[m] * g.weights[mm]) * norm *
                         V.sqrt_abs_fourier_radial(dist(g.nodes[m], g.nodes[mm]));
            S(m, mm) = val;
            S(mm, m) = val;
        }
    Vector dhalf(M), dres(M);
    for (std::size_t m = 0; m < M; ++m) {
        dhalf(m) = 1.0 / std::sqrt(g.kinetic[m] + rec.e);
        dres(m) = 1.0 / (g.kinetic[m] + rec.e);
    }
    Vector phi = -(S * dhalf.cwiseProduct(rec.eigenvector));
    phi.normalize();
    Vector lhs = -lambda * (S * dres.cwiseProduct(S * phi));  // lambda V^{1/2}(T+e)^{-1}|V|^{1/2}
    CHECK((lhs + phi).norm() <= 1e-6);
}

TEST_CASE("probe diagnostics: zero potential and r >= 2 refusals") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    SurfaceQuadrature quad = build_surface_quadrature(sym, 0.0, 24);
    GridSpec spec = test_spec();
    BSContext ctx0 = make_ctx(sym, Potential::gaussian(2, 0.0, 1.0), 0.1, 1e-3, spec);
    MeProbeReport rep = me_norm_probe(ctx0, quad, 1e-2);
    CHECK(rep.max_abs == 0.0);

    KineticSymbol r2 = KineticSymbol::bcs(2, 1.0, 2.0);
    BSContext ctx2 = make_ctx(r2, Potential::gaussian(2, 1.0, 1.0), 0.1, 1e-3, spec);
    SurfaceQuadrature quad2 = build_surface_quadrature(r2, 0.0, 24);
    CHECK_THROWS_AS(m0_limit_residuals(ctx2, quad2, {1e-2, 1e-3, 1e-4}), std::invalid_argument);
}

TEST_CASE("probe bound bounded for r=1 and M_0 residuals decreasing") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    SurfaceQuadrature quad = build_surface_quadrature(sym, 0.0, 32);
    GridSpec spec = test_spec();
    BSContext ctx = make_ctx(sym, V, 0.1, 1e-5, spec);

    std::vector<double> es{1e-2, 1e-3, 1e-4};
    std::vector<double> bounds;
    for (double e : es) bounds.push_back(me_norm_probe(ctx, quad, e).max_abs);
    for (double b : bounds) CHECK(b < 10.0);
    double spread = (*std::max_element(bounds.begin(), bounds.end()) -
                     *std::min_element(bounds.begin(), bounds.end())) /
                    *std::max_element(bounds.begin(), bounds.end());
    CHECK(spread < 0.5);

    std::vector<double> res = m0_limit_residuals(ctx, quad, {1e-2, 1e-3, 1e-4, 1e-5});
    REQUIRE(res.size() == 3);
    CHECK(res[0] > res[1]);
    CHECK(res[1] > res[2]);
}

TEST_CASE("reduced operator: small-lambda limit is lambda f V_S") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    SurfaceQuadrature quad = build_surface_quadrature(sym, 0.0, 24);
    Matrix VS = assemble_VS(quad, V);
    GridSpec spec = test_spec();
    spec.angular = 16;
    double lambda = 1e-3, e = 1e-2;
    BSContext ctx = make_ctx(sym, V, lambda, 1e-3, spec);
    ReducedOperatorResult red = reduced_surface_operator(ctx, quad, e, VS);
    Eigen::SelfAdjointEigenSolver<Matrix> er(red.R), ev(VS);
    double lf = lambda * f_of_e(e, 1.0);
    CHECK((er.eigenvalues() - lf * ev.eigenvalues()).cwiseAbs().maxCoeff() <=
          2e-3 * lf * ev.eigenvalues().cwiseAbs().maxCoeff());
    CHECK(red.g_term_norm <= 1.0 * lambda);  // ||F_S G F_S*|| = O(lambda)
}

TEST_CASE("reduced operator has eigenvalue -1 at the solved shift") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    double lambda = 0.45;
    double a1 = a1_n2_bcs_gauss();
    double e_pred = f_inverse(1.0 / (lambda * std::abs(a1)), 1.0);
    GridSpec spec = test_spec();
    BSContext ctx = make_ctx(sym, V, lambda, e_pred / 10.0, spec);
    BSOperator op(ctx);
    auto [lo, hi] = default_bracket(lambda, a1, 1.0);
    SolveRecord rec = solve_e(op, 1, lo, hi);

    SurfaceQuadrature quad = build_surface_quadrature(sym, 0.0, 32);
    Matrix VS = assemble_VS(quad, V);
    ReducedOperatorResult red = reduced_surface_operator(ctx, quad, rec.e, VS);
    Eigen::SelfAdjointEigenSolver<Matrix> er(red.R, Eigen::EigenvaluesOnly);
    double closest = 1e9;
    for (int i = 0; i < er.eigenvalues().size(); ++i)
        closest = std::min(closest, std::abs(er.eigenvalues()(i) + 1.0));
    CHECK(closest <= 1e-4);
}

TEST_CASE("direct spectrum: lambda 0 floor and repulsive V") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    GridSpec spec = test_spec();
    spec.angular = 12;
    BSContext ctx0{sym, Potential::gaussian(2, 1.0, 1.0),
                   std::make_shared<MomentumGrid>(build_momentum_grid(sym, 1e-2, spec)), 0.0,
                   SignMode::attractive};
    Vector lows = direct_spectrum(ctx0, 5);
    CHECK(lows(0) >= 0.0);

    Potential rep = repulsive_gaussian_tab(2, 1.0, 1.0, 2.5 * ctx0.grid->cutoff);
    BSContext ctxr{sym, rep, ctx0.grid, 0.5, SignMode::general};
    Vector lowr = direct_spectrum(ctxr, 8);
    for (int i = 0; i < lowr.size(); ++i) CHECK(lowr(i) >= -1e-12);
}

TEST_CASE("dual method agreement at moderate coupling") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    double lambda = 0.44;  // bound state near e ~ 1e-2
    double a1 = a1_n2_bcs_gauss();
    double e_pred = f_inverse(1.0 / (lambda * std::abs(a1)), 1.0);
    GridSpec spec = test_spec();
    BSContext ctx = make_ctx(sym, V, lambda, e_pred / 10.0, spec);
    BSOperator op(ctx);
    auto [lo, hi] = default_bracket(lambda, a1, 1.0);
    SolveRecord rec = solve_e(op, 1, lo, hi);
    Vector lows = direct_spectrum(ctx, 4);
    double direct_e = -lows(0);
    CHECK(std::abs(direct_e - rec.e) / rec.e < 0.01);
}

TEST_CASE("residual spectrum check counts match") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    SurfaceOperatorSet set = make_surface_set(sym, V, 48);

    // r = 1: the exponential law pushes every surface state below the
    // lambda^2 separation scale at any practically resolvable coupling, so
    // both counts vanish and still agree.
    GridSpec spec = test_spec();
    BSContext ctx = make_ctx(sym, V, 0.35, 1e-3, spec);
    BSOperator op(ctx);
    ResidualCheckReport rep = residual_spectrum_check(op, set.negative_eigenvalues());
    CHECK(rep.match);

    // count of eigenvalues above 1 is non-decreasing as the probe e is lowered
    auto count_above = [&](double e) {
        Spectrum s = op.top_eigs(e, 8);
        int c = 0;
        for (int i = 0; i < s.values.size(); ++i)
            if (s.values(i) > 1.0) ++c;
        return c;
    };
    int c1 = count_above(rep.probe_e);
    int c2 = count_above(rep.probe_e / 10.0);
    int c3 = count_above(rep.probe_e / 100.0);
    CHECK(c2 >= c1);
    CHECK(c3 >= c2);

    BSContext ctx0 = make_ctx(sym, Potential::gaussian(2, 0.0, 1.0), 0.35, 1e-3, spec);
    BSOperator op0(ctx0);
    ResidualCheckReport rep0 = residual_spectrum_check(op0, {});
    CHECK(rep0.bs_count == 0);
    CHECK(rep0.surface_count == 0);

    // r = 2 roton at small coupling: the ground state sits above the
    // separation scale while the degenerate pair sits below it.
    KineticSymbol rt = KineticSymbol::roton(2, 1.0, 0.5, 0.2);
    SurfaceOperatorSet rset = make_surface_set(rt, V, 48);
    double lam = 0.04;
    double e_star = f_inverse(0.1 / (lam * lam), 2.0);
    BSContext rctx = make_ctx(rt, V, lam, e_star / 10.0, spec);
    BSOperator rop(rctx);
    ResidualCheckReport rrep = residual_spectrum_check(rop, rset.negative_eigenvalues());
    CHECK(rrep.match);
    CHECK(rrep.surface_count >= 1);
}

TEST_CASE("root certificate: refined grid moves the root by under 2%") {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    double lambda = 0.5;
    double a1 = a1_n2_bcs_gauss();
    double e_pred = f_inverse(1.0 / (lambda * std::abs(a1)), 1.0);

    GridSpec coarse = test_spec();
    BSContext ctx = make_ctx(sym, V, lambda, e_pred / 10.0, coarse);
    BSOperator op(ctx);
    auto [lo, hi] = default_bracket(lambda, a1, 1.0);
    SolveRecord rec = solve_e(op, 1, lo, hi);

    GridSpec fine = coarse;
    fine.angular = 36;
    fine.points_per_shell = 4;
    BSContext fctx = make_ctx(sym, V, lambda, e_pred / 40.0, fine);
    BSOperator fop(fctx);
    SolveRecord frec = solve_e(fop, 1, rec.e / 4.0, rec.e * 4.0);
    CHECK(std::abs(frec.e - rec.e) / rec.e <= 0.02);
}
