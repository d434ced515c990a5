#include "degen/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>

#include "degen/numerics.hpp"

namespace degen {

std::vector<double> geometric_lambdas(double lambda0, double ratio, int count) {
    if (lambda0 <= 0.0 || ratio <= 1.0 || count < 1)
        throw std::invalid_argument("geometric_lambdas: need lambda0 > 0, ratio > 1, count >= 1");
    std::vector<double> ls(count);
    for (int j = 0; j < count; ++j) ls[j] = lambda0 * std::pow(ratio, -j);
    return ls;
}

bool SweepReport::all_rows_ok() const {
    for (const auto& r : rows)
        if (r.status != "ok") return false;
    return !rows.empty();
}

namespace {

MomentumGrid grid_for_prediction(const SweepTemplate& tmpl, double e_pred) {
    GridSpec spec = tmpl.grid_spec;
    spec.shells = 0;  // derive from e_min
    return build_momentum_grid(tmpl.sym, e_pred / 10.0, spec);
}

MomentumGrid refined_grid(const SweepTemplate& tmpl, double e_pred) {
    GridSpec spec = tmpl.grid_spec;
    spec.shells = 0;
    spec.angular = spec.angular + spec.angular / 2;
    spec.points_per_shell = std::min(6, spec.points_per_shell + 1);
    return build_momentum_grid(tmpl.sym, e_pred / 40.0, spec);
}

struct PositionGrid {
    std::vector<Point> nodes;
    std::vector<double> weights;
};

PositionGrid position_sample_grid(int dim, double radius) {
    PositionGrid g;
    GaussRule rad = gauss_legendre(48);
    int nang = 24;
    for (std::size_t i = 0; i < rad.x.size(); ++i) {
        double rho = 0.5 * radius * (rad.x[i] + 1.0);
        double wr = 0.5 * radius * rad.w[i] * std::pow(rho, dim - 1);
        if (dim == 2) {
            for (int k = 0; k < nang; ++k) {
                double th = 2.0 * M_PI * k / nang;
                g.nodes.push_back({rho * std::cos(th), rho * std::sin(th), 0.0});
                g.weights.push_back(wr * 2.0 * M_PI / nang);
            }
        } else {
            GaussRule gl = gauss_legendre(12);
            for (std::size_t a = 0; a < gl.x.size(); ++a) {
                double ct = gl.x[a], st = std::sqrt(1.0 - ct * ct);
                for (int k = 0; k < nang; ++k) {
                    double ph = 2.0 * M_PI * k / nang;
                    g.nodes.push_back({rho * st * std::cos(ph), rho * st * std::sin(ph), rho * ct});
                    g.weights.push_back(wr * gl.w[a] * 2.0 * M_PI / nang);
                }
            }
        }
    }
    return g;
}

using CVector = Eigen::VectorXcd;

CVector normalized(const PositionGrid& g, const CVector& v) {
    double nrm2 = 0.0;
    for (std::size_t i = 0; i < g.weights.size(); ++i) nrm2 += g.weights[i] * std::norm(v(i));
    return v / std::sqrt(nrm2);
}

std::complex<double> pg_dot(const PositionGrid& g, const CVector& a, const CVector& b) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < g.weights.size(); ++i) acc += g.weights[i] * std::conj(a(i)) * b(i);
    return acc;
}

} // namespace

double eigenvector_distance(const SweepTemplate& tmpl, const SurfaceOperatorSet& set,
                            const MomentumGrid& grid, const SolveRecord& rec) {
    if (!tmpl.V.has_closed_forms()) return -1.0;
    const int dim = tmpl.sym.dim();
    PositionGrid pg = position_sample_grid(dim, 8.0 * tmpl.V.width());
    const double norm = std::pow(2.0 * M_PI, -0.5 * dim);

    // V^{1/2} psi_lambda from the solved grid eigenvector:
    // psihat(p_m) = x_m / sqrt(W_m (T_m + e)), psi(x) by quadrature synthesis.
    CVector v(pg.nodes.size());
    for (std::size_t i = 0; i < pg.nodes.size(); ++i) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t m = 0; m < grid.size(); ++m) {
            double phase = dot(pg.nodes[i], grid.nodes[m]);
            double amp = std::sqrt(grid.weights[m]) * rec.eigenvector(m) /
                         std::sqrt(grid.kinetic[m] + rec.e);
            acc += amp * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        v(i) = norm * acc * tmpl.V.sqrt_abs_position(pg.nodes[i]);
    }
    v = normalized(pg, v);

    // Orthonormal basis of V^{1/2} F_S* (a_i eigenspace) on the sample grid.
    auto clusters =
        eigenvalue_clusters(set.eigs_VS.values, 1e-9 * (1.0 + set.eigs_VS.values.cwiseAbs().maxCoeff()));
    std::size_t ci = 0;
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (int idx : clusters[c])
            if (idx == rec.index - 1) ci = c;
    std::vector<CVector> basis;
    for (int idx : clusters[ci]) {
        CVector s(pg.nodes.size());
        std::vector<std::complex<double>> u(set.quad.size());
        for (std::size_t k = 0; k < set.quad.size(); ++k)
            u[k] = set.eigs_VS.vectors(k, idx) / std::sqrt(set.quad.weights[k]);
        for (std::size_t i = 0; i < pg.nodes.size(); ++i)
            s(i) = apply_FS_adjoint(set.quad, u, pg.nodes[i]) *
                   tmpl.V.sqrt_abs_position(pg.nodes[i]);
        for (const CVector& b : basis) s -= pg_dot(pg, b, s) * b;
        double nrm2 = std::real(pg_dot(pg, s, s));
        if (nrm2 > 1e-24) basis.push_back(s / std::sqrt(nrm2));
    }
    double proj2 = 0.0;
    for (const CVector& b : basis) proj2 += std::norm(pg_dot(pg, b, v));
    return std::sqrt(std::max(0.0, 1.0 - std::min(1.0, proj2)));
}

namespace {

SweepRow solve_one_lambda(const SweepTemplate& tmpl, const SurfaceOperatorSet& set, double a_i,
                          double lambda, int index) {
    SweepRow row;
    row.lambda = lambda;
    row.index = index;
    row.target = -1.0 / a_i;
    const double r = tmpl.sym.exponent();
    try {
        double e_pred = f_inverse(1.0 / (lambda * std::abs(a_i)), r);
        GridSpec probe_spec = tmpl.grid_spec;
        probe_spec.shells = 0;
        if (estimate_grid_nodes(tmpl.sym, e_pred / 10.0, probe_spec) > 12000) {
            // the predicted shift sits below what a practical grid resolves
            row.status = "no-bound-state";
            return row;
        }
        MomentumGrid grid = grid_for_prediction(tmpl, e_pred);
        BSContext ctx{tmpl.sym, tmpl.V, std::make_shared<MomentumGrid>(grid), lambda,
                      SignMode::attractive};
        BSOperator op(ctx);
        auto [lo, hi] = default_bracket(lambda, a_i, r);
        SolveRecord rec = solve_e(op, index, lo, hi, tmpl.mu_tol);
        row.e = rec.e;
        row.lambda_f_e = lambda * rec.f_e;
        row.first_order_residual = row.lambda_f_e - row.target;
        row.bs_residual = rec.bs_residual;
        row.grid_id = rec.grid_id;
        row.status = "ok";
        row.grid = ctx.grid;
        row.eigenvector = rec.eigenvector;

        if (tmpl.certify) {
            MomentumGrid fine = refined_grid(tmpl, e_pred);
            BSContext fctx{tmpl.sym, tmpl.V, std::make_shared<MomentumGrid>(fine), lambda,
                           SignMode::attractive};
            BSOperator fop(fctx);
            SolveRecord frec = solve_e(fop, index, rec.e / 4.0, rec.e * 4.0, tmpl.mu_tol);
            row.certificate_delta = std::abs(frec.e - rec.e) / rec.e;
            if (row.certificate_delta > 0.02) {
                row.status = "resolution-failure";
                return row;
            }
        }
        if (tmpl.track_vectors && tmpl.V.has_closed_forms())
            row.eigenvector_distance = eigenvector_distance(tmpl, set, *ctx.grid, rec);
    } catch (const NoBoundState&) {
        row.status = "no-bound-state";
    } catch (const ResolutionError&) {
        row.status = "resolution-failure";
    }
    return row;
}

} // namespace

SweepReport first_order_sweep(const SweepTemplate& tmpl, const std::vector<double>& lambdas,
                              int index) {
    if (lambdas.empty()) throw std::invalid_argument("first_order_sweep: empty lambda list");
    for (std::size_t j = 1; j < lambdas.size(); ++j)
        if (lambdas[j] >= lambdas[j - 1])
            throw std::invalid_argument("first_order_sweep: lambda list must be strictly decreasing");

    SurfaceOperatorSet set = make_surface_set(tmpl.sym, tmpl.V, tmpl.surface_resolution);
    if (index > set.eigs_VS.values.size() || set.eigs_VS.values(index - 1) >= 0.0)
        throw std::invalid_argument("first_order_sweep: a_S^i not negative at this resolution");
    double a_i = set.eigs_VS.values(index - 1);

    SweepReport rep;
    rep.index = index;
    rep.a_i = a_i;
    rep.rows.resize(lambdas.size());

    int threads = std::max(1, tmpl.threads);
    if (threads == 1) {
        for (std::size_t j = 0; j < lambdas.size(); ++j)
            rep.rows[j] = solve_one_lambda(tmpl, set, a_i, lambdas[j], index);
    } else {
        std::vector<std::future<SweepRow>> futs;
        for (std::size_t j = 0; j < lambdas.size(); ++j)
            futs.push_back(std::async(std::launch::async, [&, j] {
                return solve_one_lambda(tmpl, set, a_i, lambdas[j], index);
            }));
        for (std::size_t j = 0; j < lambdas.size(); ++j) rep.rows[j] = futs[j].get();
    }

    std::vector<double> xs, ys;
    for (const auto& row : rep.rows)
        if (row.status == "ok") {
            xs.push_back(row.lambda);
            ys.push_back(row.lambda_f_e);
        }
    if (xs.size() >= 2) {
        auto [c0, c1] = fit_linear(xs, ys);
        rep.extrapolated_lambda_f = c0;
        rep.fit_slope = c1;
        rep.extrapolation_error = std::abs(c0 * std::abs(a_i) - 1.0);
        rep.first_order_pass = rep.extrapolation_error <= 0.02;
    }
    rep.residuals_monotone = true;
    const SweepRow* prev = nullptr;
    for (const auto& row : rep.rows) {
        if (row.status != "ok") continue;
        if (prev && std::abs(row.first_order_residual) >= std::abs(prev->first_order_residual))
            rep.residuals_monotone = false;
        prev = &row;
    }

    rep.vector_distances_monotone = true;
    prev = nullptr;
    for (const auto& row : rep.rows) {
        if (row.status != "ok" || row.eigenvector_distance < 0.0) continue;
        if (prev && row.eigenvector_distance >= prev->eigenvector_distance)
            rep.vector_distances_monotone = false;
        prev = &row;
    }
    return rep;
}

void second_order_extend(const SweepTemplate& tmpl, SweepReport& rep) {
    const double r = tmpl.sym.exponent();
    if (r >= 2.0) throw std::invalid_argument("second_order_extend: requires r < 2");
    if (tmpl.ws_e_sequence.empty())
        throw std::invalid_argument("second_order_extend: template has no W_S ladder");

    GridSpec ws_spec = tmpl.grid_spec;
    ws_spec.shells = 0;
    double e_min = tmpl.ws_e_sequence.back() * 0.9;
    MomentumGrid ws_grid = build_momentum_grid(tmpl.sym, e_min, ws_spec);
    SurfaceOperatorSet set =
        make_surface_set(tmpl.sym, tmpl.V, tmpl.surface_resolution, tmpl.ws_e_sequence, &ws_grid);
    rep.ws_cauchy = set.ws_cauchy;

    int index = rep.index;
    Vector u = set.eigs_VS.vectors.col(index - 1);
    rep.u_W_u = u.dot((*set.WS) * u);
    rep.second_order_available = true;

    auto clusters =
        eigenvalue_clusters(set.eigs_VS.values, 1e-9 * (1.0 + set.eigs_VS.values.cwiseAbs().maxCoeff()));
    int my_cluster = -1, pos_in_cluster = 0;
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (std::size_t t = 0; t < clusters[c].size(); ++t)
            if (clusters[c][t] == index - 1) {
                my_cluster = static_cast<int>(c);
                pos_in_cluster = static_cast<int>(t);
            }

    for (auto& row : rep.rows) {
        if (row.status != "ok") continue;
        BSurfaceEigs bs = set.bs_eigenpairs(row.lambda);
        std::vector<double> matched;
        for (int i = 0; i < bs.values.size(); ++i)
            if (bs.vs_match[i] == my_cluster) matched.push_back(bs.values(i));
        std::sort(matched.begin(), matched.end());
        if (static_cast<int>(matched.size()) <= pos_in_cluster) {
            row.status = "resolution-failure";
            continue;
        }
        row.b_lambda = matched[pos_in_cluster];
        row.second_order_residual = f_of_e(row.e, r) + 1.0 / (row.lambda * row.b_lambda);
    }

    // gates at the convergent tail
    const SweepRow* last = nullptr;
    std::vector<const SweepRow*> ok;
    for (const auto& row : rep.rows)
        if (row.status == "ok") ok.push_back(&row);
    if (!ok.empty()) {
        last = ok.back();
        double first_res = f_of_e(last->e, r) + 1.0 / (last->lambda * rep.a_i);
        rep.second_vs_first_ratio =
            std::abs(last->second_order_residual) / std::max(1e-300, std::abs(first_res));
        rep.second_order_ratio_pass = rep.second_vs_first_ratio <= 0.5;
        double b_pred = rep.a_i - last->lambda * rep.u_W_u;
        rep.perturbation_consistency = std::abs(last->b_lambda - b_pred) / std::abs(last->b_lambda);
    }
    rep.second_order_decreasing = false;
    if (ok.size() >= 3) {
        double r0 = std::abs(ok[ok.size() - 3]->second_order_residual);
        double r1 = std::abs(ok[ok.size() - 2]->second_order_residual);
        double r2 = std::abs(ok[ok.size() - 1]->second_order_residual);
        rep.second_order_decreasing = r0 > r1 && r1 > r2;
    }
}

SweepReport run_sweep(const SweepTemplate& tmpl, const std::vector<double>& lambdas, int index) {
    SweepReport rep = first_order_sweep(tmpl, lambdas, index);
    if (!tmpl.ws_e_sequence.empty() && tmpl.sym.exponent() < 2.0) second_order_extend(tmpl, rep);
    return rep;
}

CountingReport counting_check(const SweepTemplate& tmpl, double lambda, int direct_count) {
    CountingReport rep;
    rep.lambda = lambda;
    const double r = tmpl.sym.exponent();

    GridSpec spec = tmpl.grid_spec;
    spec.shells = 0;
    MomentumGrid grid = build_momentum_grid(tmpl.sym, 1e-3, spec);
    rep.e_resolve = 10.0 * std::pow(grid.t_min, r);

    SurfaceOperatorSet set = make_surface_set(tmpl.sym, tmpl.V, tmpl.surface_resolution);
    for (double a : set.negative_eigenvalues()) {
        double e_pred = f_inverse(1.0 / (lambda * std::abs(a)), r);
        if (e_pred > rep.e_resolve) ++rep.surface_resolved_count;
    }

    BSContext ctx{tmpl.sym, tmpl.V, std::make_shared<MomentumGrid>(std::move(grid)), lambda,
                  tmpl.V.attractive() ? SignMode::attractive : SignMode::general};
    Vector lows = direct_spectrum(ctx, direct_count);
    for (int i = 0; i < lows.size(); ++i)
        if (lows(i) < -rep.e_resolve) ++rep.direct_negative_count;
    rep.pass = rep.direct_negative_count >= rep.surface_resolved_count;
    return rep;
}

std::vector<KernelCaseEntry> kernel_case_check(const SurfaceOperatorSet& set, double tol,
                                               double lambda) {
    if (!set.WS) throw std::logic_error("kernel_case_check: W_S has not been assembled");
    std::vector<KernelCaseEntry> out;
    Matrix B = set.VS - lambda * (*set.WS);
    for (int i = 0; i < set.eigs_VS.values.size(); ++i) {
        double a = set.eigs_VS.values(i);
        if (std::abs(a) >= tol) continue;
        KernelCaseEntry ent;
        ent.index = i;
        ent.a = a;
        Vector u = set.eigs_VS.vectors.col(i);
        ent.u_W_u = u.dot((*set.WS) * u);
        double b_form = u.dot(B * u);
        double alg = u.dot(set.VS * u) - lambda * ent.u_W_u;
        ent.identity_gap = std::abs(b_form - alg);
        out.push_back(ent);
    }
    return out;
}

} // namespace degen
