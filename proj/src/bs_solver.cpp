#include "degen/bs_solver.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace degen {

double f_of_e(double e, double r) {
    if (e <= 0.0) throw std::invalid_argument("f_of_e: e must be positive");
    if (r < 1.0) throw std::invalid_argument("f_of_e: r must be >= 1");
    if (r == 1.0) return 2.0 * std::log1p(1.0 / e);
    return 2.0 * M_PI / (r * std::sin(M_PI / r)) * std::pow(e, -(r - 1.0) / r);
}

double g_of_e(double e, double r) {
    if (e <= 0.0) throw std::invalid_argument("g_of_e: e must be positive");
    if (r < 1.0) throw std::invalid_argument("g_of_e: r must be >= 1");
    if (r < 2.0) return 1.0;
    if (r == 2.0) return 1.0 + std::log1p(1.0 / e);
    return 1.0 + std::pow(e, 2.0 - r);
}

double f_inverse(double f, double r) {
    if (f <= 0.0) throw std::invalid_argument("f_inverse: f must be positive");
    if (r < 1.0) throw std::invalid_argument("f_inverse: r must be >= 1");
    if (r == 1.0) return 1.0 / std::expm1(0.5 * f);
    double c = 2.0 * M_PI / (r * std::sin(M_PI / r));
    return std::pow(c / f, r / (r - 1.0));
}

void BSContext::validate() const {
    if (!grid) throw std::invalid_argument("BSContext: missing momentum grid");
    if (lambda < 0.0) throw std::invalid_argument("BSContext: lambda must be >= 0");
    if (sign_mode == SignMode::attractive && !(V.sign_definite() && V.attractive()))
        throw std::invalid_argument("BSContext: attractive mode requires sign-definite V <= 0");
    if (grid->dim != sym.dim() || V.dim() != sym.dim())
        throw std::invalid_argument("BSContext: dimension mismatch");
}

BSOperator::BSOperator(const BSContext& ctx) : ctx_(ctx), M_(ctx.grid->size()) {
    ctx_.validate();
    if (ctx_.sign_mode != SignMode::attractive)
        throw std::invalid_argument("BSOperator: general-sign V is handled by direct_spectrum only");
    if (M_ > 12000)
        throw ResolutionError("BSOperator: grid has " + std::to_string(M_) +
                              " nodes; the dense kernel would be impractical");
    const MomentumGrid& g = *ctx_.grid;
    const double norm = std::pow(2.0 * M_PI, -0.5 * g.dim);
    C_.resize(M_, M_);
    for (std::size_t m = 0; m < M_; ++m) {
        double swm = std::sqrt(g.weights[m]);
        for (std::size_t mm = m; mm < M_; ++mm) {
            double val = swm * std::sqrt(g.weights[mm]) * norm *
                         ctx_.V.abs_fourier_radial(dist(g.nodes[m], g.nodes[mm]));
            C_(m, mm) = val;
            C_(mm, m) = val;
        }
    }
}

Vector BSOperator::apply(double e, const Vector& x) const {
    const MomentumGrid& g = *ctx_.grid;
    Vector dx(M_);
    for (std::size_t m = 0; m < M_; ++m) dx(m) = x(m) / std::sqrt(g.kinetic[m] + e);
    Vector y = C_ * dx;
    for (std::size_t m = 0; m < M_; ++m) y(m) *= ctx_.lambda / std::sqrt(g.kinetic[m] + e);
    return y;
}

Matrix BSOperator::dense(double e) const {
    const MomentumGrid& g = *ctx_.grid;
    Vector d(M_);
    for (std::size_t m = 0; m < M_; ++m) d(m) = 1.0 / std::sqrt(g.kinetic[m] + e);
    return ctx_.lambda * d.asDiagonal() * C_ * d.asDiagonal();
}

namespace {

// One Lanczos run with full reorthogonalization, deflated against an already
// converged set. Returns up to `need` top Ritz pairs.
struct LanczosRound {
    std::vector<double> values;
    Matrix vectors;
};

LanczosRound lanczos_round(const std::function<Vector(const Vector&)>& matvec, std::size_t dim,
                           const Matrix& deflate, int need, double tol, int round) {
    LanczosRound out;
    out.vectors.resize(dim, 0);
    Vector v(dim);
    for (std::size_t m = 0; m < dim; ++m)
        v(m) = 1.0 + 0.01 * std::sin(3.7 * double(m + 1) * double(round + 1)) +
               0.003 * round * std::cos(1.3 * double(m));
    if (deflate.cols() > 0) v -= deflate * (deflate.transpose() * v);
    double nv = v.norm();
    if (nv < 1e-12) return out;
    v /= nv;

    const int maxdim = static_cast<int>(std::min<std::size_t>(dim - deflate.cols(), 420));
    if (maxdim < 1) return out;
    Matrix V(dim, maxdim);
    std::vector<double> alpha, beta;
    V.col(0) = v;
    double scale = 1.0;
    Eigen::SelfAdjointEigenSolver<Matrix> small;
    for (int j = 0; j < maxdim; ++j) {
        Vector w = matvec(V.col(j));
        if (deflate.cols() > 0) w -= deflate * (deflate.transpose() * w);
        double a = V.col(j).dot(w);
        alpha.push_back(a);
        w -= a * V.col(j);
        if (j > 0) w -= beta[j - 1] * V.col(j - 1);
        // two-pass reorthogonalization
        auto Vj = V.leftCols(j + 1);
        w -= Vj * (Vj.transpose() * w);
        w -= Vj * (Vj.transpose() * w);
        double b = w.norm();
        scale = std::max(scale, std::abs(a));

        bool breakdown = b < 1e-13 * scale;
        bool check = breakdown || j + 1 == maxdim || (j + 1 >= need && j % 2 == 1);
        if (check) {
            Matrix T = Matrix::Zero(j + 1, j + 1);
            for (int i = 0; i <= j; ++i) T(i, i) = alpha[i];
            for (int i = 0; i + 1 <= j; ++i) {
                T(i, i + 1) = beta[i];
                T(i + 1, i) = beta[i];
            }
            small.compute(T);
            int got = j + 1;
            int avail = std::min(need, got);
            bool all_ok = true;
            for (int t = 0; t < avail && all_ok; ++t) {
                int col = got - 1 - t;
                double resid = breakdown ? 0.0 : std::abs(b * small.eigenvectors()(j, col));
                if (resid > tol * scale) all_ok = false;
            }
            if ((all_ok && got >= need) || breakdown || j + 1 == maxdim) {
                for (int t = 0; t < avail; ++t) {
                    int col = got - 1 - t;
                    Vector ritz = V.leftCols(got) * small.eigenvectors().col(col);
                    ritz.normalize();
                    out.values.push_back(small.eigenvalues()(col));
                    out.vectors.conservativeResize(Eigen::NoChange, out.vectors.cols() + 1);
                    out.vectors.col(out.vectors.cols() - 1) = ritz;
                }
                return out;
            }
        }
        if (breakdown) break;
        beta.push_back(b);
        V.col(j + 1) = w / b;
    }
    return out;
}

// Top-count eigenpairs via deflated Lanczos rounds. Degenerate clusters give
// one copy per Krylov run, so once `count` values are present additional
// rounds probe the deflated remainder until nothing new reaches the count-th
// value (multiplicity verification).
Spectrum lanczos_top(const std::function<Vector(const Vector&)>& matvec, std::size_t dim,
                     int count, double tol) {
    count = std::min<int>(count, static_cast<int>(dim));
    Matrix converged_vecs(dim, 0);
    std::vector<double> converged_vals;

    for (int round = 0; round < 8; ++round) {
        int have = static_cast<int>(converged_vals.size());
        if (have >= count && count == 1) break;
        int need = std::max(1, count - have);
        LanczosRound r = lanczos_round(matvec, dim, converged_vecs, need, tol, round);
        double round_top = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < r.values.size(); ++t) {
            round_top = std::max(round_top, r.values[t]);
            converged_vals.push_back(r.values[t]);
            converged_vecs.conservativeResize(Eigen::NoChange, converged_vecs.cols() + 1);
            converged_vecs.col(converged_vecs.cols() - 1) = r.vectors.col(t);
        }
        if (static_cast<int>(converged_vals.size()) >= count) {
            if (count == 1) break;
            std::vector<double> sorted = converged_vals;
            std::sort(sorted.begin(), sorted.end(), std::greater<>());
            double threshold = sorted[count - 1];
            double scale = std::max(1.0, std::abs(sorted[0]));
            // the round found nothing at or above the current count-th value:
            // no degenerate copy is missing up there
            if (have >= count && round_top < threshold - 1e-10 * scale) break;
        }
        if (r.values.empty()) break;
    }

    // sort descending, keep `count`
    std::vector<int> order(converged_vals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return converged_vals[a] > converged_vals[b]; });
    int keep = std::min<int>(count, static_cast<int>(order.size()));
    Spectrum out;
    out.values.resize(keep);
    out.vectors.resize(dim, keep);
    for (int i = 0; i < keep; ++i) {
        out.values(i) = converged_vals[order[i]];
        out.vectors.col(i) = converged_vecs.col(order[i]);
    }
    return out;
}

} // namespace

Spectrum BSOperator::top_eigs(double e, int count, double tol) const {
    if (e <= 0.0) throw std::invalid_argument("top_eigs: e must be positive");
    if (ctx_.lambda == 0.0 || ctx_.V.is_zero()) {
        Spectrum z;
        z.values = Vector::Zero(std::min<int>(count, static_cast<int>(M_)));
        z.vectors = Matrix::Identity(M_, z.values.size());
        return z;
    }
    auto mv = [&](const Vector& x) { return apply(e, x); };
    return lanczos_top(mv, M_, count, tol);
}

std::pair<double, double> default_bracket(double lambda, double a_i, double r) {
    if (lambda <= 0.0) throw std::invalid_argument("default_bracket: lambda must be positive");
    if (a_i >= 0.0) throw std::invalid_argument("default_bracket: a_i must be negative");
    double e_star = f_inverse(1.0 / (lambda * std::abs(a_i)), r);
    return {e_star / 100.0, e_star * 100.0};
}

SolveRecord solve_e(const BSOperator& op, int index, double e_lo, double e_hi, double mu_tol) {
    if (index < 1) throw std::invalid_argument("solve_e: index must be >= 1");
    if (!(e_lo > 0.0 && e_hi > e_lo)) throw std::invalid_argument("solve_e: bad bracket");
    const int count = index;  // multiplicity-verified by the eigensolver

    auto mu_at = [&](double e) {
        Spectrum s = op.top_eigs(e, count);
        if (s.values.size() < index)
            throw ResolutionError("solve_e: eigensolver returned fewer than " +
                                  std::to_string(index) + " eigenvalues");
        return s;
    };

    Spectrum lo_s = mu_at(e_lo);
    double mu_lo = lo_s.values(index - 1);
    if (mu_lo <= 1.0)
        throw NoBoundState("no " + std::to_string(index) +
                           "-th bound state at lambda=" + std::to_string(op.context().lambda) +
                           " (mu=" + std::to_string(mu_lo) + " at bracket floor; grid resolves e >= " +
                           std::to_string(op.context().grid->e_min) + ")");
    double hi = e_hi;
    Spectrum hi_s = mu_at(hi);
    double mu_hi = hi_s.values(index - 1);
    int widen = 0;
    while (mu_hi > 1.0 && widen < 8) {
        hi *= 10.0;
        hi_s = mu_at(hi);
        mu_hi = hi_s.values(index - 1);
        ++widen;
    }
    if (mu_hi > 1.0) throw ResolutionError("solve_e: eigenvalue stays above 1 up to e=" + std::to_string(hi));

    // bisection in log e, then secant polish on mu - 1
    double xlo = std::log(e_lo), xhi = std::log(hi);
    double flo = mu_lo - 1.0, fhi = mu_hi - 1.0;
    while (xhi - xlo > 0.35) {
        double xm = 0.5 * (xlo + xhi);
        double fm = mu_at(std::exp(xm)).values(index - 1) - 1.0;
        if (fm > 0.0) {
            xlo = xm;
            flo = fm;
        } else {
            xhi = xm;
            fhi = fm;
        }
    }
    double x0 = xlo, f0 = flo, x1 = xhi, f1 = fhi;
    double xbest = (std::abs(f0) < std::abs(f1)) ? x0 : x1;
    double fbest = std::min(std::abs(f0), std::abs(f1));
    Spectrum best_s;
    for (int it = 0; it < 80 && fbest > mu_tol; ++it) {
        double xs = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!(xs > xlo && xs < xhi)) xs = 0.5 * (xlo + xhi);  // bisect fallback
        Spectrum s = mu_at(std::exp(xs));
        double fs = s.values(index - 1) - 1.0;
        if (fs > 0.0) {
            xlo = xs;
            flo = fs;
        } else {
            xhi = xs;
            fhi = fs;
        }
        x0 = x1;
        f0 = f1;
        x1 = xs;
        f1 = fs;
        if (std::abs(fs) < fbest) {
            fbest = std::abs(fs);
            xbest = xs;
            best_s = std::move(s);
        }
        if (xhi - xlo < 1e-15) break;
    }
    if (fbest > mu_tol)
        throw ResolutionError("solve_e: root polish stalled, |mu-1|=" + std::to_string(fbest));
    if (best_s.values.size() == 0) best_s = mu_at(std::exp(xbest));

    SolveRecord rec;
    rec.lambda = op.context().lambda;
    rec.index = index;
    rec.e = std::exp(xbest);
    rec.f_e = f_of_e(rec.e, op.context().sym.exponent());
    rec.bs_residual = fbest;
    rec.bracket_lo = e_lo;
    rec.bracket_hi = hi;
    rec.grid_id = op.context().grid->id();
    rec.eigenvector = best_s.vectors.col(index - 1);
    return rec;
}

std::vector<Probe> default_probe_family() {
    std::vector<Probe> ps;
    for (double sigma : {0.7, 1.0, 1.6, 2.4})
        for (double center : {0.0, 0.9, 1.8})
            for (double freq : {0.0, 0.7, 1.4, 2.2})
                ps.push_back({sigma, center, freq});
    return ps;
}

namespace {

struct ProbeProfile {
    // |phihat(p)|^2 for phi = |V|^{1/2} psi with a gaussian*plane-wave psi.
    double pref;
    double inv2a;
    double br, bi;  // beta along the first axis

    double operator()(const Point& p) const {
        double q = br * br - (bi - p[0]) * (bi - p[0]) - p[1] * p[1] - p[2] * p[2];
        return pref * std::exp(q * inv2a);
    }
};

ProbeProfile make_profile(const BSContext& ctx, const Probe& pr) {
    if (!ctx.V.has_closed_forms())
        throw std::logic_error("probe diagnostics need the closed-form |V|^{1/2} transform (gaussian kind)");
    const int n = ctx.sym.dim();
    const double w = ctx.V.width(), A = ctx.V.amplitude();
    double a = 1.0 / (4.0 * w * w) + 1.0 / (2.0 * pr.sigma * pr.sigma);
    ProbeProfile prof;
    prof.inv2a = 1.0 / (2.0 * a);
    prof.br = pr.center / (pr.sigma * pr.sigma);
    prof.bi = pr.freq;
    prof.pref = A * std::pow(M_PI / a, n) * std::pow(2.0 * M_PI, -n) *
                std::exp(-pr.center * pr.center / (pr.sigma * pr.sigma));
    return prof;
}

} // namespace

double me_quadform(const BSContext& ctx, const SurfaceQuadrature& quad, double e, const Probe& pr) {
    ctx.validate();
    if (ctx.V.is_zero()) return 0.0;
    ProbeProfile prof = make_profile(ctx, pr);
    const MomentumGrid& g = *ctx.grid;
    double vol = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m)
        vol += g.weights[m] * prof(g.nodes[m]) / (g.kinetic[m] + e);
    double surf = 0.0;
    for (std::size_t j = 0; j < quad.size(); ++j)
        surf += quad.weights[j] * prof(quad.nodes[j]) / quad.gradnorms[j];
    double psi_norm2 = std::pow(M_PI * pr.sigma * pr.sigma, 0.5 * ctx.sym.dim());
    return (vol - f_of_e(e, ctx.sym.exponent()) * surf) / psi_norm2;
}

MeProbeReport me_norm_probe(const BSContext& ctx, const SurfaceQuadrature& quad, double e,
                            const std::vector<Probe>& probes) {
    MeProbeReport rep;
    for (const Probe& pr : probes) {
        double q = me_quadform(ctx, quad, e, pr);
        rep.per_probe.push_back(q);
        rep.max_abs = std::max(rep.max_abs, std::abs(q));
    }
    return rep;
}

std::vector<double> m0_limit_residuals(const BSContext& ctx, const SurfaceQuadrature& quad,
                                       const std::vector<double>& e_sequence,
                                       const std::vector<Probe>& probes) {
    if (ctx.sym.exponent() >= 2.0)
        throw std::invalid_argument("m0_limit_residuals: M_0 exists only for r < 2");
    if (e_sequence.size() < 2)
        throw std::invalid_argument("m0_limit_residuals: need >= 2 shifts");
    std::vector<std::vector<double>> qs;
    for (double e : e_sequence) qs.push_back(me_norm_probe(ctx, quad, e, probes).per_probe);
    std::vector<double> res;
    for (std::size_t j = 0; j + 1 < qs.size(); ++j) {
        double d = 0.0;
        for (std::size_t i = 0; i < qs[j].size(); ++i)
            d = std::max(d, std::abs(qs[j][i] - qs[j + 1][i]));
        res.push_back(d);
    }
    return res;
}

ReducedOperatorResult reduced_surface_operator(const BSContext& ctx, const SurfaceQuadrature& quad,
                                               double e, const Matrix& VS) {
    ctx.validate();
    if (ctx.sign_mode != SignMode::attractive)
        throw std::invalid_argument("reduced_surface_operator: attractive mode only");
    const MomentumGrid& g = *ctx.grid;
    const std::size_t M = g.size(), N = quad.size();
    const int n = g.dim;
    const double norm = std::pow(2.0 * M_PI, -0.5 * n);
    const double lambda = ctx.lambda;
    const double f = f_of_e(e, ctx.sym.exponent());

    // sqrt(|V|) convolution kernel on the grid and its surface restriction
    Matrix S(M, M);
    for (std::size_t m = 0; m < M; ++m) {
        double swm = std::sqrt(g.weights[m]);
        for (std::size_t mm = m; mm < M; ++mm) {
            double val = swm * std::sqrt(g.weights[mm]) * norm *
                         ctx.V.sqrt_abs_fourier_radial(dist(g.nodes[m], g.nodes[mm]));
            S(m, mm) = val;
            S(mm, m) = val;
        }
    }
    Matrix E(N, M);
    for (std::size_t j = 0; j < N; ++j) {
        double pj = std::sqrt(quad.weights[j] / quad.gradnorms[j]);
        for (std::size_t m = 0; m < M; ++m)
            E(j, m) = pj * norm * ctx.V.sqrt_abs_fourier_radial(dist(quad.nodes[j], g.nodes[m])) *
                      std::sqrt(g.weights[m]);
    }
    Vector dres(M);
    for (std::size_t m = 0; m < M; ++m) dres(m) = 1.0 / (g.kinetic[m] + e);

    auto apply_Mtilde = [&](const Matrix& Y) {
        Matrix SY = S * Y;
        SY.array().colwise() *= dres.array();
        Matrix out = S * SY;
        out.noalias() -= f * (E.transpose() * (E * Y));
        return out;
    };

    ReducedOperatorResult res;
    Matrix acc = Matrix::Zero(N, N);
    Matrix Y = E.transpose();
    double prev_term = std::numeric_limits<double>::infinity();
    int grow = 0;
    int k = 0;
    for (k = 1; k <= 200; ++k) {
        Y = lambda * apply_Mtilde(Y);
        Matrix term = E * Y;
        double tn = term.norm();
        acc += term;
        if (tn < 1e-10 * std::max(1.0, acc.norm())) break;
        if (tn > prev_term) {
            if (++grow >= 4)
                throw ResolutionError("reduced_surface_operator: Neumann series diverges "
                                      "(lambda ||M_e|| >= 1)");
        } else {
            grow = 0;
        }
        prev_term = tn;
    }
    res.neumann_terms = k;
    acc = 0.5 * (acc + acc.transpose()).eval();
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(acc, Eigen::EigenvaluesOnly);
        res.g_term_norm = std::max(std::abs(es.eigenvalues()(0)),
                                   std::abs(es.eigenvalues()(es.eigenvalues().size() - 1)));
    }
    res.R = lambda * f * (VS - acc);
    res.R = 0.5 * (res.R + res.R.transpose()).eval();
    return res;
}

Vector direct_spectrum(const BSContext& ctx, int count) {
    ctx.validate();
    const MomentumGrid& g = *ctx.grid;
    const std::size_t M = g.size();
    const double norm = std::pow(2.0 * M_PI, -0.5 * g.dim);
    Matrix H(M, M);
    for (std::size_t m = 0; m < M; ++m) {
        double swm = std::sqrt(g.weights[m]);
        for (std::size_t mm = m; mm < M; ++mm) {
            double val = ctx.lambda * swm * std::sqrt(g.weights[mm]) * norm *
                         ctx.V.fourier_radial(dist(g.nodes[m], g.nodes[mm]));
            if (mm == m) val += g.kinetic[m];
            H(m, mm) = val;
            H(mm, m) = val;
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
    int keep = std::min<int>(count, static_cast<int>(M));
    return es.eigenvalues().head(keep);
}

ResidualCheckReport residual_spectrum_check(const BSOperator& op,
                                            const std::vector<double>& negative_as) {
    const double lambda = op.context().lambda;
    const double r = op.context().sym.exponent();
    ResidualCheckReport rep;
    if (lambda == 0.0 || op.context().V.is_zero()) return rep;
    rep.probe_e = f_inverse(0.1 / (lambda * lambda), r);
    double f = f_of_e(rep.probe_e, r);
    for (double a : negative_as)
        if (lambda * f * std::abs(a) > 1.0) ++rep.surface_count;

    int k = std::max(4, rep.surface_count + 2);
    for (;;) {
        Spectrum s = op.top_eigs(rep.probe_e, k);
        int above = 0;
        for (int i = 0; i < s.values.size(); ++i)
            if (s.values(i) > 1.0) ++above;
        if (above < s.values.size() || s.values.size() < k) {
            rep.bs_count = above;
            break;
        }
        k *= 2;
        if (k > static_cast<int>(op.size())) {
            rep.bs_count = above;
            break;
        }
    }
    rep.match = (rep.bs_count == rep.surface_count);
    return rep;
}

} // namespace degen
