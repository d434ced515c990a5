#include "degen/surface_ops.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "degen/bs_solver.hpp"

namespace degen {

namespace {

double two_pi_pow(int n) { return std::pow(2.0 * M_PI, 0.5 * n); }

} // namespace

Matrix assemble_VS(const SurfaceQuadrature& quad, const Potential& V) {
    if (quad.level != 0.0)
        throw std::invalid_argument("assemble_VS: quadrature must live on S (level 0)");
    const std::size_t N = quad.size();
    const double norm = 1.0 / two_pi_pow(quad.dim);
    Matrix K(N, N);
    for (std::size_t j = 0; j < N; ++j) {
        for (std::size_t k = j; k < N; ++k) {
            double kern = V.fourier_radial(dist(quad.nodes[j], quad.nodes[k]));
            double val = std::sqrt(quad.weights[j] * quad.weights[k]) * norm * kern /
                         std::sqrt(quad.gradnorms[j] * quad.gradnorms[k]);
            K(j, k) = val;
            K(k, j) = val;
        }
    }
    return K;
}

Spectrum surface_spectrum(const Matrix& K, int count) {
    if (K.rows() != K.cols()) throw std::invalid_argument("surface_spectrum: matrix not square");
    if (count < 1 || count > K.rows())
        throw std::invalid_argument("surface_spectrum: count out of range");
    Eigen::SelfAdjointEigenSolver<Matrix> es(K);
    if (es.info() != Eigen::Success) throw std::runtime_error("surface_spectrum: eigensolver failed");
    Spectrum s;
    s.values = es.eigenvalues().head(count);
    s.vectors = es.eigenvectors().leftCols(count);
    return s;
}

std::complex<double> apply_FS_adjoint(const SurfaceQuadrature& quad,
                                      const std::vector<std::complex<double>>& u, const Point& x) {
    if (u.size() != quad.size())
        throw std::invalid_argument("apply_FS_adjoint: vector size mismatch");
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t k = 0; k < quad.size(); ++k) {
        double phase = dot(x, quad.nodes[k]);
        acc += quad.weights[k] / std::sqrt(quad.gradnorms[k]) *
               std::complex<double>(std::cos(phase), std::sin(phase)) * u[k];
    }
    return acc / two_pi_pow(quad.dim);
}

namespace {

// Momentum profile matrix of V F_S*: Phi_mk = sqrt(W_m/(T_m+e)) w_k(p_m)
// with w_k(p) = (2pi)^{-n/2} sqrt(w_k/g_k) Vhat(p - p_k).
Matrix assemble_phi(const SurfaceQuadrature& quad, const Potential& V, double e,
                    const MomentumGrid& grid) {
    const std::size_t M = grid.size(), N = quad.size();
    const double norm = 1.0 / two_pi_pow(grid.dim);
    Matrix Phi(M, N);
    for (std::size_t m = 0; m < M; ++m) {
        double pref = std::sqrt(grid.weights[m] / (grid.kinetic[m] + e));
        for (std::size_t k = 0; k < N; ++k) {
            Phi(m, k) = pref * norm * std::sqrt(quad.weights[k] / quad.gradnorms[k]) *
                        V.fourier_radial(dist(grid.nodes[m], quad.nodes[k]));
        }
    }
    return Phi;
}

} // namespace

Matrix assemble_Q(const SurfaceQuadrature& quad, const Potential& V, const KineticSymbol& sym,
                  double e, const MomentumGrid& grid) {
    (void)sym;
    if (e <= 0.0) throw std::invalid_argument("assemble_Q: e must be positive");
    if (grid.e_min > e * (1.0 + 1e-12))
        throw std::invalid_argument("assemble_Q: grid too coarse for e (grid e_min " +
                                    std::to_string(grid.e_min) + " > " + std::to_string(e) + ")");
    Matrix Phi = assemble_phi(quad, V, e, grid);
    Matrix Q = Phi.transpose() * Phi;
    Q = 0.5 * (Q + Q.transpose()).eval();
    return Q;
}

double ws_quadform_direct(const SurfaceQuadrature& quad, const Potential& V,
                          const KineticSymbol& sym, double e, const MomentumGrid& grid,
                          const Vector& u) {
    // (u, [F_S V (T+e)^{-1} V F_S* - f(e) (F_S V F_S*)^2] u) evaluated from
    // scratch: h(p) = sum_k w_k(p) u_k, volume term sum_m W_m h(p_m)^2/(T+e),
    // surface term f(e) ||F_S V F_S* u||^2 via pointwise restriction of h.
    const double norm = 1.0 / two_pi_pow(grid.dim);
    auto h_at = [&](const Point& p) {
        double acc = 0.0;
        for (std::size_t k = 0; k < quad.size(); ++k)
            acc += norm * std::sqrt(quad.weights[k] / quad.gradnorms[k]) *
                   V.fourier_radial(dist(p, quad.nodes[k])) * u[k];
        return acc;
    };
    double vol = 0.0;
    for (std::size_t m = 0; m < grid.size(); ++m) {
        double h = h_at(grid.nodes[m]);
        vol += grid.weights[m] * h * h / (grid.kinetic[m] + e);
    }
    double surf = 0.0;
    for (std::size_t j = 0; j < quad.size(); ++j) {
        double hj = h_at(quad.nodes[j]) * std::sqrt(quad.weights[j] / quad.gradnorms[j]);
        surf += hj * hj;
    }
    return vol - f_of_e(e, sym.exponent()) * surf;
}

WSResult assemble_WS(const SurfaceQuadrature& quad, const Potential& V, const KineticSymbol& sym,
                     const std::vector<double>& e_sequence, const MomentumGrid& grid) {
    const double r = sym.exponent();
    if (r >= 2.0)
        throw std::invalid_argument("assemble_WS: W_S is defined only for r < 2");
    if (e_sequence.size() < 3)
        throw std::invalid_argument("assemble_WS: need at least 3 values of e");
    for (std::size_t i = 1; i < e_sequence.size(); ++i)
        if (e_sequence[i] >= e_sequence[i - 1])
            throw std::invalid_argument("assemble_WS: e_sequence must be strictly decreasing");

    Matrix VS = assemble_VS(quad, V);
    Matrix VS2 = VS * VS;

    WSResult res;
    res.e_sequence = e_sequence;
    std::vector<Matrix> W;
    W.reserve(e_sequence.size());
    for (double e : e_sequence)
        W.push_back(assemble_Q(quad, V, sym, e, grid) - f_of_e(e, r) * VS2);
    for (std::size_t j = 0; j + 1 < W.size(); ++j) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(W[j] - W[j + 1], Eigen::EigenvaluesOnly);
        double nrm = std::max(std::abs(es.eigenvalues()(0)),
                              std::abs(es.eigenvalues()(es.eigenvalues().size() - 1)));
        res.cauchy_residuals.push_back(nrm);
    }
    for (std::size_t j = 0; j + 1 < res.cauchy_residuals.size(); ++j)
        if (res.cauchy_residuals[j + 1] >= res.cauchy_residuals[j]) res.residuals_decreasing = false;

    // One Richardson pass at the leading rate e^{2-r}; the ladder ratio is
    // taken from the last pair.
    double rho = e_sequence[e_sequence.size() - 2] / e_sequence.back();
    double q = std::pow(rho, 2.0 - r);
    std::size_t last = W.size() - 1;
    res.WS = (q * W[last] - W[last - 1]) / (q - 1.0);
    res.WS = 0.5 * (res.WS + res.WS.transpose()).eval();
    return res;
}

std::vector<double> default_ws_e_sequence() {
    std::vector<double> es;
    for (int j = 0; j < 4; ++j) es.push_back(1e-2 * std::pow(4.0, -j));
    return es;
}

std::vector<std::vector<int>> eigenvalue_clusters(const Vector& values, double tol) {
    std::vector<std::vector<int>> clusters;
    for (int i = 0; i < values.size(); ++i) {
        if (!clusters.empty() && std::abs(values(i) - values(clusters.back().back())) <= tol)
            clusters.back().push_back(i);
        else
            clusters.push_back({i});
    }
    return clusters;
}

BSurfaceEigs SurfaceOperatorSet::bs_eigenpairs(double lambda) const {
    if (!WS) throw std::logic_error("bs_eigenpairs: W_S has not been assembled");
    Matrix B = VS - lambda * (*WS);
    Eigen::SelfAdjointEigenSolver<Matrix> es(B);
    BSurfaceEigs out;
    out.values = es.eigenvalues();
    out.vectors = es.eigenvectors();

    // Match each eigenvector to the VS cluster with the largest projector
    // alignment; ties broken by eigenvalue proximity.
    auto clusters = eigenvalue_clusters(eigs_VS.values, 1e-9 * (1.0 + eigs_VS.values.cwiseAbs().maxCoeff()));
    out.vs_match.assign(out.values.size(), -1);
    for (int i = 0; i < out.values.size(); ++i) {
        double best = -1.0;
        int best_c = -1;
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            double overlap = 0.0;
            for (int idx : clusters[c]) {
                double pr = eigs_VS.vectors.col(idx).dot(out.vectors.col(i));
                overlap += pr * pr;
            }
            double tie = -std::abs(out.values(i) - eigs_VS.values(clusters[c][0])) * 1e-12;
            if (overlap + tie > best) {
                best = overlap + tie;
                best_c = static_cast<int>(c);
            }
        }
        out.vs_match[i] = best_c;
    }
    return out;
}

std::vector<double> SurfaceOperatorSet::negative_eigenvalues() const {
    std::vector<double> neg;
    for (int i = 0; i < eigs_VS.values.size(); ++i)
        if (eigs_VS.values(i) < 0.0) neg.push_back(eigs_VS.values(i));
    return neg;
}

SurfaceOperatorSet make_surface_set(const KineticSymbol& sym, const Potential& V, int resolution,
                                    const std::vector<double>& ws_e_sequence,
                                    const MomentumGrid* grid) {
    SurfaceOperatorSet set;
    set.quad = build_surface_quadrature(sym, 0.0, resolution);
    set.VS = assemble_VS(set.quad, V);
    Eigen::SelfAdjointEigenSolver<Matrix> es(set.VS);
    set.eigs_VS.values = es.eigenvalues();
    set.eigs_VS.vectors = es.eigenvectors();
    if (!ws_e_sequence.empty()) {
        if (!grid) throw std::invalid_argument("make_surface_set: W_S requested without a grid");
        WSResult ws = assemble_WS(set.quad, V, sym, ws_e_sequence, *grid);
        set.WS = std::move(ws.WS);
        set.ws_cauchy = std::move(ws.cauchy_residuals);
    }
    return set;
}

} // namespace degen
