#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "degen/potentials.hpp"
#include "degen/symbols.hpp"

namespace degen {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Eigenpairs in ascending eigenvalue order; vectors are orthonormal in the
// discrete (sqrt-weight) L^2(S) inner product.
struct Spectrum {
    Vector values;
    Matrix vectors;
};

// Nystrom matrix of V_S on the quadrature: K_jk = sqrt(w_j w_k) (2pi)^{-n/2}
// Vhat(p_j - p_k) / sqrt(g_j g_k). Requires level == 0.
Matrix assemble_VS(const SurfaceQuadrature& quad, const Potential& V);

// Lowest `count` eigenpairs of a symmetric matrix.
Spectrum surface_spectrum(const Matrix& K, int count);

// (F_S* u)(x) = (2pi)^{-n/2} sum_k w_k e^{i x.p_k} u_k / sqrt(g_k),
// with u given as continuum values u(p_k).
std::complex<double> apply_FS_adjoint(const SurfaceQuadrature& quad,
                                      const std::vector<std::complex<double>>& u, const Point& x);

// F_S V (T+e)^{-1} V F_S* on the grid: Q = Phi^T Phi with
// Phi_mk = sqrt(W_m/(T_m+e)) (2pi)^{-n/2} sqrt(w_k/g_k) Vhat(p_m - p_k).
// Positive semidefinite; works for sign-changing V (only Vhat enters).
Matrix assemble_Q(const SurfaceQuadrature& quad, const Potential& V, const KineticSymbol& sym,
                  double e, const MomentumGrid& grid);

struct WSResult {
    Matrix WS;                           // Richardson extrapolant over the e ladder
    std::vector<double> e_sequence;
    std::vector<double> cauchy_residuals;  // ||W(e_j) - W(e_{j+1})||_2
    bool residuals_decreasing = true;
};

// W(e) = Q_e - f(e) VS^2, extrapolated e -> 0 with exponent 2 - r.
// Refuses r >= 2 (no norm limit there).
WSResult assemble_WS(const SurfaceQuadrature& quad, const Potential& V, const KineticSymbol& sym,
                     const std::vector<double>& e_sequence, const MomentumGrid& grid);

// e_j = 1e-2 * 4^{-j}, j = 0..3.
std::vector<double> default_ws_e_sequence();

// Direct evaluation of the W(e) quadratic form on one probe vector, coded
// independently of the matrix assembly path (consistency oracle).
double ws_quadform_direct(const SurfaceQuadrature& quad, const Potential& V,
                          const KineticSymbol& sym, double e, const MomentumGrid& grid,
                          const Vector& u);

struct BSurfaceEigs {
    Vector values;            // eigenvalues of VS - lambda WS, ascending
    Matrix vectors;
    std::vector<int> vs_match;  // index of the VS cluster each vector aligns with
};

struct SurfaceOperatorSet {
    SurfaceQuadrature quad;
    Matrix VS;
    Spectrum eigs_VS;
    std::optional<Matrix> WS;
    std::vector<double> ws_cauchy;

    BSurfaceEigs bs_eigenpairs(double lambda) const;
    // Negative eigenvalues a_S^i (ascending, i.e. most negative first).
    std::vector<double> negative_eigenvalues() const;
};

SurfaceOperatorSet make_surface_set(const KineticSymbol& sym, const Potential& V, int resolution,
                                    const std::vector<double>& ws_e_sequence = {},
                                    const MomentumGrid* grid = nullptr);

// Indices grouping eigenvalues into clusters of width tol (degeneracy detection).
std::vector<std::vector<int>> eigenvalue_clusters(const Vector& values, double tol);

} // namespace degen
