#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "degen/surface_ops.hpp"

namespace degen {

// Divergence rate of int (T+e)^{-1} near S and the growth scale of the
// regularized remainder; branch per exponent r.
double f_of_e(double e, double r);
double g_of_e(double e, double r);
// Inverse of e -> f(e, r) on e > 0 (f is strictly decreasing).
double f_inverse(double f, double r);

// Thrown by solve_e when the i-th Birman-Schwinger eigenvalue never crosses 1
// on the bracket: there is no i-th bound state resolvable at this coupling.
struct NoBoundState : std::runtime_error {
    explicit NoBoundState(const std::string& what) : std::runtime_error(what) {}
};
// Thrown when a result fails its refinement certificate or a grid cannot
// support the requested shift.
struct ResolutionError : std::runtime_error {
    explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

enum class SignMode { attractive, general };

struct BSContext {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);
    std::shared_ptr<const MomentumGrid> grid;
    double lambda = 0.0;
    SignMode sign_mode = SignMode::attractive;

    void validate() const;
};

// lambda (T+e)^{-1/2} |V| (T+e)^{-1/2} on the momentum grid. The e-independent
// |V| kernel is assembled once; per-e work is diagonal. Positive semidefinite
// for attractive V; the bound-state condition is eigenvalue 1.
class BSOperator {
  public:
    BSOperator(const BSContext& ctx);

    std::size_t size() const { return M_; }
    const BSContext& context() const { return ctx_; }

    Vector apply(double e, const Vector& x) const;
    Matrix dense(double e) const;  // spec-form matrix, small grids only

    // Top `count` eigenvalues (descending) and vectors at shift e.
    Spectrum top_eigs(double e, int count, double tol = 1e-11) const;

  private:
    BSContext ctx_;
    std::size_t M_;
    Matrix C_;  // sqrt(W W') (2pi)^{-n/2} |V|^(p - p')
};

struct SolveRecord {
    double lambda = 0.0;
    int index = 1;
    double e = 0.0;
    double f_e = 0.0;
    double bs_residual = 0.0;  // |mu_i(e) - 1|
    double bracket_lo = 0.0, bracket_hi = 0.0;
    std::string grid_id;
    Vector eigenvector;  // grid eigenvector at the solution
};

// Root-find mu_i(e) = 1 by bisection in log e followed by secant polish.
// The bracket must straddle (mu_i monotone decreasing in e).
SolveRecord solve_e(const BSOperator& op, int index, double e_lo, double e_hi,
                    double mu_tol = 1e-8);

// Default bracket from the first-order prediction e* = f^{-1}(1/(lambda|a_i|)),
// widened a hundredfold both ways.
std::pair<double, double> default_bracket(double lambda, double a_i, double r);

// Probe family for quadratic-form diagnostics: gaussian envelopes times plane
// waves, closed-form momentum profiles.
struct Probe {
    double sigma = 1.0;
    double center = 0.0;  // along the first axis
    double freq = 0.0;    // modulation along the first axis
};
std::vector<Probe> default_probe_family();

// (psi, Mtilde_e psi)/||psi||^2 for one probe: volume integral of
// |phihat|^2/(T+e) minus f(e) times the surface restriction, phi = |V|^{1/2}psi.
double me_quadform(const BSContext& ctx, const SurfaceQuadrature& quad, double e, const Probe& pr);

struct MeProbeReport {
    double max_abs = 0.0;                // certified lower bound on ||M_e||
    std::vector<double> per_probe;
};
MeProbeReport me_norm_probe(const BSContext& ctx, const SurfaceQuadrature& quad, double e,
                            const std::vector<Probe>& probes = default_probe_family());

// Probe-family Cauchy distances between Mtilde at consecutive shifts; r >= 2
// refused (no norm limit).
std::vector<double> m0_limit_residuals(const BSContext& ctx, const SurfaceQuadrature& quad,
                                       const std::vector<double>& e_sequence,
                                       const std::vector<Probe>& probes = default_probe_family());

struct ReducedOperatorResult {
    Matrix R;                 // lambda f(e) (V_S + F_S G F_S*)
    int neumann_terms = 0;
    double g_term_norm = 0.0; // ||F_S G F_S*||_2
};

// Proposition-style reduced operator on L^2(S); Neumann series for
// (1 + lambda M_e)^{-1}, truncated at term norm 1e-10. Requires the
// closed-form |V|^{1/2} transform (gaussian kind).
ReducedOperatorResult reduced_surface_operator(const BSContext& ctx,
                                               const SurfaceQuadrature& quad, double e,
                                               const Matrix& VS);

// Dense momentum-space Hamiltonian T + lambda V; lowest `count` eigenvalues.
// Works for sign-changing V.
Vector direct_spectrum(const BSContext& ctx, int count);

struct ResidualCheckReport {
    double probe_e = 0.0;
    int bs_count = 0;       // BS eigenvalues above 1 at probe_e
    int surface_count = 0;  // negative a_S^i with predicted e_i above probe_e
    bool match = false;
};

// Separation check: at e* with lambda^2 f(e*) = 0.1 the states above 1 are
// exactly those driven by negative surface eigenvalues.
ResidualCheckReport residual_spectrum_check(const BSOperator& op,
                                            const std::vector<double>& negative_as);

} // namespace degen
