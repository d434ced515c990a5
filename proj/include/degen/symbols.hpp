#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace degen {

// A point in momentum space; z is ignored when dim == 2.
using Point = std::array<double, 3>;

inline double dot(const Point& a, const Point& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double dist(const Point& a, const Point& b) {
    double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

enum class SymbolKind { bcs, roton, custom_radial };

// Kinetic symbol T(p) = |P(p)|^r + delta with radial profile P, degenerating
// on the sphere/circle S = {|p| = rho0}. The offset delta is subtracted
// before all spectral work; only eval_T reports it.
class KineticSymbol {
  public:
    static KineticSymbol bcs(int n, double mu, double r, std::optional<double> tau = {});
    static KineticSymbol roton(int n, double p0, double mtilde, double delta, double r = 2.0,
                               std::optional<double> tau = {});
    // Radial profile monotone on each side of its zero rho0; caller supplies
    // growth data (s, c1, c2) and the largest admissible level-set half width.
    static KineticSymbol custom_radial(int n, std::function<double(double)> profile,
                                       std::function<double(double)> dprofile, double rho0,
                                       double r, double tau, double tau_max, double s, double c1,
                                       double c2);

    SymbolKind kind() const { return kind_; }
    int dim() const { return n_; }
    double exponent() const { return r_; }
    double offset() const { return delta_; }
    double tau() const { return tau_; }
    double growth_s() const { return s_; }
    double growth_c1() const { return c1_; }
    double growth_c2() const { return c2_; }
    double mu() const { return mu_; }
    double p0() const { return p0_; }
    double mtilde() const { return mtilde_; }
    double surface_radius() const { return rho0_; }
    bool is_radial() const { return true; }

    double profile(double rho) const;   // P(rho)
    double dprofile(double rho) const;  // P'(rho)
    double gradnorm(double rho) const { return std::abs(dprofile(rho)); }

    // T(p) with the offset included.
    double eval_T(const Point& p) const;
    double eval_T_radial(double rho) const;
    // T(p) - delta = |P|^r; all grids and Birman-Schwinger work use this.
    double kinetic_radial(double rho) const;

    // Radius solving |P(rho)| = t on the outer (sheet=+1) or inner (sheet=-1)
    // side of S. Empty when the sheet does not reach level t (e.g. t > mu for
    // bcs inner sheet).
    std::optional<double> radius_at_level(double t, int sheet) const;

    std::string describe() const;

  private:
    KineticSymbol() = default;
    SymbolKind kind_ = SymbolKind::bcs;
    int n_ = 3;
    double r_ = 1.0;
    double delta_ = 0.0;
    double tau_ = 0.5;
    double s_ = 2.0, c1_ = 0.1, c2_ = 0.1;
    double mu_ = 1.0, p0_ = 1.0, mtilde_ = 0.5;
    double rho0_ = 1.0;
    std::function<double(double)> custom_p_, custom_dp_;
};

// Quadrature on S (level == 0) or on the level set S_t (both sheets).
// Discrete carrier of L^2(S): vectors are indexed by nodes, the
// sqrt(w)-weighted convention makes assembled operators symmetric.
struct SurfaceQuadrature {
    int dim = 0;
    double level = 0.0;
    std::vector<Point> nodes;
    std::vector<double> weights;    // surface measure
    std::vector<double> gradnorms;  // |grad P| at the node
    std::vector<std::string> warnings;

    std::size_t size() const { return nodes.size(); }
    double total_weight() const;
};

SurfaceQuadrature build_surface_quadrature(const KineticSymbol& sym, double level, int resolution);

// Custom surface file: header px,py[,pz],weight,gradnorm.
SurfaceQuadrature load_surface_quadrature_csv(const std::string& path);

enum class GridRegion : std::uint8_t { core, shell, outer };

// Momentum-space volume quadrature adapted to the resolvent 1/(T+e):
// geometric level ladder in t = |P| toward t = 0 (co-area form, exact radial
// Jacobian), plus a polar grid on {|P| > tau} up to the cutoff.
struct MomentumGrid {
    int dim = 0;
    double e_min = 0.0;  // smallest resolvent shift the grid resolves
    double t_min = 0.0;
    double cutoff = 0.0;
    std::vector<Point> nodes;
    std::vector<double> weights;  // volume measure
    std::vector<double> kinetic;  // T(p) - delta at the node
    std::vector<GridRegion> region;

    std::size_t size() const { return nodes.size(); }
    std::uint64_t fingerprint() const;
    std::string id() const;
};

struct GridSpec {
    double cutoff = 0.0;          // 0: auto = rho_outer(tau) + 8
    int shells = 0;               // 0: auto from e_min and ratio
    int angular = 32;             // n=2: angle count; n=3: Gauss-Legendre order in cos(theta)
    double grading_ratio = 0.75;  // geometric ratio of the level ladder
    int points_per_shell = 3;     // Gauss points per level interval
    double outer_panel = 0.35;    // radial panel width outside Omega_tau
};

// Levels run from tau down to t_min = tau * ratio^shells; rejects parameter
// sets whose t_min stays above e_min^{1/r}/10.
MomentumGrid build_momentum_grid(const KineticSymbol& sym, double e_min, const GridSpec& spec);

int shells_for(const KineticSymbol& sym, double e_min, double grading_ratio);

// Node count the builder would produce; used to detect shifts beyond
// practical grid capability before paying for the kernel.
std::size_t estimate_grid_nodes(const KineticSymbol& sym, double e_min, const GridSpec& spec);

} // namespace degen
