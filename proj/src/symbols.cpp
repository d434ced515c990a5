#include "degen/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "degen/numerics.hpp"

namespace degen {

namespace {

void check_common(int n, double r) {
    if (n < 2 || n > 3) throw std::invalid_argument("symbol: dimension must be 2 or 3");
    if (r < 1.0) throw std::invalid_argument("symbol: exponent r must be >= 1");
}

} // namespace

KineticSymbol KineticSymbol::bcs(int n, double mu, double r, std::optional<double> tau) {
    check_common(n, r);
    if (mu <= 0.0) throw std::invalid_argument("bcs symbol: mu must be positive");
    KineticSymbol s;
    s.kind_ = SymbolKind::bcs;
    s.n_ = n;
    s.r_ = r;
    s.mu_ = mu;
    s.rho0_ = std::sqrt(mu);
    s.delta_ = 0.0;
    // Half the |P|-distance from S to the critical point of P at the origin.
    s.tau_ = tau.value_or(std::min(1.0, 0.5 * mu));
    if (s.tau_ <= 0.0 || s.tau_ >= mu)
        throw std::invalid_argument("bcs symbol: tau must lie in (0, mu)");
    s.s_ = 2.0 * r;
    double beta = std::pow(s.tau_ / (mu + s.tau_), r);
    s.c1_ = 0.5 * beta;
    s.c2_ = 0.5 * std::pow(s.tau_, r);
    return s;
}

KineticSymbol KineticSymbol::roton(int n, double p0, double mtilde, double delta, double r,
                                   std::optional<double> tau) {
    check_common(n, r);
    if (p0 <= 0.0 || mtilde <= 0.0) throw std::invalid_argument("roton symbol: p0, mtilde must be positive");
    if (delta < 0.0) throw std::invalid_argument("roton symbol: delta must be >= 0");
    KineticSymbol s;
    s.kind_ = SymbolKind::roton;
    s.n_ = n;
    s.r_ = r;
    s.p0_ = p0;
    s.mtilde_ = mtilde;
    s.rho0_ = p0;
    s.delta_ = delta;
    double sq = std::sqrt(2.0 * mtilde);
    s.tau_ = tau.value_or(std::min(1.0, 0.5 * p0 / sq));
    if (s.tau_ <= 0.0 || s.tau_ * sq >= p0)
        throw std::invalid_argument("roton symbol: tau too large (inner sheet reaches the origin)");
    s.s_ = r;
    double span = s.tau_ * sq;
    s.c1_ = 0.5 * std::pow(span / (p0 + span), r) / std::pow(sq, r);
    s.c2_ = 0.5 * std::pow(s.tau_, r);
    return s;
}

KineticSymbol KineticSymbol::custom_radial(int n, std::function<double(double)> profile,
                                           std::function<double(double)> dprofile, double rho0,
                                           double r, double tau, double tau_max, double s,
                                           double c1, double c2) {
    check_common(n, r);
    if (!(rho0 > 0.0)) throw std::invalid_argument("custom symbol: rho0 must be positive");
    if (!(tau > 0.0) || tau >= tau_max)
        throw std::invalid_argument("custom symbol: tau must lie in (0, tau_max)");
    KineticSymbol k;
    k.kind_ = SymbolKind::custom_radial;
    k.n_ = n;
    k.r_ = r;
    k.rho0_ = rho0;
    k.tau_ = tau;
    k.s_ = s;
    k.c1_ = c1;
    k.c2_ = c2;
    k.custom_p_ = std::move(profile);
    k.custom_dp_ = std::move(dprofile);
    return k;
}

double KineticSymbol::profile(double rho) const {
    switch (kind_) {
        case SymbolKind::bcs: return rho * rho - mu_;
        case SymbolKind::roton: return (rho - p0_) / std::sqrt(2.0 * mtilde_);
        case SymbolKind::custom_radial: return custom_p_(rho);
    }
    return 0.0;
}

double KineticSymbol::dprofile(double rho) const {
    switch (kind_) {
        case SymbolKind::bcs: return 2.0 * rho;
        case SymbolKind::roton: return 1.0 / std::sqrt(2.0 * mtilde_);
        case SymbolKind::custom_radial: return custom_dp_(rho);
    }
    return 0.0;
}

double KineticSymbol::kinetic_radial(double rho) const {
    return std::pow(std::abs(profile(rho)), r_);
}

double KineticSymbol::eval_T_radial(double rho) const { return kinetic_radial(rho) + delta_; }

double KineticSymbol::eval_T(const Point& p) const {
    double rho = std::sqrt(dot(p, p));
    return eval_T_radial(rho);
}

std::optional<double> KineticSymbol::radius_at_level(double t, int sheet) const {
    if (t < 0.0) throw std::invalid_argument("radius_at_level: t must be >= 0");
    switch (kind_) {
        case SymbolKind::bcs: {
            double r2 = mu_ + sheet * t;
            if (r2 <= 0.0) return std::nullopt;
            return std::sqrt(r2);
        }
        case SymbolKind::roton: {
            double rho = p0_ + sheet * t * std::sqrt(2.0 * mtilde_);
            if (rho <= 0.0) return std::nullopt;
            return rho;
        }
        case SymbolKind::custom_radial: {
            // Profile is monotone on each side of rho0; bisect on |P| = t.
            if (t == 0.0) return rho0_;
            double step = 0.05 * rho0_;
            double far = rho0_;
            if (sheet > 0) {
                far = rho0_ + step;
                while (std::abs(custom_p_(far)) < t) {
                    step *= 2.0;
                    far += step;
                    if (far > 1e6 * rho0_) return std::nullopt;
                }
            } else {
                far = rho0_ - step;
                while (far > 0.0 && std::abs(custom_p_(far)) < t) {
                    step *= 2.0;
                    far -= step;
                }
                if (far <= 0.0) {
                    far = 1e-12 * rho0_;
                    if (std::abs(custom_p_(far)) < t) return std::nullopt;
                }
            }
            // near: |P| < t at rho0; far: |P| >= t
            double near = rho0_, faris = far;
            for (int i = 0; i < 200; ++i) {
                double m = 0.5 * (near + faris);
                if (std::abs(custom_p_(m)) < t) near = m;
                else faris = m;
            }
            return 0.5 * (near + faris);
        }
    }
    return std::nullopt;
}

std::string KineticSymbol::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case SymbolKind::bcs: os << "bcs(mu=" << mu_ << ")"; break;
        case SymbolKind::roton:
            os << "roton(p0=" << p0_ << ",mtilde=" << mtilde_ << ",delta=" << delta_ << ")";
            break;
        case SymbolKind::custom_radial: os << "custom(rho0=" << rho0_ << ")"; break;
    }
    os << " n=" << n_ << " r=" << r_ << " tau=" << tau_;
    return os.str();
}

double SurfaceQuadrature::total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

namespace {

// Angular nodes on the unit circle/sphere with weights summing to 2pi / 4pi.
struct AngularSet {
    std::vector<Point> dirs;
    std::vector<double> w;
};

AngularSet angular_nodes(int dim, int resolution) {
    AngularSet a;
    if (dim == 2) {
        a.dirs.reserve(resolution);
        a.w.assign(resolution, 2.0 * M_PI / resolution);
        for (int k = 0; k < resolution; ++k) {
            double th = 2.0 * M_PI * k / resolution;
            a.dirs.push_back({std::cos(th), std::sin(th), 0.0});
        }
    } else {
        GaussRule gl = gauss_legendre(resolution);
        int nphi = 2 * resolution;
        double wphi = 2.0 * M_PI / nphi;
        for (int i = 0; i < resolution; ++i) {
            double ct = gl.x[i], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
            for (int j = 0; j < nphi; ++j) {
                double ph = 2.0 * M_PI * j / nphi;
                a.dirs.push_back({st * std::cos(ph), st * std::sin(ph), ct});
                a.w.push_back(gl.w[i] * wphi);
            }
        }
    }
    return a;
}

void append_sphere(SurfaceQuadrature& q, const KineticSymbol& sym, const AngularSet& ang,
                   double rho) {
    double g = sym.gradnorm(rho);
    double rpow = (sym.dim() == 2) ? rho : rho * rho;
    for (std::size_t k = 0; k < ang.dirs.size(); ++k) {
        q.nodes.push_back({rho * ang.dirs[k][0], rho * ang.dirs[k][1], rho * ang.dirs[k][2]});
        q.weights.push_back(rpow * ang.w[k]);
        q.gradnorms.push_back(g);
    }
}

} // namespace

SurfaceQuadrature build_surface_quadrature(const KineticSymbol& sym, double level,
                                           int resolution) {
    if (level < 0.0 || level >= sym.tau())
        throw std::invalid_argument("build_surface_quadrature: need 0 <= level < tau");
    if (resolution < 4) throw std::invalid_argument("build_surface_quadrature: resolution < 4");
    SurfaceQuadrature q;
    q.dim = sym.dim();
    q.level = level;
    AngularSet ang = angular_nodes(sym.dim(), resolution);
    if (level == 0.0) {
        append_sphere(q, sym, ang, sym.surface_radius());
        return q;
    }
    auto outer = sym.radius_at_level(level, +1);
    auto inner = sym.radius_at_level(level, -1);
    if (outer) append_sphere(q, sym, ang, *outer);
    if (inner) {
        append_sphere(q, sym, ang, *inner);
    } else {
        q.warnings.push_back("inner sheet absent at level t=" + std::to_string(level));
    }
    return q;
}

SurfaceQuadrature load_surface_quadrature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open surface quadrature file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty surface quadrature file");
    int dim = 0;
    if (header == "px,py,weight,gradnorm") dim = 2;
    else if (header == "px,py,pz,weight,gradnorm") dim = 3;
    else throw std::runtime_error("surface quadrature file: unrecognized header '" + header + "'");
    SurfaceQuadrature q;
    q.dim = dim;
    q.level = 0.0;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> vals;
        std::string tok;
        while (std::getline(ls, tok, ',')) vals.push_back(std::stod(tok));
        if (static_cast<int>(vals.size()) != dim + 2)
            throw std::runtime_error("surface quadrature file: bad field count at line " +
                                     std::to_string(lineno));
        Point p{vals[0], vals[1], dim == 3 ? vals[2] : 0.0};
        double w = vals[dim], g = vals[dim + 1];
        if (w <= 0.0 || g <= 0.0)
            throw std::runtime_error("surface quadrature file: weight and gradnorm must be positive (line " +
                                     std::to_string(lineno) + ")");
        q.nodes.push_back(p);
        q.weights.push_back(w);
        q.gradnorms.push_back(g);
    }
    if (q.nodes.empty()) throw std::runtime_error("surface quadrature file has no nodes");
    return q;
}

std::uint64_t MomentumGrid::fingerprint() const {
    std::uint64_t h = fnv1a(nodes.data(), nodes.size() * sizeof(Point));
    h = fnv1a(weights.data(), weights.size() * sizeof(double), h);
    return h;
}

std::string MomentumGrid::id() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "g%016llx", static_cast<unsigned long long>(fingerprint()));
    return buf;
}

int shells_for(const KineticSymbol& sym, double e_min, double grading_ratio) {
    double t_target = std::pow(e_min, 1.0 / sym.exponent()) / 10.0;
    int shells = static_cast<int>(std::ceil(std::log(t_target / sym.tau()) / std::log(grading_ratio)));
    return std::max(shells, 1);
}

std::size_t estimate_grid_nodes(const KineticSymbol& sym, double e_min, const GridSpec& spec) {
    int shells = spec.shells > 0 ? spec.shells : shells_for(sym, e_min, spec.grading_ratio);
    double rho_out_tau = sym.radius_at_level(sym.tau(), +1).value();
    double cutoff = spec.cutoff > 0.0 ? spec.cutoff : rho_out_tau + 8.0;
    std::size_t radial = std::size_t(shells) * spec.points_per_shell * 2 + 4;
    radial += 3 * std::max(2, static_cast<int>(std::ceil((cutoff - rho_out_tau) / spec.outer_panel)));
    auto rho_in = sym.radius_at_level(sym.tau(), -1);
    if (rho_in)
        radial += 3 * std::max(2, static_cast<int>(std::ceil(*rho_in / spec.outer_panel)));
    std::size_t angular = (sym.dim() == 2) ? std::size_t(spec.angular)
                                           : std::size_t(spec.angular) * 2 * spec.angular;
    return radial * angular;
}

MomentumGrid build_momentum_grid(const KineticSymbol& sym, double e_min, const GridSpec& spec) {
    if (e_min <= 0.0) throw std::invalid_argument("build_momentum_grid: e_min must be positive");
    if (spec.grading_ratio <= 0.0 || spec.grading_ratio >= 1.0)
        throw std::invalid_argument("build_momentum_grid: grading ratio must lie in (0,1)");
    if (spec.points_per_shell < 1 || spec.points_per_shell > 6)
        throw std::invalid_argument("build_momentum_grid: points_per_shell must be 1..6");

    const double tau = sym.tau();
    const double t_target = std::pow(e_min, 1.0 / sym.exponent()) / 10.0;
    int shells = spec.shells > 0 ? spec.shells : shells_for(sym, e_min, spec.grading_ratio);
    double t_min = tau * std::pow(spec.grading_ratio, shells);
    if (t_min > t_target)
        throw std::invalid_argument("build_momentum_grid: shells too few to resolve e_min (t_min " +
                                    std::to_string(t_min) + " > " + std::to_string(t_target) + ")");

    double rho_out_tau = sym.radius_at_level(tau, +1).value();
    double cutoff = spec.cutoff > 0.0 ? spec.cutoff : rho_out_tau + 8.0;
    if (cutoff <= rho_out_tau)
        throw std::invalid_argument("build_momentum_grid: cutoff must exceed the outer radius of Omega_tau");

    MomentumGrid grid;
    grid.dim = sym.dim();
    grid.e_min = e_min;
    grid.t_min = t_min;
    grid.cutoff = cutoff;

    AngularSet ang = angular_nodes(sym.dim(), spec.angular);
    GaussRule shell_rule = gauss_legendre(spec.points_per_shell);
    GaussRule core_rule = gauss_legendre(2);
    GaussRule outer_rule = gauss_legendre(3);

    auto add_level_interval = [&](double tlo, double thi, int sheet, const GaussRule& rule,
                                  GridRegion region) {
        double mid = 0.5 * (thi + tlo), half = 0.5 * (thi - tlo);
        for (std::size_t qi = 0; qi < rule.x.size(); ++qi) {
            double t = mid + half * rule.x[qi];
            auto rho = sym.radius_at_level(t, sheet);
            if (!rho) continue;
            double jac = std::pow(*rho, sym.dim() - 1) / sym.gradnorm(*rho);
            double wt = rule.w[qi] * half * jac;
            double kin = sym.kinetic_radial(*rho);
            for (std::size_t k = 0; k < ang.dirs.size(); ++k) {
                grid.nodes.push_back({*rho * ang.dirs[k][0], *rho * ang.dirs[k][1],
                                      *rho * ang.dirs[k][2]});
                grid.weights.push_back(wt * ang.w[k]);
                grid.kinetic.push_back(kin);
                grid.region.push_back(region);
            }
        }
    };

    // graded co-area shells, both sheets
    double thi = tau;
    for (int a = 0; a < shells; ++a) {
        double tlo = tau * std::pow(spec.grading_ratio, a + 1);
        add_level_interval(tlo, thi, +1, shell_rule, GridRegion::shell);
        add_level_interval(tlo, thi, -1, shell_rule, GridRegion::shell);
        thi = tlo;
    }
    // core |P| < t_min across S
    add_level_interval(0.0, t_min, +1, core_rule, GridRegion::core);
    add_level_interval(0.0, t_min, -1, core_rule, GridRegion::core);

    // polar panels outside Omega_tau
    auto add_rho_panels = [&](double rlo, double rhi) {
        if (rhi <= rlo) return;
        int panels = std::max(2, static_cast<int>(std::ceil((rhi - rlo) / spec.outer_panel)));
        for (int pnl = 0; pnl < panels; ++pnl) {
            double a = rlo + (rhi - rlo) * pnl / panels;
            double b = rlo + (rhi - rlo) * (pnl + 1) / panels;
            double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (std::size_t qi = 0; qi < outer_rule.x.size(); ++qi) {
                double rho = mid + half * outer_rule.x[qi];
                double wt = outer_rule.w[qi] * half * std::pow(rho, sym.dim() - 1);
                double kin = sym.kinetic_radial(rho);
                for (std::size_t k = 0; k < ang.dirs.size(); ++k) {
                    grid.nodes.push_back({rho * ang.dirs[k][0], rho * ang.dirs[k][1],
                                          rho * ang.dirs[k][2]});
                    grid.weights.push_back(wt * ang.w[k]);
                    grid.kinetic.push_back(kin);
                    grid.region.push_back(GridRegion::outer);
                }
            }
        }
    };
    add_rho_panels(rho_out_tau, cutoff);
    auto rho_in_tau = sym.radius_at_level(tau, -1);
    if (rho_in_tau) add_rho_panels(0.0, *rho_in_tau);

    return grid;
}

} // namespace degen
