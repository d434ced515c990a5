#include "degen/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "degen/numerics.hpp"

namespace degen {

Potential Potential::gaussian(int n, double amplitude, double width) {
    if (n < 2 || n > 3) throw std::invalid_argument("potential: dimension must be 2 or 3");
    if (width <= 0.0) throw std::invalid_argument("gaussian potential: width must be positive");
    if (amplitude < 0.0)
        throw std::invalid_argument("gaussian potential: amplitude must be >= 0 (sign is fixed attractive)");
    Potential v;
    v.kind_ = PotentialKind::gaussian;
    v.n_ = n;
    v.A_ = amplitude;
    v.w_ = width;
    v.sign_definite_ = true;
    v.attractive_ = true;
    return v;
}

Potential Potential::tabulated(int n, std::vector<double> radii, std::vector<double> values,
                               bool sign_definite, bool attractive) {
    if (n < 2 || n > 3) throw std::invalid_argument("potential: dimension must be 2 or 3");
    if (radii.size() < 2 || radii.size() != values.size())
        throw std::invalid_argument("tabulated potential: need >= 2 matching samples");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (radii[i] <= radii[i - 1])
            throw std::invalid_argument("tabulated potential: radii must be strictly increasing");
    if (radii.front() > 1e-12)
        throw std::invalid_argument("tabulated potential: table must start at p_radius = 0");
    Potential v;
    v.kind_ = PotentialKind::tabulated;
    v.n_ = n;
    v.sign_definite_ = sign_definite;
    v.attractive_ = attractive;
    v.tab_r_ = std::move(radii);
    v.tab_v_ = std::move(values);
    return v;
}

Potential Potential::tabulated_csv(int n, const std::string& path, bool sign_definite,
                                   bool attractive) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open potential table: " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty potential table: " + path);
    bool has_im = false;
    if (header == "p_radius,re_vhat") has_im = false;
    else if (header == "p_radius,re_vhat,im_vhat") has_im = true;
    else throw std::runtime_error("potential table: unrecognized header '" + header + "'");
    std::vector<double> rs, vs;
    std::string line;
    std::size_t lineno = 1;
    double vmax = 0.0;
    std::vector<double> ims;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ls, tok, ',')) vals.push_back(std::stod(tok));
        if (vals.size() != std::size_t(has_im ? 3 : 2))
            throw std::runtime_error("potential table: bad field count at line " + std::to_string(lineno));
        rs.push_back(vals[0]);
        vs.push_back(vals[1]);
        vmax = std::max(vmax, std::abs(vals[1]));
        if (has_im) ims.push_back(vals[2]);
    }
    if (has_im) {
        // A real potential with radial transform has Im Vhat = 0; anything
        // else is outside scope (complex-valued V).
        for (double im : ims)
            if (std::abs(im) > 1e-12 * std::max(1.0, vmax))
                throw std::runtime_error("potential table: nonzero im_vhat implies a non-real potential; "
                                         "only real V is supported");
    }
    return tabulated(n, std::move(rs), std::move(vs), sign_definite, attractive);
}

bool Potential::is_zero() const {
    if (kind_ == PotentialKind::gaussian) return A_ == 0.0;
    for (double v : tab_v_)
        if (v != 0.0) return false;
    return true;
}

double Potential::fourier_radial(double k) const {
    k = std::abs(k);
    if (kind_ == PotentialKind::gaussian)
        return -A_ * std::pow(w_, n_) * std::exp(-0.5 * w_ * w_ * k * k);
    if (k > tab_r_.back() + 1e-12)
        throw std::out_of_range("tabulated potential: |p| = " + std::to_string(k) +
                                " beyond table range " + std::to_string(tab_r_.back()));
    k = std::min(k, tab_r_.back());
    auto it = std::upper_bound(tab_r_.begin(), tab_r_.end(), k);
    std::size_t hi = std::min<std::size_t>(tab_r_.size() - 1, std::distance(tab_r_.begin(), it));
    std::size_t lo = hi == 0 ? 0 : hi - 1;
    if (hi == lo) return tab_v_[lo];
    double s = (k - tab_r_[lo]) / (tab_r_[hi] - tab_r_[lo]);
    return (1.0 - s) * tab_v_[lo] + s * tab_v_[hi];
}

std::complex<double> Potential::fourier(const Point& p) const {
    return {fourier_radial(std::sqrt(dot(p, p))), 0.0};
}

double Potential::abs_fourier_radial(double k) const {
    if (!sign_definite_)
        throw std::logic_error("abs_fourier_radial: |V| transform unknown for sign-changing V");
    return attractive_ ? -fourier_radial(k) : fourier_radial(k);
}

double Potential::position_value(const Point& x) const {
    if (kind_ != PotentialKind::gaussian)
        throw std::logic_error("position_value: no closed form for tabulated potentials");
    return -A_ * std::exp(-dot(x, x) / (2.0 * w_ * w_));
}

double Potential::sqrt_abs_position(const Point& x) const {
    if (kind_ != PotentialKind::gaussian)
        throw std::logic_error("sqrt_abs_position: no closed form for tabulated potentials");
    return std::sqrt(A_) * std::exp(-dot(x, x) / (4.0 * w_ * w_));
}

double Potential::sqrt_abs_fourier_radial(double k) const {
    if (kind_ != PotentialKind::gaussian)
        throw std::logic_error("sqrt_abs_fourier_radial: no closed form for tabulated potentials");
    return std::sqrt(A_) * std::pow(2.0 * w_ * w_, 0.5 * n_) * std::exp(-w_ * w_ * k * k);
}

double Potential::table_max_radius() const {
    return kind_ == PotentialKind::tabulated ? tab_r_.back() : std::numeric_limits<double>::infinity();
}

std::string Potential::describe() const {
    std::ostringstream os;
    if (kind_ == PotentialKind::gaussian)
        os << "gaussian(A=" << A_ << ",w=" << w_ << ")";
    else
        os << "tabulated(" << tab_r_.size() << " samples, range " << tab_r_.back() << ")";
    return os.str();
}

namespace {

double sphere_area(int n) { return n == 2 ? 2.0 * M_PI : 4.0 * M_PI; }

// int |V(x)|^q dx by adaptive radial quadrature, gaussian profile.
double lq_norm_gaussian(const Potential& V, double q) {
    if (V.amplitude() == 0.0) return 0.0;
    int n = V.dim();
    double w = V.width();
    auto f = [&](double rho) {
        return std::pow(rho, n - 1) *
               std::pow(V.amplitude() * std::exp(-rho * rho / (2.0 * w * w)), q);
    };
    double upper = w * std::sqrt(2.0 / q) * 12.0 + 1.0;
    double integral = sphere_area(n) * integrate_adaptive(f, 0.0, upper, 1e-12);
    return std::pow(integral, 1.0 / q);
}

} // namespace

HypothesisReport hypothesis_report(const Potential& V, const KineticSymbol& sym) {
    HypothesisReport rep;
    const int n = V.dim();
    const double s = sym.growth_s();
    rep.kappa = sym.is_radial() ? (n == 2 ? 1 : 0) : 2;

    if (!V.has_closed_forms()) {
        rep.l1_norm = std::nan("");
        rep.extra_norm = std::nan("");
        rep.moment_kappa = std::nan("");
        rep.passes = false;
        rep.note = "position-space norms not derivable from a tabulated transform";
        return rep;
    }

    rep.l1_norm = lq_norm_gaussian(V, 1.0);
    if (n > s) {
        rep.extra_norm_name = "n/s";
        rep.extra_norm = lq_norm_gaussian(V, double(n) / s);
    } else if (n == s) {
        rep.extra_norm_name = "1+eps";
        rep.epsilon_used = 0.1;
        rep.extra_norm = lq_norm_gaussian(V, 1.0 + rep.epsilon_used);
    } else {
        rep.extra_norm_name = "L1";
        rep.extra_norm = rep.l1_norm;
    }

    // iint |V(x)| |x-y|^kappa |V(y)| = ||V||_1^2 E|z|^kappa, z ~ N(0, 2w^2 I).
    double w = V.width();
    double l1sq = rep.l1_norm * rep.l1_norm;
    switch (rep.kappa) {
        case 0: rep.moment_kappa = l1sq; break;
        case 1:
            rep.moment_kappa = l1sq * 2.0 * w * std::tgamma(0.5 * (n + 1)) / std::tgamma(0.5 * n);
            break;
        case 2: rep.moment_kappa = l1sq * 2.0 * n * w * w; break;
        default: break;
    }
    rep.passes = std::isfinite(rep.l1_norm) && std::isfinite(rep.extra_norm) &&
                 std::isfinite(rep.moment_kappa);
    return rep;
}

} // namespace degen
