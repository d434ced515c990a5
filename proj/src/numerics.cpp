#include "degen/numerics.hpp"

#include <cstring>

namespace degen {

GaussRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Tricomi initial guess for the i-th root of P_n.
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        r.w[n - 1 - i] = r.w[i];
    }
    return r;
}

namespace {

// Kronrod 15 / Gauss 7 nodes and weights (positive half; symmetric).
const double kron_x[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                          0.741531185599394, 0.586087235467691, 0.405845151377397,
                          0.207784955007898, 0.0};
const double kron_w[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                          0.140653259715525, 0.169004726639267, 0.190350578064785,
                          0.204432940075298, 0.209482141084728};
const double gauss_w[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                           0.417959183673469};

struct PanelResult {
    double integral;
    double error;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = f(c);
    double resk = kron_w[7] * fc;
    double resg = gauss_w[3] * fc;
    for (int j = 0; j < 7; ++j) {
        double fv1 = f(c - h * kron_x[j]);
        double fv2 = f(c + h * kron_x[j]);
        resk += kron_w[j] * (fv1 + fv2);
        if (j % 2 == 1) resg += gauss_w[j / 2] * (fv1 + fv2);
    }
    return {resk * h, std::abs(resk - resg) * h};
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol,
             int depth, int max_depth, double scale) {
    PanelResult r = gk15(f, a, b);
    if (r.error <= tol * scale || depth >= max_depth) {
        if (depth >= max_depth && r.error > 100.0 * tol * scale)
            throw std::runtime_error("integrate_adaptive: failed to converge");
        return r.integral;
    }
    double m = 0.5 * (a + b);
    return adapt(f, a, m, tol, depth + 1, max_depth, scale) +
           adapt(f, m, b, tol, depth + 1, max_depth, scale);
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_depth) {
    PanelResult whole = gk15(f, a, b);
    double scale = 1.0 + std::abs(whole.integral);
    return adapt(f, a, b, tol, 0, max_depth, scale);
}

std::pair<double, double> fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_linear: need >= 2 points");
    double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double det = n * sxx - sx * sx;
    double c1 = (n * sxy - sx * sy) / det;
    double c0 = (sy - c1 * sx) / n;
    return {c0, c1};
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(std::abs(y[i]));
    }
    return fit_linear(lx, ly).second;
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace degen
