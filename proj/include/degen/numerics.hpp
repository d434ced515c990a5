#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace degen {

// Gauss-Legendre nodes/weights on [-1,1], Newton iteration on P_n.
// Accurate to ~1e-15 for n up to a few hundred.
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

GaussRule gauss_legendre(int n);

// Adaptive Gauss-Kronrod 7/15 quadrature on [a,b].
// Subdivides until the embedded error estimate of every panel is below
// tol * (1 + |integral|). Throws on depth exhaustion.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-11, int max_depth = 48);

// Least-squares fit y ~ c0 + c1*x. Returns {c0, c1}.
std::pair<double, double> fit_linear(const std::vector<double>& x, const std::vector<double>& y);

// Least-squares slope of log|y| vs log x (power-law exponent).
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// FNV-1a over raw bytes; used for grid fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 1469598103934665603ull);

} // namespace degen
