#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "degen/symbols.hpp"

namespace degen {

enum class PotentialKind { gaussian, tabulated };

// Potential with an exact radial Fourier transform under the unitary
// convention Vhat(p) = (2pi)^{-n/2} int e^{-ix.p} V(x) dx. Real-valued V
// with radial Vhat forces Vhat real, so all assembled kernels are real
// symmetric.
class Potential {
  public:
    // V(x) = -A exp(-|x|^2/(2w^2)); A > 0 is attractive.
    static Potential gaussian(int n, double amplitude, double width);
    // Radial transform from CSV `p_radius,re_vhat[,im_vhat]`; monotone radii,
    // linear interpolation, hard range. sign_definite is caller-asserted.
    static Potential tabulated_csv(int n, const std::string& path, bool sign_definite,
                                   bool attractive);
    static Potential tabulated(int n, std::vector<double> radii, std::vector<double> values,
                               bool sign_definite, bool attractive);

    PotentialKind kind() const { return kind_; }
    int dim() const { return n_; }
    double amplitude() const { return A_; }
    double width() const { return w_; }
    bool sign_definite() const { return sign_definite_; }
    // True when V <= 0 everywhere (the Birman-Schwinger fast path).
    bool attractive() const { return attractive_; }
    bool is_zero() const;

    // Radial value of Vhat; the only path used by kernel assembly.
    double fourier_radial(double k) const;
    std::complex<double> fourier(const Point& p) const;

    // Fourier transform of |V|; equals -Vhat for attractive V.
    double abs_fourier_radial(double k) const;

    // Closed-form data available for the gaussian kind only.
    bool has_closed_forms() const { return kind_ == PotentialKind::gaussian; }
    double position_value(const Point& x) const;          // V(x)
    double sqrt_abs_position(const Point& x) const;       // |V(x)|^{1/2}
    double sqrt_abs_fourier_radial(double k) const;       // FT of |V|^{1/2}

    double table_max_radius() const;

    std::string describe() const;

  private:
    Potential() = default;
    PotentialKind kind_ = PotentialKind::gaussian;
    int n_ = 3;
    double A_ = 1.0, w_ = 1.0;
    bool sign_definite_ = true;
    bool attractive_ = true;
    std::vector<double> tab_r_, tab_v_;
};

// Integrability diagnostics behind Theorem-style hypotheses: L^1, the
// dimension-dependent extra norm, and the kappa moment. For the tabulated
// kind position-space norms are unavailable; the report fails with a note.
struct HypothesisReport {
    double l1_norm = 0.0;
    double extra_norm = 0.0;
    std::string extra_norm_name;  // "n/s", "1+eps", or "L1"
    double epsilon_used = 0.0;    // nonzero only when n == s
    int kappa = 0;
    double moment_kappa = 0.0;
    bool passes = false;
    std::string note;
};

HypothesisReport hypothesis_report(const Potential& V, const KineticSymbol& sym);

} // namespace degen
