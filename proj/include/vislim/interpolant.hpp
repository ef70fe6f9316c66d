#pragma once

// Off-grid evaluation of a field through its trigonometric interpolant.
// Only the modes that are actually present are summed, so single-mode
// synthetic fields cost almost nothing. The Nyquist row and column are
// dropped so that the interpolant is real and its derivatives match the
// spectral derivative operators.

#include <array>
#include <cmath>
#include <vector>

#include "vislim/spectral.hpp"

namespace vislim {

class TrigInterpolant {
 public:
  /// Coefficients below rel_cutoff * max |c_k| are treated as zero.
  explicit TrigInterpolant(const Spectrum& s, double rel_cutoff = 1e-14) {
    const Grid& g = s.grid();
    double cmax = 0.0;
    for (complex c : s.coeffs()) cmax = std::max(cmax, std::abs(c));
    const double floor = rel_cutoff * cmax;
    for (int i = 0; i < g.n(); ++i) {
      if (i == g.n() / 2) continue;
      const int k1 = g.wavenumber(i);
      for (int j = 0; j < g.n() / 2; ++j) {
        // The row j = 0 holds both k1 and -k1; keep k1 >= 0 only.
        if (j == 0 && k1 < 0) continue;
        const complex c = s(i, j);
        if (c == 0.0 || std::abs(c) <= floor) continue;
        // Each kept mode stands for itself and its conjugate partner.
        const bool paired = j > 0 || k1 > 0;
        modes_.push_back({k1, j, paired ? 2.0 * c : c});
        max_k1_ = std::max(max_k1_, std::abs(k1));
        max_k2_ = std::max(max_k2_, j);
      }
    }
  }

  explicit TrigInterpolant(const Field2D& f, double rel_cutoff = 1e-14) : TrigInterpolant(forward(f), rel_cutoff) {}

  std::size_t mode_count() const { return modes_.size(); }

  double value(double x1, double x2) const {
    double s = 0.0;
    each_mode(x1, x2, [&](const Mode&, complex w) { s += w.real(); });
    return s;
  }

  std::array<double, 2> gradient(double x1, double x2) const {
    std::array<double, 2> g{0.0, 0.0};
    // d/dx Re(w) = Re(i k w) = -k Im(w)
    each_mode(x1, x2, [&](const Mode& m, complex w) {
      g[0] -= m.k1 * w.imag();
      g[1] -= m.k2 * w.imag();
    });
    return g;
  }

  /// (f_11, f_12, f_22)
  std::array<double, 3> hessian(double x1, double x2) const {
    std::array<double, 3> h{0.0, 0.0, 0.0};
    each_mode(x1, x2, [&](const Mode& m, complex w) {
      h[0] -= m.k1 * m.k1 * w.real();
      h[1] -= m.k1 * m.k2 * w.real();
      h[2] -= m.k2 * m.k2 * w.real();
    });
    return h;
  }

 private:
  struct Mode {
    int k1;
    int k2;
    complex c;
  };

  /// Calls f(mode, c_k e^{i k.x}) for every stored mode.
  template <class F>
  void each_mode(double x1, double x2, F&& f) const {
    thread_local std::vector<complex> p1;
    thread_local std::vector<complex> p2;
    p1.assign(2 * max_k1_ + 1, complex{1.0, 0.0});
    p2.assign(max_k2_ + 1, complex{1.0, 0.0});
    // Direct evaluation keeps the phases accurate for large k.
    for (int k = 1; k <= max_k1_; ++k) {
      const complex z = std::polar(1.0, k * x1);
      p1[max_k1_ + k] = z;
      p1[max_k1_ - k] = std::conj(z);
    }
    for (int k = 1; k <= max_k2_; ++k) p2[k] = std::polar(1.0, k * x2);
    for (const Mode& m : modes_) f(m, m.c * p1[m.k1 + max_k1_] * p2[m.k2]);
  }

  std::vector<Mode> modes_;
  int max_k1_ = 0;
  int max_k2_ = 0;
};

/// max |f| of the trigonometric interpolant: grid maxima refined by Newton's
/// method on the gradient. Grid sampling alone misses the peak by O(h^2).
inline double sup_norm_interpolated(const Field2D& f) {
  const int n = f.n();
  const double gmax = lp_norm(f, std::numeric_limits<double>::infinity());
  if (gmax == 0.0) return 0.0;
  const TrigInterpolant interp(f);
  const double h = f.grid().spacing();
  double best = gmax;
  int refined = 0;
  for (int i = 0; i < n && refined < 16; ++i) {
    for (int j = 0; j < n && refined < 16; ++j) {
      const double a = std::abs(f(i, j));
      if (a < 0.9 * gmax) continue;
      bool local_max = true;
      for (int di = -1; di <= 1 && local_max; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if ((di || dj) && std::abs(f((i + di + n) % n, (j + dj + n) % n)) > a) {
            local_max = false;
            break;
          }
        }
      }
      if (!local_max) continue;
      ++refined;
      double x1 = i * h;
      double x2 = j * h;
      for (int it = 0; it < 20; ++it) {
        const auto g = interp.gradient(x1, x2);
        const auto H = interp.hessian(x1, x2);
        const double det = H[0] * H[2] - H[1] * H[1];
        if (det == 0.0) break;
        const double d1 = (H[2] * g[0] - H[1] * g[1]) / det;
        const double d2 = (H[0] * g[1] - H[1] * g[0]) / det;
        // Stay inside the cell neighbourhood; a wild step means no interior peak.
        if (std::abs(x1 - d1 - i * h) > h || std::abs(x2 - d2 - j * h) > h) break;
        x1 -= d1;
        x2 -= d2;
        if (std::hypot(d1, d2) < 1e-14) break;
      }
      best = std::max(best, std::abs(interp.value(x1, x2)));
    }
  }
  return best;
}

}  // namespace vislim
