#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "phlim/errors.hpp"

namespace phlim {

/// Compensated (Kahan) accumulator. Deterministic for a fixed summation order.
template <typename T>
class KahanSum {
public:
  void add(const T& value) {
    const T y = value - comp_;
    const T t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  T value() const { return sum_; }

private:
  T sum_{};
  T comp_{};
};

template <>
class KahanSum<std::complex<double>> {
public:
  void add(const std::complex<double>& v) {
    re_.add(v.real());
    im_.add(v.imag());
  }
  std::complex<double> value() const { return {re_.value(), im_.value()}; }

private:
  KahanSum<double> re_;
  KahanSum<double> im_;
};

struct GaussLegendreRule {
  std::vector<double> nodes;   // ascending on [-1, 1]
  std::vector<double> weights; // all positive
};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw ArgumentError("gauss_legendre: order must be >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    double z = std::cos(M_PI * (i - 0.25) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    rule.nodes[i - 1] = -z;
    rule.nodes[n - i] = z;
    rule.weights[i - 1] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - i] = rule.weights[i - 1];
  }
  return rule;
}

/// Rule mapped to [a, b].
inline GaussLegendreRule gauss_legendre(int n, double a, double b) {
  GaussLegendreRule rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

/// Adaptive Simpson refinement for 1D oracle integrals in tests and
/// closed-form cross checks. Not used on the hot path.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-13,
                        int max_depth = 40) {
  struct Impl {
    static double recurse(F& f, double a, double b, double fa, double fm,
                          double fb, double whole, double tol, int depth) {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m);
      const double rm = 0.5 * (m + b);
      const double flm = f(lm);
      const double frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
      }
      return recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
             recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Impl::recurse(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

} // namespace phlim
