#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "phlim/spherical_grid.hpp"

namespace phlim {
namespace detail {

struct Stencil4 {
  std::array<int, 4> idx{};
  std::array<double, 4> w{};
  int count = 0;
};

/// Cubic Lagrange stencil on a sorted, possibly non-uniform axis. Falls back
/// to the available neighbours near the ends.
inline Stencil4 lagrange_stencil(std::span<const double> axis, double x) {
  Stencil4 s;
  const int n = static_cast<int>(axis.size());
  if (n == 1) {
    s.idx[0] = 0;
    s.w[0] = 1.0;
    s.count = 1;
    return s;
  }
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  int hi = static_cast<int>(it - axis.begin());
  int lo = hi - 1;
  lo = std::clamp(lo, 0, n - 1);
  hi = std::clamp(hi, 0, n - 1);
  int first = std::clamp(lo - 1, 0, n - 4 >= 0 ? n - 4 : 0);
  const int count = std::min(4, n);
  for (int a = 0; a < count; ++a) s.idx[a] = first + a;
  s.count = count;
  for (int a = 0; a < count; ++a) {
    double w = 1.0;
    for (int b = 0; b < count; ++b) {
      if (a == b) continue;
      w *= (x - axis[s.idx[b]]) / (axis[s.idx[a]] - axis[s.idx[b]]);
    }
    s.w[a] = w;
  }
  return s;
}

/// Periodic cubic stencil on a uniform axis of period 2 pi.
inline Stencil4 periodic_stencil(int n, double spacing, double x) {
  Stencil4 s;
  const double period = 2.0 * M_PI;
  double xm = std::fmod(x, period);
  if (xm < 0) xm += period;
  const int cell = static_cast<int>(std::floor(xm / spacing));
  s.count = std::min(4, n);
  for (int a = 0; a < s.count; ++a) {
    const int raw = cell - 1 + a;
    s.idx[a] = ((raw % n) + n) % n;
    const double xa = (cell - 1 + a) * spacing;
    double w = 1.0;
    for (int b = 0; b < s.count; ++b) {
      if (a == b) continue;
      const double xb = (cell - 1 + b) * spacing;
      w *= (xm - xb) / (xa - xb);
    }
    s.w[a] = w;
  }
  return s;
}

} // namespace detail

/// Tricubic Lagrange interpolation of a field sampled on a spherical grid,
/// in (k_r, cos theta, phi) coordinates. Points beyond the radial support
/// evaluate to zero; polar values are clamped to the node range.
inline std::complex<double> interpolate_spherical(
    std::span<const std::complex<double>> field, const SphericalKGrid& grid,
    const KVec3& k) {
  const double kr = k.magnitude();
  if (kr > grid.k_max() || field.size() != grid.size()) {
    if (field.size() != grid.size())
      throw ArgumentError("interpolate_spherical: field size does not match grid");
    return {0.0, 0.0};
  }
  const double mu = kr > 0.0 ? std::clamp(k.kz / kr, -1.0, 1.0) : 1.0;
  const double phi = std::atan2(k.ky, k.kx);

  const auto sr = detail::lagrange_stencil(grid.radial_nodes(), kr);
  const auto st = detail::lagrange_stencil(grid.cos_theta_nodes(), mu);
  const auto sp = detail::periodic_stencil(grid.n_phi(), grid.phi_weight(), phi);

  std::complex<double> acc{0.0, 0.0};
  for (int a = 0; a < sr.count; ++a)
    for (int b = 0; b < st.count; ++b)
      for (int c = 0; c < sp.count; ++c) {
        const double w = sr.w[a] * st.w[b] * sp.w[c];
        acc += w * field[grid.index(sr.idx[a], st.idx[b], sp.idx[c])];
      }
  return acc;
}

} // namespace phlim
