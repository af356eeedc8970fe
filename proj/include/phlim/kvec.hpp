#pragma once

#include <cmath>
#include <limits>

#include "phlim/errors.hpp"

namespace phlim {

/// Wave vector in natural units (components in units of k_ref, hbar = c = 1).
/// Also used as a plain 3-vector for momenta and positions.
struct KVec3 {
  double kx = 0.0;
  double ky = 0.0;
  double kz = 0.0;

  constexpr KVec3() = default;
  constexpr KVec3(double x, double y, double z) : kx(x), ky(y), kz(z) {}

  double magnitude() const { return std::sqrt(kx * kx + ky * ky + kz * kz); }

  /// Vacuum dispersion: omega_k = c |k| with c = 1.
  double frequency() const { return magnitude(); }

  double dot(const KVec3& o) const { return kx * o.kx + ky * o.ky + kz * o.kz; }

  bool finite() const {
    return std::isfinite(kx) && std::isfinite(ky) && std::isfinite(kz);
  }

  KVec3 operator+(const KVec3& o) const { return {kx + o.kx, ky + o.ky, kz + o.kz}; }
  KVec3 operator-(const KVec3& o) const { return {kx - o.kx, ky - o.ky, kz - o.kz}; }
  KVec3 operator*(double s) const { return {kx * s, ky * s, kz * s}; }
  KVec3 operator-() const { return {-kx, -ky, -kz}; }

  KVec3 unit() const {
    const double m = magnitude();
    if (m <= 0.0) return {0.0, 0.0, 0.0};
    return {kx / m, ky / m, kz / m};
  }
};

inline KVec3 operator*(double s, const KVec3& v) { return v * s; }

using Vec3 = KVec3;

} // namespace phlim
