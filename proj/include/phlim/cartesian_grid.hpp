#pragma once

#include <cmath>
#include <cstddef>
#include <memory>

#include "phlim/errors.hpp"
#include "phlim/kvec.hpp"

namespace phlim {

/// Uniform Cartesian k-space grid with power-of-two sampling per axis,
/// centered on an arbitrary carrier. The conjugate coordinate grid has
/// spacing dr = 2 pi / (n dk) and is centered at the origin.
class CartesianKGrid {
public:
  static std::shared_ptr<const CartesianKGrid> make(int n, double k_half,
                                                    KVec3 k_center = {}) {
    return std::shared_ptr<const CartesianKGrid>(
        new CartesianKGrid(n, k_half, k_center));
  }

  int n() const { return n_; }
  double k_half() const { return k_half_; }
  const KVec3& k_center() const { return k_center_; }
  double dk() const { return dk_; }
  double dr() const { return dr_; }
  double box_length() const { return n_ * dr_; }
  std::size_t size() const {
    return static_cast<std::size_t>(n_) * n_ * n_;
  }

  /// k sample along one axis relative to that axis' center component.
  double k_offset(int i) const { return (i - n_ / 2) * dk_; }
  double kx(int i) const { return k_center_.kx + k_offset(i); }
  double ky(int i) const { return k_center_.ky + k_offset(i); }
  double kz(int i) const { return k_center_.kz + k_offset(i); }
  KVec3 k_node(int ix, int iy, int iz) const {
    return {kx(ix), ky(iy), kz(iz)};
  }

  double r(int j) const { return (j - n_ / 2) * dr_; }

  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * n_ + iy) * n_ + iz;
  }

  /// Nearest r-grid plane index for a coordinate value.
  int nearest_r_index(double r_value) const {
    const int j = static_cast<int>(std::lround(r_value / dr_)) + n_ / 2;
    if (j < 0 || j >= n_)
      throw ArgumentError("CartesianKGrid: coordinate outside the box");
    return j;
  }

private:
  CartesianKGrid(int n, double k_half, KVec3 k_center)
      : n_(n), k_half_(k_half), k_center_(k_center) {
    if (n < 4 || (n & (n - 1)) != 0)
      throw ArgumentError("CartesianKGrid: n must be a power of two >= 4");
    if (!(k_half > 0.0))
      throw ArgumentError("CartesianKGrid: k_half must be > 0");
    dk_ = 2.0 * k_half / n;
    dr_ = 2.0 * M_PI / (n * dk_);
  }

  int n_;
  double k_half_;
  KVec3 k_center_;
  double dk_;
  double dr_;
};

} // namespace phlim
