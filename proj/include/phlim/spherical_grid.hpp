#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "phlim/errors.hpp"
#include "phlim/kvec.hpp"
#include "phlim/quadrature.hpp"

namespace phlim {

/// Product quadrature grid over the k-space ball of radius k_max.
/// Radial: Gauss-Legendre on [0, k_max]. Polar: Gauss-Legendre in cos(theta)
/// on [-1, 1]. Azimuthal: uniform nodes with trapezoid weights on [0, 2pi),
/// exact for trigonometric polynomials below the node count.
///
/// Node weights include the k^2 Jacobian, so integrate() realizes
/// the plain volume integral over the ball.
class SphericalKGrid {
public:
  static std::shared_ptr<const SphericalKGrid> make(double k_max, int n_k,
                                                    int n_theta, int n_phi) {
    return std::shared_ptr<const SphericalKGrid>(
        new SphericalKGrid(k_max, n_k, n_theta, n_phi));
  }

  double k_max() const { return k_max_; }
  int n_k() const { return n_k_; }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  std::size_t size() const {
    return static_cast<std::size_t>(n_k_) * n_theta_ * n_phi_;
  }

  double radial_node(int ir) const { return radial_.nodes[ir]; }
  double radial_weight(int ir) const { return radial_.weights[ir]; }
  double cos_theta_node(int it) const { return polar_.nodes[it]; }
  double cos_theta_weight(int it) const { return polar_.weights[it]; }
  double sin_theta(int it) const { return sin_theta_[it]; }
  double phi_node(int ip) const { return phi_nodes_[ip]; }
  double phi_weight() const { return phi_weight_; }

  const std::vector<double>& radial_nodes() const { return radial_.nodes; }
  const std::vector<double>& radial_weights() const { return radial_.weights; }
  const std::vector<double>& cos_theta_nodes() const { return polar_.nodes; }
  const std::vector<double>& cos_theta_weights() const { return polar_.weights; }

  std::size_t index(int ir, int it, int ip) const {
    return (static_cast<std::size_t>(ir) * n_theta_ + it) * n_phi_ + ip;
  }

  KVec3 node(int ir, int it, int ip) const {
    const double k = radial_.nodes[ir];
    const double mu = polar_.nodes[it];
    const double st = sin_theta_[it];
    return {k * st * cos_phi_[ip], k * st * sin_phi_[ip], k * mu};
  }

  /// Full quadrature weight of a node, k^2 Jacobian included.
  double weight(int ir, int it, int /*ip*/) const {
    const double k = radial_.nodes[ir];
    return radial_.weights[ir] * k * k * polar_.weights[it] * phi_weight_;
  }

  /// Angular-only weight (d cos(theta) d phi), for per-shell projections.
  double angular_weight(int it) const { return polar_.weights[it] * phi_weight_; }

  template <typename F>
  void for_each_node(F&& f) const {
    for (int ir = 0; ir < n_k_; ++ir)
      for (int it = 0; it < n_theta_; ++it)
        for (int ip = 0; ip < n_phi_; ++ip) f(ir, it, ip, index(ir, it, ip));
  }

private:
  SphericalKGrid(double k_max, int n_k, int n_theta, int n_phi)
      : k_max_(k_max), n_k_(n_k), n_theta_(n_theta), n_phi_(n_phi) {
    if (!(k_max > 0.0)) throw ArgumentError("SphericalKGrid: k_max must be > 0");
    if (n_k < 2 || n_theta < 2 || n_phi < 2)
      throw ArgumentError("SphericalKGrid: need at least 2 nodes per axis");
    radial_ = gauss_legendre(n_k, 0.0, k_max);
    polar_ = gauss_legendre(n_theta, -1.0, 1.0);
    phi_weight_ = 2.0 * M_PI / n_phi;
    phi_nodes_.resize(n_phi);
    cos_phi_.resize(n_phi);
    sin_phi_.resize(n_phi);
    for (int ip = 0; ip < n_phi; ++ip) {
      phi_nodes_[ip] = phi_weight_ * ip;
      cos_phi_[ip] = std::cos(phi_nodes_[ip]);
      sin_phi_[ip] = std::sin(phi_nodes_[ip]);
    }
    sin_theta_.resize(n_theta);
    for (int it = 0; it < n_theta; ++it)
      sin_theta_[it] = std::sqrt(std::max(0.0, 1.0 - polar_.nodes[it] * polar_.nodes[it]));
  }

  double k_max_;
  int n_k_, n_theta_, n_phi_;
  GaussLegendreRule radial_;
  GaussLegendreRule polar_;
  double phi_weight_;
  std::vector<double> phi_nodes_, cos_phi_, sin_phi_, sin_theta_;
};

/// Integral of a sampled complex field over the ball. Fixed summation order
/// with compensation, so the result is bit-reproducible.
inline std::complex<double> integrate_spherical(
    std::span<const std::complex<double>> field, const SphericalKGrid& grid) {
  if (field.size() != grid.size())
    throw ArgumentError("integrate_spherical: field size does not match grid");
  KahanSum<std::complex<double>> acc;
  grid.for_each_node([&](int ir, int it, int ip, std::size_t idx) {
    acc.add(field[idx] * grid.weight(ir, it, ip));
  });
  return acc.value();
}

inline std::complex<double> integrate_spherical(
    const std::vector<std::complex<double>>& field, const SphericalKGrid& grid) {
  return integrate_spherical(std::span<const std::complex<double>>(field), grid);
}

/// Quadrature grid over a fixed-frequency shell patch, parameterized by the
/// transverse wave vector. Supports states whose photons all carry the same
/// |k| = k_shell with k_z = sqrt(k_shell^2 - k_perp^2) (paraxial sign +).
class TransverseShellGrid {
public:
  static std::shared_ptr<const TransverseShellGrid> make(double k_shell,
                                                         double bound, int n) {
    return std::shared_ptr<const TransverseShellGrid>(
        new TransverseShellGrid(k_shell, bound, n));
  }

  double k_shell() const { return k_shell_; }
  double bound() const { return bound_; }
  int n() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }

  double axis_node(int i) const { return rule_.nodes[i]; }
  double axis_weight(int i) const { return rule_.weights[i]; }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(ix) * n_ + iy;
  }
  double weight(int ix, int iy) const {
    return rule_.weights[ix] * rule_.weights[iy];
  }
  double kz(int ix, int iy) const {
    const double kp2 = rule_.nodes[ix] * rule_.nodes[ix] +
                       rule_.nodes[iy] * rule_.nodes[iy];
    return std::sqrt(k_shell_ * k_shell_ - kp2);
  }
  KVec3 node(int ix, int iy) const {
    return {rule_.nodes[ix], rule_.nodes[iy], kz(ix, iy)};
  }

private:
  TransverseShellGrid(double k_shell, double bound, int n)
      : k_shell_(k_shell), bound_(bound), n_(n) {
    if (!(k_shell > 0.0) || !(bound > 0.0))
      throw ArgumentError("TransverseShellGrid: k_shell and bound must be > 0");
    if (n < 2) throw ArgumentError("TransverseShellGrid: need n >= 2");
    // bound^2 * 2 must stay below k_shell^2 for a real k_z on the corner
    if (2.0 * bound * bound >= k_shell * k_shell)
      throw CoverageError("TransverseShellGrid: transverse bound exceeds shell radius");
    rule_ = gauss_legendre(n, -bound, bound);
  }

  double k_shell_;
  double bound_;
  int n_;
  GaussLegendreRule rule_;
};

} // namespace phlim
