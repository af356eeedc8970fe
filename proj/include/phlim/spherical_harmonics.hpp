#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <memory>
#include <span>
#include <vector>

#include "phlim/errors.hpp"
#include "phlim/quadrature.hpp"
#include "phlim/spherical_grid.hpp"

namespace phlim {

/// Hard cap on the harmonic degree handled by the library.
inline constexpr int kHarmonicLCap = 32;

namespace detail {

/// Fully normalized associated Legendre values Pbar_l^m(x) for fixed m and
/// all l in [m, l_max], by the stable upward recurrence. Normalization:
/// integral of (Pbar_l^m)^2 over the sphere equals 1, all values positive
/// near x -> 1 (no Condon-Shortley sign inside).
inline void normalized_assoc_legendre(int l_max, int m, double x,
                                      std::span<double> out) {
  const double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  double pmm = 1.0 / std::sqrt(4.0 * M_PI); // Pbar_0^0
  for (int mm = 1; mm <= m; ++mm)
    pmm *= somx2 * std::sqrt((2.0 * mm + 1.0) / (2.0 * mm));
  out[0] = pmm;
  if (l_max == m) return;
  double pm1 = x * std::sqrt(2.0 * m + 3.0) * pmm; // Pbar_{m+1}^m
  out[1] = pm1;
  double pm2 = pmm;
  for (int l = m + 2; l <= l_max; ++l) {
    const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
    const double b = std::sqrt(((l - 1.0) * (l - 1.0) - static_cast<double>(m) * m) /
                               (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
    const double pl = a * (x * pm1 - b * pm2);
    out[l - m] = pl;
    pm2 = pm1;
    pm1 = pl;
  }
}

inline void check_lj(int l, int j) {
  if (l < 0) throw DomainError("spherical_harmonic: l must be >= 0");
  if (std::abs(j) > l) throw DomainError("spherical_harmonic: |j| must be <= l");
  if (l > kHarmonicLCap)
    throw CapabilityError("spherical_harmonic: l exceeds the configured cap");
}

} // namespace detail

/// Y_{l,j}(theta, phi). For j >= 0 this is
///   (-1)^j sqrt((2l+1)(l-j)! / (4pi (l+j)!)) P_l^j(cos theta) e^{i j phi},
/// with plain (unsigned) associated Legendre P_l^j. Negative j is completed
/// through Y_{l,-j} = (-1)^j conj(Y_{l,j}), which preserves orthonormality.
inline std::complex<double> spherical_harmonic(int l, int j, double theta,
                                               double phi) {
  detail::check_lj(l, j);
  if (theta < -1e-12 || theta > M_PI + 1e-12)
    throw DomainError("spherical_harmonic: theta outside [0, pi]");
  const int m = std::abs(j);
  std::vector<double> row(l - m + 1);
  detail::normalized_assoc_legendre(l, m, std::cos(theta), row);
  const double pbar = row[l - m];
  const double sign = (j >= 0 && (j % 2 != 0)) ? -1.0 : 1.0;
  const double arg = j * phi;
  return sign * pbar * std::complex<double>(std::cos(arg), std::sin(arg));
}

/// Precomputed harmonics on the angular nodes of a spherical grid, stored in
/// separable (polar x azimuthal) form. channel(l, j) enumerates (l, j) with
/// j = -l..l as l*(l+1)+j.
class SphericalHarmonicTable {
public:
  SphericalHarmonicTable(std::shared_ptr<const SphericalKGrid> grid, int l_max)
      : grid_(std::move(grid)), l_max_(l_max) {
    if (l_max < 0) throw DomainError("SphericalHarmonicTable: l_max must be >= 0");
    if (l_max > kHarmonicLCap)
      throw CapabilityError("SphericalHarmonicTable: l_max exceeds the configured cap");
    const int nt = grid_->n_theta();
    const int np = grid_->n_phi();
    // pbar_[m][(l-m)*nt + it]
    pbar_.resize(l_max + 1);
    std::vector<double> row(l_max + 1);
    for (int m = 0; m <= l_max; ++m) {
      pbar_[m].resize(static_cast<std::size_t>(l_max - m + 1) * nt);
      for (int it = 0; it < nt; ++it) {
        detail::normalized_assoc_legendre(l_max, m, grid_->cos_theta_node(it),
                                          std::span<double>(row.data(), l_max - m + 1));
        for (int l = m; l <= l_max; ++l)
          pbar_[m][static_cast<std::size_t>(l - m) * nt + it] = row[l - m];
      }
    }
    // phase_[m][ip] = e^{i m phi_ip}, m = 0..l_max
    phase_.resize(l_max + 1);
    for (int m = 0; m <= l_max; ++m) {
      phase_[m].resize(np);
      for (int ip = 0; ip < np; ++ip) {
        const double arg = m * grid_->phi_node(ip);
        phase_[m][ip] = {std::cos(arg), std::sin(arg)};
      }
    }
  }

  int l_max() const { return l_max_; }
  const SphericalKGrid& grid() const { return *grid_; }
  std::shared_ptr<const SphericalKGrid> grid_ptr() const { return grid_; }

  static int channel(int l, int j) { return l * (l + 1) + j; }
  int n_channels() const { return (l_max_ + 1) * (l_max_ + 1); }

  /// Y_{l,j} at angular node (it, ip).
  std::complex<double> value(int l, int j, int it, int ip) const {
    const int m = std::abs(j);
    const double p = pbar_[m][static_cast<std::size_t>(l - m) * grid_->n_theta() + it];
    const std::complex<double> ph = phase_[m][ip];
    if (j >= 0) {
      const double sign = (j % 2 != 0) ? -1.0 : 1.0;
      return sign * p * ph;
    }
    return p * std::conj(ph);
  }

private:
  std::shared_ptr<const SphericalKGrid> grid_;
  int l_max_;
  std::vector<std::vector<double>> pbar_;
  std::vector<std::vector<std::complex<double>>> phase_;
};

/// Radial-resolved angular projection: for each radial node k_r,
///   beta_{l,j}(k_r) = integral f(k_r, theta, phi) conj(Y_{l,j}) dOmega.
inline std::vector<std::complex<double>> angular_project(
    std::span<const std::complex<double>> field, const SphericalKGrid& grid,
    int l, int j) {
  detail::check_lj(l, j);
  if (field.size() != grid.size())
    throw ArgumentError("angular_project: field size does not match grid");
  const int nk = grid.n_k(), nt = grid.n_theta(), np = grid.n_phi();
  std::vector<std::complex<double>> beta(nk);
  const int m = std::abs(j);
  // polar part row for all it
  std::vector<double> prow(nt);
  {
    std::vector<double> tmp(l - m + 1);
    for (int it = 0; it < nt; ++it) {
      detail::normalized_assoc_legendre(l, m, grid.cos_theta_node(it), tmp);
      prow[it] = tmp[l - m];
    }
  }
  std::vector<std::complex<double>> conj_phase(np);
  for (int ip = 0; ip < np; ++ip) {
    const double arg = j * grid.phi_node(ip);
    conj_phase[ip] = {std::cos(arg), -std::sin(arg)};
  }
  const double sign = (j >= 0 && (j % 2 != 0)) ? -1.0 : 1.0;
  for (int ir = 0; ir < nk; ++ir) {
    KahanSum<std::complex<double>> acc;
    for (int it = 0; it < nt; ++it) {
      const double w = grid.angular_weight(it) * prow[it];
      const std::size_t base = grid.index(ir, it, 0);
      for (int ip = 0; ip < np; ++ip)
        acc.add(field[base + ip] * (w * conj_phase[ip]));
    }
    beta[ir] = sign * acc.value();
  }
  return beta;
}

inline std::vector<std::complex<double>> angular_project(
    const std::vector<std::complex<double>>& field, const SphericalKGrid& grid,
    int l, int j) {
  return angular_project(std::span<const std::complex<double>>(field), grid, l, j);
}

} // namespace phlim
