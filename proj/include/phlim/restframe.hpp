#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "phlim/errors.hpp"
#include "phlim/kvec.hpp"
#include "phlim/observables.hpp"
#include "phlim/parallel.hpp"
#include "phlim/quadrature.hpp"
#include "phlim/spherical_grid.hpp"
#include "phlim/spherical_harmonics.hpp"
#include "phlim/states.hpp"

namespace phlim {

struct BoostParameters {
  double gamma = 1.0;
  double beta = 0.0;
  Vec3 direction{}; // boost direction, zero for the identity transform
  double rapidity = 0.0;

  Vec3 velocity() const { return direction * beta; }
};

namespace detail {

/// Components of a null wave vector in the frame moving with velocity v.
inline KVec3 boost_wavevector(const KVec3& k, const Vec3& dir, double beta,
                              double gamma) {
  const double omega = k.frequency();
  const double kpar = k.dot(dir);
  return k + dir * ((gamma - 1.0) * kpar - gamma * beta * omega);
}

} // namespace detail

/// Boost a volumetric packet by velocity beta_vec (|beta_vec| < 1). The
/// amplitude follows the measure-preserving scalar law
///   psi'(k') = psi(k(k')) sqrt(omega / omega'),
/// evaluated by pulling rest-frame nodes back through the inverse map, so
/// closed-form sources stay exact and sampled sources interpolate.
inline WavePacket lorentz_boost(const WavePacket& p, const Vec3& beta_vec,
                                std::shared_ptr<const SphericalKGrid> target_grid = nullptr) {
  if (p.is_shell())
    throw CapabilityError("lorentz_boost: shell packets are not boostable");
  const double beta = beta_vec.magnitude();
  if (beta >= 1.0) throw ArgumentError("lorentz_boost: |beta| must be < 1");
  const auto source_grid = p.spherical_grid();
  if (beta == 0.0) return p;
  const Vec3 dir = beta_vec.unit();
  const double gamma = 1.0 / std::sqrt(1.0 - beta * beta);

  if (!target_grid) {
    // support scan: forward-boost nodes that carry non-negligible density
    double max_density = 0.0;
    std::vector<double> density(source_grid->size(), 0.0);
    for (int s = 0; s < p.polarizations(); ++s) {
      const auto f = p.sample_on(*source_grid, s);
      for (std::size_t i = 0; i < f.size(); ++i) density[i] += std::norm(f[i]);
    }
    for (double d : density) max_density = std::max(max_density, d);
    double k_max_target = 0.0;
    source_grid->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
      if (density[idx] < 1e-16 * max_density) return;
      const KVec3 kp = detail::boost_wavevector(source_grid->node(ir, it, ip),
                                                dir, beta, gamma);
      k_max_target = std::max(k_max_target, kp.magnitude());
    });
    if (!(k_max_target > 0.0))
      throw DegenerateStateError("lorentz_boost: empty support");
    // Aberration compresses the angular structure by ~gamma and squeezes the
    // counter-propagating part of the support into a radial sheet of width
    // ~sigma/(2 gamma); both node counts must grow with the boost.
    const int angular = 16 * (static_cast<int>(std::ceil(gamma)) + 1);
    const int n_theta = std::max(source_grid->n_theta(), angular);
    const int n_k =
        std::max(source_grid->n_k(), 40 * static_cast<int>(std::ceil(gamma)));
    int n_phi = source_grid->n_phi();
    if (std::abs(dir.kz) < 1.0 - 1e-12) n_phi = std::max(n_phi, angular);
    target_grid = SphericalKGrid::make(1.2 * k_max_target, n_k, n_theta, n_phi);
  }

  std::vector<AmplitudeFn> fns;
  for (int s = 0; s < p.polarizations(); ++s) {
    WavePacket src = p;
    fns.push_back([src, s, dir, beta, gamma](const KVec3& kprime) {
      // inverse map: boost by -v back to the source frame
      const KVec3 k = detail::boost_wavevector(kprime, dir, -beta, gamma);
      const double omega = k.frequency();
      const double omega_prime = kprime.frequency();
      if (!(omega_prime > 0.0) || !(omega > 0.0)) return std::complex<double>{};
      return src.amplitude(s, k) * std::sqrt(omega / omega_prime);
    });
  }
  return WavePacket::closed_form(std::move(fns), p.photons(), target_grid,
                                 PacketKind::custom);
}

/// Boost into the frame where the mean momentum vanishes. Fails for
/// plane-wave-like states whose mass sits at the floor.
inline std::pair<WavePacket, BoostParameters> boost_to_rest_frame(
    const WavePacket& p,
    std::shared_ptr<const SphericalKGrid> target_grid = nullptr) {
  const Observables lab = observables_packet(p);
  if (lab.mass <= 1e-8)
    throw DegenerateStateError("boost_to_rest_frame: mass at or below the floor");
  BoostParameters bp;
  bp.beta = lab.beta;
  bp.direction = lab.direction;
  bp.gamma = lab.energy / lab.mass;
  bp.rapidity = std::atanh(lab.beta);
  if (lab.beta == 0.0) {
    bp.gamma = 1.0;
    bp.rapidity = 0.0;
    return {p, bp};
  }
  WavePacket rest = lorentz_boost(p, bp.velocity(), std::move(target_grid));
  const Observables check = observables_packet(rest);
  if (std::abs(check.energy - lab.mass) > 1e-6 * lab.mass ||
      check.momentum.magnitude() > 1e-6 * lab.mass)
    throw CoverageError(
        "boost_to_rest_frame: rest-frame contract violated, grid coverage lost");
  return {std::move(rest), bp};
}

/// Radial-resolved spherical-harmonic coefficients of a rest-frame packet.
/// channel(l, j) = l (l + 1) + j.
struct AngularDecomposition {
  std::shared_ptr<const SphericalKGrid> grid;
  int l_max = 0;
  int photons = 1;
  std::vector<std::vector<std::complex<double>>> coeffs; // [channel][radial]
  double parseval = 0.0;  // sum over channels of the radial coefficient mass
  double residual = 0.0;  // packet norm minus parseval
  bool truncation_warning = false;

  static int channel(int l, int j) { return l * (l + 1) + j; }
  int n_channels() const { return (l_max + 1) * (l_max + 1); }

  const std::vector<std::complex<double>>& beta(int l, int j) const {
    detail::check_lj(l, j);
    if (l > l_max) throw ArgumentError("AngularDecomposition: l exceeds l_max");
    return coeffs[channel(l, j)];
  }
};

/// Decompose a rest-frame packet over harmonics up to l_max. The packet must
/// satisfy the rest-frame contract |<p>| <= 1e-6 m c.
inline AngularDecomposition decompose(const WavePacket& p, int l_max) {
  if (p.is_shell())
    throw CapabilityError("decompose: shell packets are not supported");
  if (p.polarizations() != 1)
    throw CapabilityError("decompose: one polarization component expected");
  if (l_max < 0 || l_max > kHarmonicLCap)
    throw CapabilityError("decompose: l_max outside the supported range");
  {
    const auto g = p.spherical_grid();
    // below these counts the quadrature aliases high channels onto low ones
    if (g->n_phi() < 2 * l_max + 1)
      throw ArgumentError("decompose: azimuthal grid cannot resolve l_max");
    if (g->n_theta() < l_max + 1)
      throw ArgumentError("decompose: polar grid cannot resolve l_max");
  }
  const Observables obs = observables_packet(p);
  if (obs.momentum.magnitude() > 1e-6 * obs.mass)
    throw ContractError("decompose: packet is not in its rest frame");

  const auto grid = p.spherical_grid();
  const auto field = p.sample_on(*grid, 0);
  const SphericalHarmonicTable table(grid, l_max);
  const int nk = grid->n_k(), nt = grid->n_theta(), np = grid->n_phi();

  AngularDecomposition d;
  d.grid = grid;
  d.l_max = l_max;
  d.photons = p.photons();
  d.coeffs.assign(d.n_channels(), std::vector<std::complex<double>>(nk));
  // channels are independent; deterministic because each writes its own slot
  parallel_for_chunks(
      static_cast<std::size_t>(d.n_channels()),
      [&](std::size_t, std::size_t cb, std::size_t ce) {
        for (std::size_t ch = cb; ch < ce; ++ch) {
          int l = static_cast<int>(std::sqrt(static_cast<double>(ch)));
          while ((l + 1) * (l + 1) <= static_cast<int>(ch)) ++l;
          while (l * l > static_cast<int>(ch)) --l;
          const int j = static_cast<int>(ch) - l * (l + 1);
          auto& target = d.coeffs[ch];
          for (int ir = 0; ir < nk; ++ir) {
            KahanSum<std::complex<double>> acc;
            for (int it = 0; it < nt; ++it) {
              const double w = grid->angular_weight(it);
              const std::size_t base = grid->index(ir, it, 0);
              for (int ip = 0; ip < np; ++ip)
                acc.add(field[base + ip] * std::conj(table.value(l, j, it, ip)) * w);
            }
            target[ir] = acc.value();
          }
        }
      });
  KahanSum<double> parseval;
  for (const auto& ch : d.coeffs)
    for (int ir = 0; ir < nk; ++ir) {
      const double k = grid->radial_node(ir);
      parseval.add(std::norm(ch[ir]) * k * k * grid->radial_weight(ir));
    }
  d.parseval = parseval.value();
  d.residual = p.norm() - d.parseval;
  d.truncation_warning = d.residual > 1e-3;
  return d;
}

/// Synthesize the packet back from its coefficients:
///   psi(k) = sum_{l,j} beta_{l,j}(k_r) Y_{l,j}(theta, phi).
inline WavePacket reconstruct(const AngularDecomposition& d) {
  if (!d.grid) throw ArgumentError("reconstruct: empty decomposition");
  const auto& grid = *d.grid;
  const SphericalHarmonicTable table(d.grid, d.l_max);
  const int nk = grid.n_k(), nt = grid.n_theta(), np = grid.n_phi();
  std::vector<std::complex<double>> field(grid.size(), {0.0, 0.0});
  // radial shells are independent output slots
  parallel_for_chunks(static_cast<std::size_t>(nk),
                      [&](std::size_t, std::size_t rb, std::size_t re) {
    for (std::size_t ir = rb; ir < re; ++ir)
      for (int l = 0; l <= d.l_max; ++l)
        for (int j = -l; j <= l; ++j) {
          const std::complex<double> b =
              d.coeffs[AngularDecomposition::channel(l, j)][ir];
          if (b == std::complex<double>{}) continue;
          for (int it = 0; it < nt; ++it) {
            const std::size_t base = grid.index(static_cast<int>(ir), it, 0);
            for (int ip = 0; ip < np; ++ip)
              field[base + ip] += b * table.value(l, j, it, ip);
          }
        }
  });
  return WavePacket::sampled(d.grid, {std::move(field)}, d.photons);
}

/// Mode-space scalar product:
///   sum_{l,j} integral conj(beta1_{l,j}) beta2_{l,j} k^2 dk.
/// For states confined to one radial shell this reduces to the plain
/// coefficient sum.
inline std::complex<double> scalar_product_modes(const AngularDecomposition& a,
                                                 const AngularDecomposition& b) {
  if (!a.grid || !b.grid) throw ArgumentError("scalar_product_modes: empty input");
  if (a.l_max != b.l_max || !detail::same_grid(*a.grid, *b.grid))
    throw ArgumentError("scalar_product_modes: decompositions do not match");
  KahanSum<std::complex<double>> acc;
  const auto& grid = *a.grid;
  for (int ch = 0; ch < a.n_channels(); ++ch)
    for (int ir = 0; ir < grid.n_k(); ++ir) {
      const double k = grid.radial_node(ir);
      acc.add(std::conj(a.coeffs[ch][ir]) * b.coeffs[ch][ir] * k * k *
              grid.radial_weight(ir));
    }
  return acc.value();
}

/// Mode-space energy (per the packet's photon number):
///   n sum_{l,j} integral hbar c k |beta_{l,j}(k)|^2 k^2 dk.
inline double energy_in_modes(const AngularDecomposition& d) {
  if (!d.grid) throw ArgumentError("energy_in_modes: empty decomposition");
  KahanSum<double> acc;
  const auto& grid = *d.grid;
  for (const auto& ch : d.coeffs)
    for (int ir = 0; ir < grid.n_k(); ++ir) {
      const double k = grid.radial_node(ir);
      acc.add(k * std::norm(ch[ir]) * k * k * grid.radial_weight(ir));
    }
  return d.photons * acc.value();
}

} // namespace phlim
