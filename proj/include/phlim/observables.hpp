#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "phlim/errors.hpp"
#include "phlim/kvec.hpp"
#include "phlim/quadrature.hpp"
#include "phlim/spherical_grid.hpp"
#include "phlim/states.hpp"

namespace phlim {

/// First moments and derived kinematic quantities of a light state, in
/// natural units: energy in hbar c k_ref, momentum in hbar k_ref, mass in
/// hbar k_ref / c.
struct Observables {
  double energy = 0.0;
  Vec3 momentum{};
  double mass = 0.0;
  double beta = 0.0; // v/c = |<p>| c / <H>
  Vec3 direction{};  // unit vector along <p>, zero when momentum vanishes
  bool mass_clamped = false;
};

namespace detail {

inline Observables assemble_observables(double energy, const Vec3& momentum) {
  if (!(energy > 0.0))
    throw ArgumentError("observables: mean energy must be positive");
  Observables obs;
  obs.energy = energy;
  obs.momentum = momentum;
  const double p = momentum.magnitude();
  if (p <= 1e-12 * energy) {
    // rest case: the momentum is numerically zero
    obs.beta = 0.0;
    obs.direction = {0.0, 0.0, 0.0};
    obs.mass = energy;
    return obs;
  }
  obs.direction = momentum.unit();
  const double radicand = energy * energy - p * p;
  if (radicand < 0.0) {
    if (radicand < -1e-10 * energy * energy)
      throw ArgumentError("observables: |<p>| exceeds <H>, inconsistent moments");
    obs.mass = 0.0;
    obs.mass_clamped = true;
  } else {
    obs.mass = std::sqrt(radicand);
  }
  obs.beta = std::min(p / energy, 1.0);
  return obs;
}

} // namespace detail

/// Moments of a discrete-mode state: <H> = sum lambda_i n_i omega_i and
/// <p> = sum lambda_i n_i k_i. Pure superpositions and mixed ensembles give
/// identical first moments, so the ensemble kind does not enter.
inline Observables observables_discrete(const DiscreteModeState& state) {
  state.validate();
  KahanSum<double> e, px, py, pz;
  for (std::size_t i = 0; i < state.terms.size(); ++i) {
    const double f = state.weights[i] * state.terms[i].occupation;
    e.add(f * state.terms[i].k.frequency());
    px.add(f * state.terms[i].k.kx);
    py.add(f * state.terms[i].k.ky);
    pz.add(f * state.terms[i].k.kz);
  }
  return detail::assemble_observables(e.value(),
                                      {px.value(), py.value(), pz.value()});
}

/// Moments of a normalized wave packet by grid quadrature over the
/// polarization-marginalized density. Derived quantities are computed from
/// the per-photon moments, so scaling the photon number rescales energy and
/// momentum exactly and leaves beta and mass/energy untouched.
inline Observables observables_packet(
    const WavePacket& p,
    std::shared_ptr<const SphericalKGrid> grid_override = nullptr) {
  if (std::abs(p.norm() - 1.0) > 1e-10)
    throw ContractError("observables_packet: packet must be normalized");
  const double n = p.photons();
  if (p.is_shell()) {
    const auto g = p.shell_grid();
    const auto& amp = p.shell_amplitude();
    const double s2 = p.scale() * p.scale();
    KahanSum<double> px, py, pz;
    for (int ix = 0; ix < g->n(); ++ix)
      for (int iy = 0; iy < g->n(); ++iy) {
        const double rho = s2 * amp[g->index(ix, iy)] * amp[g->index(ix, iy)] *
                           g->weight(ix, iy);
        px.add(g->axis_node(ix) * rho);
        py.add(g->axis_node(iy) * rho);
        pz.add(g->kz(ix, iy) * rho);
      }
    // every photon on the shell carries |k| = k_shell exactly
    const double e1 = g->k_shell();
    return detail::assemble_observables(
        n * e1, {n * px.value(), n * py.value(), n * pz.value()});
  }

  auto grid = grid_override ? grid_override : p.spherical_grid();
  KahanSum<double> e, px, py, pz;
  for (int s = 0; s < p.polarizations(); ++s) {
    const auto f = p.sample_on(*grid, s);
    grid->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
      const double rho = std::norm(f[idx]) * grid->weight(ir, it, ip);
      const KVec3 k = grid->node(ir, it, ip);
      e.add(k.frequency() * rho);
      px.add(k.kx * rho);
      py.add(k.ky * rho);
      pz.add(k.kz * rho);
    });
  }
  if (detail::outer_shell_fraction(p) > 1e-10)
    throw CoverageError("observables_packet: tail mass outside the grid exceeds 1e-10");
  return detail::assemble_observables(
      n * e.value(), {n * px.value(), n * py.value(), n * pz.value()});
}

/// Mass of the two-mode n-photon Fock state with equal frequencies omega0
/// and opening angle theta: n hbar omega0 sin(theta/2) / c^2.
inline double closed_form_two_mode_mass(int n, double omega0, double theta) {
  if (n < 2 || n % 2 != 0)
    throw DomainError("closed_form_two_mode_mass: n must be even and >= 2");
  if (!(omega0 > 0.0))
    throw DomainError("closed_form_two_mode_mass: omega0 must be > 0");
  if (theta < 0.0 || theta > M_PI)
    throw DomainError("closed_form_two_mode_mass: theta outside [0, pi]");
  return n * omega0 * std::sin(0.5 * theta);
}

/// Mass of an equal-frequency multi-mode mixture:
///   m = 2 n hbar omega0 sqrt(sum_{i>j} lambda_i lambda_j sin^2(theta_ij/2)).
/// angles are the pairwise opening angles, full symmetric matrix.
inline double closed_form_mixed_mass(const std::vector<double>& weights,
                                     const std::vector<std::vector<double>>& angles,
                                     int n, double omega0) {
  if (n < 1) throw DomainError("closed_form_mixed_mass: n must be >= 1");
  if (!(omega0 > 0.0))
    throw DomainError("closed_form_mixed_mass: omega0 must be > 0");
  if (angles.size() != weights.size())
    throw ArgumentError("closed_form_mixed_mass: angles/weights size mismatch");
  KahanSum<double> wsum;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ArgumentError("closed_form_mixed_mass: weights must be >= 0");
    wsum.add(w);
  }
  if (std::abs(wsum.value() - 1.0) > 1e-12)
    throw ArgumentError("closed_form_mixed_mass: weights must sum to 1");
  KahanSum<double> acc;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (angles[i].size() != weights.size())
      throw ArgumentError("closed_form_mixed_mass: angles matrix must be square");
    for (std::size_t j = 0; j < i; ++j) {
      const double s = std::sin(0.5 * angles[i][j]);
      acc.add(weights[i] * weights[j] * s * s);
    }
  }
  return 2.0 * n * omega0 * std::sqrt(acc.value());
}

/// Mean energy of the isotropic Gaussian packet with carrier k0 and width
/// sigma: hbar c [ k0 erf(k0/sigma) (1 + sigma^2/(2 k0^2))
///               + sigma e^{-k0^2/sigma^2} / sqrt(pi) ].
inline double closed_form_gaussian_energy(double k0, double sigma) {
  if (!(k0 > 0.0) || !(sigma > 0.0))
    throw DomainError("closed_form_gaussian_energy: k0 and sigma must be > 0");
  const double r = k0 / sigma;
  return k0 * std::erf(r) * (1.0 + 0.5 / (r * r)) +
         sigma * std::exp(-r * r) / std::sqrt(M_PI);
}

struct GaussianMassResult {
  double mass = 0.0;      // sqrt(E^2 - (hbar c k0)^2)
  double asymptote = 0.0; // hbar sigma / c
  bool asymptote_valid = false; // k0 >> sigma regime (k0 >= 5 sigma)
  bool clamped = false;
};

inline GaussianMassResult closed_form_gaussian_mass(double k0, double sigma) {
  GaussianMassResult out;
  const double e = closed_form_gaussian_energy(k0, sigma);
  const double radicand = e * e - k0 * k0;
  if (radicand < 0.0) {
    out.mass = 0.0;
    out.clamped = true;
  } else {
    out.mass = std::sqrt(radicand);
  }
  out.asymptote = sigma;
  out.asymptote_valid = k0 >= 5.0 * sigma;
  return out;
}

struct VolumeScalingRow {
  double scale = 1.0;       // family parameter a, sigma = sigma0 / a
  double sigma = 0.0;
  double cbrt_volume = 0.0; // V^{1/3} from the measured k-space covariance
  double mass = 0.0;        // quadrature mass
  double product = 0.0;     // mass * V^{1/3}
};

struct VolumeScalingResult {
  std::vector<VolumeScalingRow> rows;
  double spread = 0.0; // (max - min) / mean of the product column
  double tolerance = 0.0;
  bool constant_within_tolerance = true;
};

/// Gaussian family with sigma ~ 1/a at fixed k0/sigma. Reports
/// mass * V^{1/3} across the family, with V taken from the measured
/// momentum-space covariance through the Fourier-limited width relation.
inline VolumeScalingResult volume_scaling_check(const GaussianPacketSpec& base,
                                                const std::vector<double>& scales,
                                                double tolerance = 0.03,
                                                int n_k = 128, int n_theta = 64,
                                                int n_phi = 64) {
  base.validate();
  if (scales.empty()) throw ArgumentError("volume_scaling_check: empty family");
  VolumeScalingResult result;
  result.tolerance = tolerance;
  for (double a : scales) {
    if (!(a > 0.0)) throw ArgumentError("volume_scaling_check: scales must be > 0");
    GaussianPacketSpec spec = base;
    spec.sigma = base.sigma / a;
    spec.k0 = base.k0 * (1.0 / a);
    auto grid = default_gaussian_grid(spec, n_k, n_theta, n_phi);
    const WavePacket p = make_gaussian_packet(spec, grid);
    const Observables obs = observables_packet(p);

    // per-axis k standard deviations of the marginal density
    const auto density = marginal_density(p);
    KahanSum<double> mx, my, mz;
    grid->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
      const KVec3 k = grid->node(ir, it, ip);
      const double w = density[idx] * grid->weight(ir, it, ip);
      mx.add(k.kx * w);
      my.add(k.ky * w);
      mz.add(k.kz * w);
    });
    const Vec3 km{mx.value(), my.value(), mz.value()};
    KahanSum<double> vx, vy, vz;
    grid->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
      const KVec3 k = grid->node(ir, it, ip);
      const double w = density[idx] * grid->weight(ir, it, ip);
      vx.add((k.kx - km.kx) * (k.kx - km.kx) * w);
      vy.add((k.ky - km.ky) * (k.ky - km.ky) * w);
      vz.add((k.kz - km.kz) * (k.kz - km.kz) * w);
    });
    const double sprod = std::sqrt(vx.value()) * std::sqrt(vy.value()) *
                         std::sqrt(vz.value());
    // V = (2 pi)^{3/2} prod_i (1 / (2 s_k,i)) for a transform-limited packet
    const double volume = std::pow(2.0 * M_PI, 1.5) / (8.0 * sprod);
    VolumeScalingRow row;
    row.scale = a;
    row.sigma = spec.sigma;
    row.cbrt_volume = std::cbrt(volume);
    row.mass = obs.mass;
    row.product = row.mass * row.cbrt_volume;
    result.rows.push_back(row);
  }
  if (result.rows.size() > 1) {
    double lo = result.rows.front().product, hi = lo;
    KahanSum<double> sum;
    for (const auto& r : result.rows) {
      lo = std::min(lo, r.product);
      hi = std::max(hi, r.product);
      sum.add(r.product);
    }
    const double mean = sum.value() / result.rows.size();
    result.spread = (hi - lo) / mean;
    result.constant_within_tolerance = result.spread <= tolerance;
  }
  return result;
}

struct BiphotonMassEstimate {
  double mass = 0.0;          // hbar K / (2 c w_p) sqrt(ln(pi L/(2 n_o lambda_p))/pi)
  double schmidt_number = 0.0;
  bool in_regime = false;     // w_p > sqrt(L lambda_p)
};

/// Schmidt-number estimate of the biphoton mass. The proportionality
/// constant in K is taken as one, so this is an order-of-magnitude figure;
/// the quadrature value from make_biphoton is authoritative.
inline BiphotonMassEstimate biphoton_mass_estimate(const BiphotonSpec& spec) {
  spec.validate();
  const double log_arg = M_PI * spec.crystal_length /
                         (2.0 * spec.refractive_index * spec.pump_wavelength);
  if (log_arg <= 1.0)
    throw DomainError("biphoton_mass_estimate: crystal too short for the estimate");
  BiphotonMassEstimate out;
  out.schmidt_number = 2.0 * M_PI * spec.pump_waist *
                       std::sqrt(spec.refractive_index) /
                       std::sqrt(spec.crystal_length * spec.pump_wavelength);
  out.mass = out.schmidt_number / (2.0 * spec.pump_waist) *
             std::sqrt(std::log(log_arg) / M_PI);
  out.in_regime = spec.in_regime();
  return out;
}

} // namespace phlim
