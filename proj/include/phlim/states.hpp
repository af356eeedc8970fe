#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "phlim/errors.hpp"
#include "phlim/interp.hpp"
#include "phlim/kvec.hpp"
#include "phlim/quadrature.hpp"
#include "phlim/spherical_grid.hpp"

namespace phlim {

enum class EnsembleKind { pure_superposition, mixed_ensemble };
enum class PacketKind { gaussian, biphoton_marginal, custom };

/// One plane-wave Fock term: occupation photons in mode (k, polarization).
struct DiscreteMode {
  KVec3 k;
  int polarization = 0; // s in {0, 1}
  int occupation = 1;   // photons in this mode
};

/// Finite mixture or coherent superposition of plane-wave Fock terms.
/// Phases are kept for documentation of pure states; first moments do not
/// depend on them, and mixed ensembles ignore them entirely.
struct DiscreteModeState {
  std::vector<DiscreteMode> terms;
  std::vector<double> weights; // probabilities, sum to 1
  std::vector<double> phases;  // radians, may be empty
  EnsembleKind kind = EnsembleKind::mixed_ensemble;

  void validate() const {
    if (terms.empty()) throw ArgumentError("DiscreteModeState: no terms");
    if (weights.size() != terms.size())
      throw ArgumentError("DiscreteModeState: weights/terms size mismatch");
    if (!phases.empty() && phases.size() != terms.size())
      throw ArgumentError("DiscreteModeState: phases/terms size mismatch");
    KahanSum<double> sum;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] >= 0.0))
        throw ArgumentError("DiscreteModeState: weights must be >= 0");
      if (terms[i].occupation < 1)
        throw ArgumentError("DiscreteModeState: occupation must be >= 1");
      if (terms[i].polarization != 0 && terms[i].polarization != 1)
        throw ArgumentError("DiscreteModeState: polarization must be 0 or 1");
      if (!terms[i].k.finite())
        throw ArgumentError("DiscreteModeState: non-finite wave vector");
      sum.add(weights[i]);
    }
    if (std::abs(sum.value() - 1.0) > 1e-12)
      throw ArgumentError("DiscreteModeState: weights must sum to 1");
  }
};

/// Isotropic Gaussian packet around a carrier, optionally displaced in
/// coordinate space through a momentum-space phase.
struct GaussianPacketSpec {
  KVec3 k0;
  double sigma = 1.0;
  Vec3 r0{};
  int photons = 1;

  void validate() const {
    if (!(sigma > 0.0)) throw ArgumentError("GaussianPacketSpec: sigma must be > 0");
    if (!k0.finite() || !r0.finite())
      throw ArgumentError("GaussianPacketSpec: non-finite parameters");
    if (photons < 1) throw ArgumentError("GaussianPacketSpec: photons must be >= 1");
  }
};

/// Frequency-degenerate Type-I SPDC pair source. Lengths in natural units
/// (1/k_ref). transverse_bound = 0 selects the sinc scale
/// sqrt(8 pi n_o / (L lambda_p)) as the per-photon transverse cutoff.
struct BiphotonSpec {
  double pump_waist = 0.0;       // w_p
  double crystal_length = 0.0;   // L
  double pump_wavelength = 0.0;  // lambda_p
  double refractive_index = 0.0; // n_o (ordinary wave)
  double transverse_bound = 0.0; // per-photon |k_perp| cutoff, 0 = default
  int transverse_samples = 96;   // outer marginal grid, per axis
  int inner_samples = 64;        // pair-sum quadrature, per axis

  void validate() const {
    if (!(pump_waist > 0.0 && crystal_length > 0.0 && pump_wavelength > 0.0 &&
          refractive_index > 0.0))
      throw ArgumentError("BiphotonSpec: all physical parameters must be > 0");
    if (transverse_samples < 8 || inner_samples < 8)
      throw ArgumentError("BiphotonSpec: sample counts too small");
  }

  /// Width of the collinear phase-matching sinc in the pair-sum variable.
  double sinc_scale() const {
    return std::sqrt(8.0 * M_PI * refractive_index /
                     (crystal_length * pump_wavelength));
  }
  /// |k| of each photon at frequency degeneracy (lambda = 2 lambda_p).
  double degenerate_wavenumber() const { return M_PI / pump_wavelength; }
  double bound() const {
    return transverse_bound > 0.0 ? transverse_bound : sinc_scale();
  }
  /// Schmidt-regime flag: pump waist dominates the phase-matching scale.
  bool in_regime() const {
    return pump_waist > std::sqrt(crystal_length * pump_wavelength);
  }
};

using AmplitudeFn = std::function<std::complex<double>(const KVec3&)>;

/// Continuous multiphoton wave packet. The amplitude is held either as
/// closed-form callables per polarization, as samples on a spherical grid,
/// or as a real single-polarization profile on a fixed-frequency shell
/// (the biphoton marginal).
class WavePacket {
public:
  struct ClosedFormRep {
    std::vector<AmplitudeFn> amps; // per polarization, size 1 or 2
    std::shared_ptr<const SphericalKGrid> grid;
  };
  struct SampledRep {
    std::shared_ptr<const SphericalKGrid> grid;
    std::vector<std::vector<std::complex<double>>> values; // per polarization
  };
  struct ShellRep {
    std::shared_ptr<const TransverseShellGrid> grid;
    std::vector<double> amp; // real amplitude, sqrt of marginal density
  };

  WavePacket() = default;

  static WavePacket closed_form(std::vector<AmplitudeFn> amps, int photons,
                                std::shared_ptr<const SphericalKGrid> grid,
                                PacketKind kind = PacketKind::custom) {
    if (amps.empty() || amps.size() > 2)
      throw ArgumentError("WavePacket: need 1 or 2 polarization amplitudes");
    if (!grid) throw ArgumentError("WavePacket: reference grid required");
    if (photons < 1) throw ArgumentError("WavePacket: photons must be >= 1");
    WavePacket p;
    p.rep_ = ClosedFormRep{std::move(amps), std::move(grid)};
    p.kind_ = kind;
    p.photons_ = photons;
    p.refresh_norm();
    return p;
  }

  static WavePacket sampled(std::shared_ptr<const SphericalKGrid> grid,
                            std::vector<std::vector<std::complex<double>>> values,
                            int photons, PacketKind kind = PacketKind::custom) {
    if (!grid) throw ArgumentError("WavePacket: grid required");
    if (values.empty() || values.size() > 2)
      throw ArgumentError("WavePacket: need 1 or 2 polarization sample sets");
    for (const auto& v : values) {
      if (v.size() != grid->size())
        throw ArgumentError("WavePacket: sample size does not match grid");
      for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
          throw ArgumentError("WavePacket: non-finite amplitude sample");
    }
    if (photons < 1) throw ArgumentError("WavePacket: photons must be >= 1");
    WavePacket p;
    p.rep_ = SampledRep{std::move(grid), std::move(values)};
    p.kind_ = kind;
    p.photons_ = photons;
    p.refresh_norm();
    return p;
  }

  static WavePacket shell(std::shared_ptr<const TransverseShellGrid> grid,
                          std::vector<double> amp, int photons,
                          PacketKind kind = PacketKind::biphoton_marginal) {
    if (!grid) throw ArgumentError("WavePacket: grid required");
    if (amp.size() != grid->size())
      throw ArgumentError("WavePacket: shell sample size does not match grid");
    WavePacket p;
    p.rep_ = ShellRep{std::move(grid), std::move(amp)};
    p.kind_ = kind;
    p.photons_ = photons;
    p.refresh_norm();
    return p;
  }

  PacketKind kind() const { return kind_; }
  int photons() const { return photons_; }
  double norm() const { return norm_; }
  double scale() const { return scale_; }
  bool is_shell() const { return std::holds_alternative<ShellRep>(rep_); }
  bool is_closed_form() const { return std::holds_alternative<ClosedFormRep>(rep_); }
  bool is_sampled() const { return std::holds_alternative<SampledRep>(rep_); }

  int polarizations() const {
    if (const auto* c = std::get_if<ClosedFormRep>(&rep_))
      return static_cast<int>(c->amps.size());
    if (const auto* s = std::get_if<SampledRep>(&rep_))
      return static_cast<int>(s->values.size());
    return 1;
  }

  std::shared_ptr<const SphericalKGrid> spherical_grid() const {
    if (const auto* c = std::get_if<ClosedFormRep>(&rep_)) return c->grid;
    if (const auto* s = std::get_if<SampledRep>(&rep_)) return s->grid;
    return nullptr;
  }
  std::shared_ptr<const TransverseShellGrid> shell_grid() const {
    if (const auto* s = std::get_if<ShellRep>(&rep_)) return s->grid;
    return nullptr;
  }
  const std::vector<double>& shell_amplitude() const {
    return std::get<ShellRep>(rep_).amp;
  }

  /// Amplitude of polarization s at an arbitrary wave vector. Sampled
  /// representations interpolate; shell packets do not support this.
  std::complex<double> amplitude(int s, const KVec3& k) const {
    if (const auto* c = std::get_if<ClosedFormRep>(&rep_)) {
      if (s < 0 || s >= static_cast<int>(c->amps.size()))
        throw ArgumentError("WavePacket: polarization index out of range");
      return scale_ * c->amps[s](k);
    }
    if (const auto* sr = std::get_if<SampledRep>(&rep_)) {
      if (s < 0 || s >= static_cast<int>(sr->values.size()))
        throw ArgumentError("WavePacket: polarization index out of range");
      return scale_ * interpolate_spherical(sr->values[s], *sr->grid, k);
    }
    throw CapabilityError("WavePacket: shell packets carry no volumetric amplitude");
  }

  /// Samples of polarization s on a spherical grid (scale applied).
  std::vector<std::complex<double>> sample_on(const SphericalKGrid& grid,
                                              int s) const {
    if (const auto* c = std::get_if<ClosedFormRep>(&rep_)) {
      if (s < 0 || s >= static_cast<int>(c->amps.size()))
        throw ArgumentError("WavePacket: polarization index out of range");
      std::vector<std::complex<double>> out(grid.size());
      grid.for_each_node([&](int ir, int it, int ip, std::size_t idx) {
        out[idx] = scale_ * c->amps[s](grid.node(ir, it, ip));
      });
      return out;
    }
    if (const auto* sr = std::get_if<SampledRep>(&rep_)) {
      if (s < 0 || s >= static_cast<int>(sr->values.size()))
        throw ArgumentError("WavePacket: polarization index out of range");
      const bool same = sr->grid->n_k() == grid.n_k() &&
                        sr->grid->n_theta() == grid.n_theta() &&
                        sr->grid->n_phi() == grid.n_phi() &&
                        sr->grid->k_max() == grid.k_max();
      std::vector<std::complex<double>> out(grid.size());
      if (same) {
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = scale_ * sr->values[s][i];
      } else {
        grid.for_each_node([&](int ir, int it, int ip, std::size_t idx) {
          out[idx] =
              scale_ * interpolate_spherical(sr->values[s], *sr->grid, grid.node(ir, it, ip));
        });
      }
      return out;
    }
    throw CapabilityError("WavePacket: shell packets cannot be resampled volumetrically");
  }

  void rescale(double factor) {
    scale_ *= factor;
    norm_ *= factor * factor;
  }

private:
  void refresh_norm() { norm_ = compute_norm(); }

  double compute_norm() const {
    KahanSum<double> acc;
    if (const auto* c = std::get_if<ClosedFormRep>(&rep_)) {
      const auto& g = *c->grid;
      for (const auto& amp : c->amps) {
        g.for_each_node([&](int ir, int it, int ip, std::size_t) {
          acc.add(std::norm(amp(g.node(ir, it, ip))) * g.weight(ir, it, ip));
        });
      }
    } else if (const auto* sr = std::get_if<SampledRep>(&rep_)) {
      const auto& g = *sr->grid;
      for (const auto& v : sr->values) {
        g.for_each_node([&](int ir, int it, int ip, std::size_t idx) {
          acc.add(std::norm(v[idx]) * g.weight(ir, it, ip));
        });
      }
    } else {
      const auto& sh = std::get<ShellRep>(rep_);
      const auto& g = *sh.grid;
      for (int ix = 0; ix < g.n(); ++ix)
        for (int iy = 0; iy < g.n(); ++iy)
          acc.add(sh.amp[g.index(ix, iy)] * sh.amp[g.index(ix, iy)] * g.weight(ix, iy));
    }
    return acc.value() * scale_ * scale_;
  }

  std::variant<ClosedFormRep, SampledRep, ShellRep> rep_;
  PacketKind kind_ = PacketKind::custom;
  int photons_ = 1;
  double scale_ = 1.0;
  double norm_ = 0.0;
};

namespace detail {

inline bool same_grid(const SphericalKGrid& a, const SphericalKGrid& b) {
  return a.k_max() == b.k_max() && a.n_k() == b.n_k() &&
         a.n_theta() == b.n_theta() && a.n_phi() == b.n_phi();
}

/// Relative amplitude-square mass sitting on the outermost two radial shells.
inline double outer_shell_fraction(const WavePacket& p) {
  const auto grid = p.spherical_grid();
  if (!grid) return 0.0;
  KahanSum<double> outer, total;
  const int nk = grid->n_k();
  for (int s = 0; s < p.polarizations(); ++s) {
    const auto samples = p.sample_on(*grid, s);
    grid->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
      const double m = std::norm(samples[idx]) * grid->weight(ir, it, ip);
      total.add(m);
      if (ir >= nk - 2) outer.add(m);
    });
  }
  const double t = total.value();
  return t > 0.0 ? outer.value() / t : 0.0;
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-6) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

} // namespace detail

/// Default quadrature grid for a Gaussian packet: radial cutoff at
/// |k0| + 8 sigma leaves tail mass below 1e-14. The polar count grows with
/// the carrier-to-width ratio; below n_theta = 64 the forward peak of an
/// elongated packet falls between Gauss-Legendre nodes and the norm contract
/// cannot be met.
inline std::shared_ptr<const SphericalKGrid> default_gaussian_grid(
    const GaussianPacketSpec& spec, int n_k = 128, int n_theta = 64,
    int n_phi = 64) {
  spec.validate();
  const double ratio = spec.k0.magnitude() / spec.sigma;
  const int polar_need = static_cast<int>(std::ceil(6.0 * ratio / 8.0)) * 8;
  n_theta = std::max(n_theta, polar_need);
  const int radial_need = static_cast<int>(std::ceil(3.2 * (ratio + 8.0)));
  n_k = std::max(n_k, radial_need);
  // carriers off the polar axis put structure into the azimuthal direction
  const double ratio_perp =
      std::sqrt(spec.k0.kx * spec.k0.kx + spec.k0.ky * spec.k0.ky) / spec.sigma;
  if (ratio_perp > 0.0) {
    const int azim_need =
        static_cast<int>(std::ceil((8.0 * ratio_perp + 16.0) / 8.0)) * 8;
    n_phi = std::max(n_phi, azim_need);
  }
  return SphericalKGrid::make(spec.k0.magnitude() + 8.0 * spec.sigma, n_k,
                              n_theta, n_phi);
}

/// psi(k) = pi^{-3/4} sigma^{-3/2} exp(-(k - k0)^2 / (2 sigma^2)) e^{-i k.r0},
/// sampled as a closed form on the given grid. The displacement phase is a
/// separate multiplicative factor, which keeps the mean momentum at k0 and
/// the norm at one; its sign is chosen so the synthesized intensity
/// |integral sqrt(k) psi e^{i k.r}|^2 is centered at +r0.
inline WavePacket make_gaussian_packet(const GaussianPacketSpec& spec,
                                       std::shared_ptr<const SphericalKGrid> grid) {
  spec.validate();
  if (!grid) throw ArgumentError("make_gaussian_packet: grid required");
  if (grid->k_max() < spec.k0.magnitude() + 8.0 * spec.sigma)
    throw CoverageError("make_gaussian_packet: grid must cover k0 + 8 sigma");
  const KVec3 k0 = spec.k0;
  const Vec3 r0 = spec.r0;
  const double sigma = spec.sigma;
  const double amp_norm = std::pow(M_PI, -0.75) * std::pow(sigma, -1.5);
  AmplitudeFn fn = [k0, r0, sigma, amp_norm](const KVec3& k) {
    const KVec3 d = k - k0;
    const double gauss = amp_norm * std::exp(-d.dot(d) / (2.0 * sigma * sigma));
    const double phase = -k.dot(r0);
    return gauss * std::complex<double>(std::cos(phase), std::sin(phase));
  };
  WavePacket p = WavePacket::closed_form({std::move(fn)}, spec.photons,
                                         std::move(grid), PacketKind::gaussian);
  if (std::abs(p.norm() - 1.0) > 1e-10)
    throw CoverageError("make_gaussian_packet: tail mass outside the grid exceeds 1e-10");
  return p;
}

/// Single-photon marginal of the frequency-degenerate Type-I SPDC pair,
/// sampled on a fixed-frequency shell patch. The pair amplitude depends on
/// the transverse sum variable only (see docs); the per-photon transverse
/// spread is therefore set by the declared bound, which defaults to the
/// phase-matching sinc scale.
inline WavePacket make_biphoton(const BiphotonSpec& spec) {
  spec.validate();
  const double b = spec.bound();
  const double w = spec.pump_waist;
  const double c_sinc =
      spec.crystal_length * spec.pump_wavelength / (8.0 * M_PI * spec.refractive_index);
  if (b < 8.0 / w)
    throw CoverageError("make_biphoton: transverse bound does not cover the pump width");
  auto shell = TransverseShellGrid::make(spec.degenerate_wavenumber(), b,
                                         spec.transverse_samples);

  // Pair-sum quadrature span: the Gaussian factor truncates at ~8/w.
  const double u_lim = std::min(8.0 / w, 2.0 * b);
  if (u_lim / spec.inner_samples > spec.sinc_scale() / 4.0)
    throw CoverageError("make_biphoton: inner quadrature does not resolve the sinc lobes");
  const GaussLegendreRule inner = gauss_legendre(spec.inner_samples);

  auto pair_density = [&](double ux, double uy) {
    const double u2 = ux * ux + uy * uy;
    const double s = detail::sinc(c_sinc * u2);
    return std::exp(-2.0 * w * w * u2) * s * s;
  };
  // marginal(kperp) = integral of |g(kperp + k2)|^2 over the partner box
  auto marginal = [&](double x, double y) {
    const double ax = std::max(x - b, -u_lim), bx = std::min(x + b, u_lim);
    const double ay = std::max(y - b, -u_lim), by = std::min(y + b, u_lim);
    if (ax >= bx || ay >= by) return 0.0;
    KahanSum<double> acc;
    const double hx = 0.5 * (bx - ax), mx = 0.5 * (bx + ax);
    const double hy = 0.5 * (by - ay), my = 0.5 * (by + ay);
    for (int i = 0; i < spec.inner_samples; ++i) {
      const double ux = mx + hx * inner.nodes[i];
      const double wx = hx * inner.weights[i];
      for (int jj = 0; jj < spec.inner_samples; ++jj) {
        const double uy = my + hy * inner.nodes[jj];
        acc.add(pair_density(ux, uy) * wx * hy * inner.weights[jj]);
      }
    }
    return acc.value();
  };

  std::vector<double> amp(shell->size());
  for (int ix = 0; ix < shell->n(); ++ix)
    for (int iy = 0; iy < shell->n(); ++iy)
      amp[shell->index(ix, iy)] =
          std::sqrt(marginal(shell->axis_node(ix), shell->axis_node(iy)));

  WavePacket p = WavePacket::shell(shell, std::move(amp), 2,
                                   PacketKind::biphoton_marginal);
  if (!(p.norm() > 0.0))
    throw DegenerateStateError("make_biphoton: vanishing pair density");
  p.rescale(1.0 / std::sqrt(p.norm()));
  return p;
}

/// Scale the packet so the summed amplitude-square integral is one.
inline WavePacket normalize(const WavePacket& p) {
  if (!(p.norm() > 1e-300))
    throw DegenerateStateError("normalize: zero-norm packet");
  WavePacket out = p;
  out.rescale(1.0 / std::sqrt(p.norm()));
  return out;
}

/// L2 overlap sum over polarizations, on the packets' common grid.
inline std::complex<double> packet_overlap(const WavePacket& a,
                                           const WavePacket& b) {
  if (a.is_shell() || b.is_shell())
    throw ArgumentError("packet_overlap: shell packets are not supported");
  const auto ga = a.spherical_grid();
  const auto gb = b.spherical_grid();
  if (!detail::same_grid(*ga, *gb))
    throw ArgumentError("packet_overlap: grids do not match");
  if (a.polarizations() != b.polarizations())
    throw ArgumentError("packet_overlap: polarization counts differ");
  KahanSum<std::complex<double>> acc;
  for (int s = 0; s < a.polarizations(); ++s) {
    const auto fa = a.sample_on(*ga, s);
    const auto fb = b.sample_on(*ga, s);
    ga->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
      acc.add(std::conj(fa[idx]) * fb[idx] * ga->weight(ir, it, ip));
    });
  }
  return acc.value();
}

/// Coherent sum  psi_a,s(k) + e^{i delta} psi_b,s(k), renormalized.
inline WavePacket superpose(const WavePacket& a, const WavePacket& b,
                            double relative_phase) {
  if (a.is_shell() || b.is_shell())
    throw ArgumentError("superpose: shell packets cannot be superposed");
  if (a.photons() != b.photons())
    throw ArgumentError("superpose: photon numbers differ");
  if (a.polarizations() != b.polarizations())
    throw ArgumentError("superpose: polarization counts differ");
  const auto ga = a.spherical_grid();
  const auto gb = b.spherical_grid();
  if (!detail::same_grid(*ga, *gb))
    throw ArgumentError("superpose: grids do not match");

  const std::complex<double> phase{std::cos(relative_phase),
                                   std::sin(relative_phase)};
  std::vector<std::vector<std::complex<double>>> sums(a.polarizations());
  KahanSum<double> norm2;
  for (int s = 0; s < a.polarizations(); ++s) {
    const auto fa = a.sample_on(*ga, s);
    const auto fb = b.sample_on(*ga, s);
    sums[s].resize(fa.size());
    for (std::size_t i = 0; i < fa.size(); ++i) sums[s][i] = fa[i] + phase * fb[i];
    ga->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
      norm2.add(std::norm(sums[s][idx]) * ga->weight(ir, it, ip));
    });
  }
  if (norm2.value() <= 1e-12)
    throw DegenerateStateError("superpose: amplitudes cancel");

  if (a.is_closed_form() && b.is_closed_form()) {
    std::vector<AmplitudeFn> fns;
    for (int s = 0; s < a.polarizations(); ++s) {
      // capture by value; packets are immutable after construction
      WavePacket pa = a, pb = b;
      fns.push_back([pa, pb, s, phase](const KVec3& k) {
        return pa.amplitude(s, k) + phase * pb.amplitude(s, k);
      });
    }
    WavePacket out = WavePacket::closed_form(std::move(fns), a.photons(), ga,
                                             PacketKind::custom);
    return normalize(out);
  }
  WavePacket out = WavePacket::sampled(ga, std::move(sums), a.photons());
  return normalize(out);
}

/// Polarization-marginalized momentum density |psi(k)|^2 of a normalized
/// packet, sampled on its reference grid (volumetric packets) or on the
/// shell patch (biphoton marginal). Integrates to one.
inline std::vector<double> marginal_density(const WavePacket& p) {
  if (std::abs(p.norm() - 1.0) > 1e-10)
    throw ContractError("marginal_density: packet must be normalized");
  if (p.is_shell()) {
    const auto& amp = p.shell_amplitude();
    std::vector<double> out(amp.size());
    for (std::size_t i = 0; i < amp.size(); ++i)
      out[i] = p.scale() * p.scale() * amp[i] * amp[i];
    return out;
  }
  const auto g = p.spherical_grid();
  std::vector<double> out(g->size(), 0.0);
  for (int s = 0; s < p.polarizations(); ++s) {
    const auto f = p.sample_on(*g, s);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] += std::norm(f[i]);
  }
  return out;
}

} // namespace phlim
