#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "phlim/cartesian_grid.hpp"
#include "phlim/errors.hpp"
#include "phlim/fft.hpp"
#include "phlim/kvec.hpp"
#include "phlim/observables.hpp"
#include "phlim/parallel.hpp"
#include "phlim/quadrature.hpp"
#include "phlim/states.hpp"

namespace phlim {

/// Scalar field matrix element on the conjugate coordinate grid at one time.
struct FieldFrame {
  std::shared_ptr<const CartesianKGrid> grid;
  double t = 0.0;
  std::vector<std::complex<double>> values; // index (ix n + iy) n + iz
  double total_mass = 0.0;                  // sum |phi|^2 dr^3
  double edge_mass_fraction = 0.0;          // within 4 cells of the box edge

  Vec3 centroid() const {
    const auto& g = *grid;
    const int n = g.n();
    const std::size_t total_n = values.size();
    struct Partial {
      KahanSum<double> cx, cy, cz, m;
    };
    std::vector<Partial> parts(chunk_count_for(total_n));
    parallel_for_chunks(total_n, [&](std::size_t ci, std::size_t b, std::size_t e) {
      auto& p = parts[ci];
      for (std::size_t idx = b; idx < e; ++idx) {
        const double w = std::norm(values[idx]);
        const int iz = static_cast<int>(idx % n);
        const int iy = static_cast<int>((idx / n) % n);
        const int ix = static_cast<int>(idx / (static_cast<std::size_t>(n) * n));
        p.m.add(w);
        p.cx.add(g.r(ix) * w);
        p.cy.add(g.r(iy) * w);
        p.cz.add(g.r(iz) * w);
      }
    });
    KahanSum<double> cx, cy, cz, m;
    for (const auto& p : parts) {
      cx.add(p.cx.value());
      cy.add(p.cy.value());
      cz.add(p.cz.value());
      m.add(p.m.value());
    }
    const double total = m.value();
    if (!(total > 0.0)) throw DegenerateStateError("FieldFrame: empty field");
    return {cx.value() / total, cy.value() / total, cz.value() / total};
  }
};

/// Normalized detection-time intensity distribution on a fixed z plane.
struct IntensityRecord {
  std::shared_ptr<const CartesianKGrid> grid;
  double z = 0.0;
  int z_index = 0;
  std::vector<double> times;
  std::vector<double> p; // index (it n + ix) n + iy, integrates to 1
  double prenorm = 0.0;  // raw integral of |phi|^2 over plane and window
  // prenorm / per-photon <H>. In the unitary synthesis convention the
  // plane-time integral equals <H> <k/k_z>, i.e. one up to the dropped
  // constant prefactors and a paraxial weighting.
  double energy_flux_ratio = 0.0;

  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

  /// Mean arrival time over the record.
  double mean_time() const {
    KahanSum<double> num;
    const int n = grid->n();
    for (std::size_t it = 0; it < times.size(); ++it) {
      KahanSum<double> slice;
      const std::size_t base = it * static_cast<std::size_t>(n) * n;
      for (std::size_t a = 0; a < static_cast<std::size_t>(n) * n; ++a)
        slice.add(p[base + a]);
      num.add(times[it] * slice.value());
    }
    const double cell = grid->dr() * grid->dr() * dt();
    return num.value() * cell;
  }

  /// Largest fraction of plane mass in the first or last time bin; a
  /// containment diagnostic for the transit window.
  double edge_time_fraction() const {
    const int n = grid->n();
    const std::size_t plane = static_cast<std::size_t>(n) * n;
    KahanSum<double> first, last, total;
    for (std::size_t it = 0; it < times.size(); ++it) {
      KahanSum<double> slice;
      for (std::size_t a = 0; a < plane; ++a) slice.add(p[it * plane + a]);
      const double s = slice.value();
      total.add(s);
      if (it == 0) first.add(s);
      if (it + 1 == times.size()) last.add(s);
    }
    const double t = total.value();
    if (!(t > 0.0)) return 1.0;
    return std::max(first.value(), last.value()) / t;
  }
};

enum class VelocityEstimatorKind { centroid_slope, plane_toa };

struct VelocityEstimate {
  VelocityEstimatorKind kind = VelocityEstimatorKind::centroid_slope;
  double value = 0.0;    // beta estimate, v/c
  double residual = 0.0; // fit residual (centroid) or containment (toa)
  double t0 = 0.0;
  double t1 = 0.0;
  int samples = 0;
  bool nonlinearity_warning = false;
};

struct TimeWindow {
  double t0 = 0.0;
  double t1 = 0.0;
  int samples = 0;
};

namespace detail {

/// Shared state for repeated field evaluations of one packet on one grid:
/// G(k) = sqrt(|k|) psi(k) and omega(k) = |k| per node. Uses the per-photon
/// amplitude; photon number cancels in every normalized detection quantity.
class FieldSynthesizer {
public:
  FieldSynthesizer(const WavePacket& p, std::shared_ptr<const CartesianKGrid> grid)
      : grid_(std::move(grid)) {
    if (p.is_shell())
      throw CapabilityError("detection: shell packets are not supported");
    if (p.polarizations() != 1)
      throw CapabilityError("detection: one polarization component expected");
    if (std::abs(p.norm() - 1.0) > 1e-8)
      throw ContractError("detection: packet must be normalized");
    const auto& g = *grid_;
    const int n = g.n();
    base_.resize(g.size());
    omega_.resize(g.size());
    parallel_for_chunks(g.size(), [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t idx = b; idx < e; ++idx) {
        const int iz = static_cast<int>(idx % n);
        const int iy = static_cast<int>((idx / n) % n);
        const int ix = static_cast<int>(idx / (static_cast<std::size_t>(n) * n));
        const KVec3 k = g.k_node(ix, iy, iz);
        const double w = k.frequency();
        omega_[idx] = w;
        base_[idx] = std::sqrt(w) * p.amplitude(0, k);
      }
    });
    // (2 pi)^{-3/2} dk^3 makes the discrete synthesis unitary:
    // sum |phi|^2 dr^3 equals sum |sqrt(k) psi|^2 dk^3 exactly.
    prefactor_ = std::pow(2.0 * M_PI, -1.5) * std::pow(g.dk(), 3);
    std::vector<KahanSum<double>> parts(chunk_count_for(base_.size()));
    parallel_for_chunks(base_.size(), [&](std::size_t ci, std::size_t b, std::size_t e) {
      for (std::size_t idx = b; idx < e; ++idx) parts[ci].add(std::norm(base_[idx]));
    });
    KahanSum<double> e;
    for (const auto& part : parts) e.add(part.value());
    energy_density_ = e.value() * std::pow(g.dk(), 3);
  }

  const CartesianKGrid& grid() const { return *grid_; }
  std::shared_ptr<const CartesianKGrid> grid_ptr() const { return grid_; }

  /// Per-photon mean energy of the synthesized band (k-space quadrature on
  /// the Cartesian grid).
  double band_energy() const { return energy_density_; }

  /// Full coordinate-space frame at time t.
  FieldFrame frame(double t, InPlaceFft3& fft) const {
    const auto& g = *grid_;
    const int n = g.n();
    if (fft.n() != n) throw ArgumentError("FieldSynthesizer: fft size mismatch");
    auto* buf = fft.data();
    parallel_for_chunks(g.size(), [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t idx = b; idx < e; ++idx) {
        const double phase = -omega_[idx] * t;
        std::complex<double> v =
            base_[idx] * std::complex<double>(std::cos(phase), std::sin(phase));
        const int iz = static_cast<int>(idx % n);
        const int iy = static_cast<int>((idx / n) % n);
        const int ix = static_cast<int>(idx / (static_cast<std::size_t>(n) * n));
        if ((ix + iy + iz) & 1) v = -v;
        buf[idx] = v;
      }
    });
    fft.execute();

    FieldFrame out;
    out.grid = grid_;
    out.t = t;
    out.values.resize(g.size());
    const int half = n / 2;
    const double sign_const = (3 * half) % 2 == 0 ? 1.0 : -1.0;
    struct Partial {
      KahanSum<double> mass, edge;
    };
    std::vector<Partial> parts(chunk_count_for(g.size()));
    parallel_for_chunks(g.size(), [&](std::size_t ci, std::size_t b, std::size_t e) {
      auto& part = parts[ci];
      for (std::size_t idx = b; idx < e; ++idx) {
        const int iz = static_cast<int>(idx % n);
        const int iy = static_cast<int>((idx / n) % n);
        const int ix = static_cast<int>(idx / (static_cast<std::size_t>(n) * n));
        const Vec3 r{g.r(ix), g.r(iy), g.r(iz)};
        const double cph = g.k_center().dot(r);
        double s = sign_const * prefactor_;
        if ((ix + iy + iz) & 1) s = -s;
        const std::complex<double> v =
            buf[idx] * (s * std::complex<double>(std::cos(cph), std::sin(cph)));
        out.values[idx] = v;
        const double m = std::norm(v);
        part.mass.add(m);
        if (ix < 4 || ix >= n - 4 || iy < 4 || iy >= n - 4 || iz < 4 || iz >= n - 4)
          part.edge.add(m);
      }
    });
    const double cell = std::pow(g.dr(), 3);
    KahanSum<double> mass, edge;
    for (const auto& part : parts) {
      mass.add(part.mass.value());
      edge.add(part.edge.value());
    }
    out.total_mass = mass.value() * cell;
    out.edge_mass_fraction =
        out.total_mass > 0.0 ? edge.value() * cell / out.total_mass : 1.0;
    return out;
  }

  const std::vector<std::complex<double>>& base() const { return base_; }
  const std::vector<double>& omega() const { return omega_; }
  double prefactor() const { return prefactor_; }

private:
  std::shared_ptr<const CartesianKGrid> grid_;
  std::vector<std::complex<double>> base_;
  std::vector<double> omega_;
  double prefactor_ = 0.0;
  double energy_density_ = 0.0;
};

inline void check_window(const TimeWindow& w, int min_samples) {
  if (w.samples < min_samples)
    throw ArgumentError("detection: time window needs more samples");
  if (!(w.t1 > w.t0)) throw ArgumentError("detection: empty time window");
}

} // namespace detail

/// One-shot field synthesis. For repeated frames of the same packet, the
/// estimator entry points below amortize the setup.
inline FieldFrame synthesize_field(const WavePacket& p,
                                   std::shared_ptr<const CartesianKGrid> grid,
                                   double t) {
  detail::FieldSynthesizer synth(p, std::move(grid));
  InPlaceFft3 fft(synth.grid().n());
  FieldFrame f = synth.frame(t, fft);
  if (f.edge_mass_fraction > 1e-6)
    throw CoverageError("synthesize_field: field mass near the box edge, aliasing");
  return f;
}

/// Intensity distributions at one or more z planes over a time window,
/// normalized over (r_perp, t) per plane. One sweep evolves the packet in
/// k space with exact per-step phases and reduces each plane per step.
inline std::vector<IntensityRecord> intensity_records(
    const WavePacket& p, std::shared_ptr<const CartesianKGrid> grid,
    const std::vector<double>& planes, const TimeWindow& window) {
  detail::check_window(window, 2);
  if (planes.empty()) throw ArgumentError("intensity_records: no planes");
  detail::FieldSynthesizer synth(p, grid);
  const auto& g = synth.grid();
  const int n = g.n();
  const std::size_t plane_sz = static_cast<std::size_t>(n) * n;
  const double dt = (window.t1 - window.t0) / (window.samples - 1);

  struct PlaneState {
    double z;
    int zi;
    std::vector<std::complex<double>> phase; // e^{i k_z z} per k_z node
    std::vector<double> raw;                 // |phi|^2 samples, (it, ix, iy)
  };
  std::vector<PlaneState> states;
  for (double z : planes) {
    PlaneState st;
    st.zi = g.nearest_r_index(z); // throws if outside the box
    st.z = g.r(st.zi);
    st.phase.resize(n);
    for (int iz = 0; iz < n; ++iz) {
      const double ph = g.kz(iz) * st.z;
      st.phase[iz] = {std::cos(ph), std::sin(ph)};
    }
    st.raw.assign(plane_sz * window.samples, 0.0);
    states.push_back(std::move(st));
  }

  // evolving k-space field, starting at t0
  std::vector<std::complex<double>> field(synth.base());
  const auto& omega = synth.omega();
  parallel_for_chunks(field.size(), [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double ph = -omega[i] * window.t0;
      field[i] *= std::complex<double>(std::cos(ph), std::sin(ph));
    }
  });
  std::vector<std::complex<double>> increment(field.size());
  parallel_for_chunks(field.size(), [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double ph = -omega[i] * dt;
      increment[i] = {std::cos(ph), std::sin(ph)};
    }
  });

  InPlaceFft2 fft2(n);
  const double pref2 = synth.prefactor() * synth.prefactor();
  std::vector<double> times(window.samples);
  for (int it = 0; it < window.samples; ++it) {
    times[it] = window.t0 + it * dt;
    if (it > 0)
      parallel_for_chunks(field.size(), [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) field[i] *= increment[i];
      });
    for (auto& st : states) {
      // reduce over k_z with the plane phase, then transform transversely
      auto* buf = fft2.data();
      parallel_for_chunks(static_cast<std::size_t>(n) * n,
                          [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t row = b; row < e; ++row) {
          const int ix = static_cast<int>(row / n);
          const int iy = static_cast<int>(row % n);
          const std::size_t base = g.index(ix, iy, 0);
          std::complex<double> acc{0.0, 0.0};
          for (int iz = 0; iz < n; ++iz) acc += field[base + iz] * st.phase[iz];
          if ((ix + iy) & 1) acc = -acc;
          buf[row] = acc;
        }
      });
      fft2.execute();
      double* out = st.raw.data() + static_cast<std::size_t>(it) * plane_sz;
      for (std::size_t a = 0; a < plane_sz; ++a) out[a] = pref2 * std::norm(buf[a]);
    }
  }

  const Observables obs = observables_packet(p);
  const double cell = g.dr() * g.dr() * dt;
  std::vector<IntensityRecord> records;
  for (auto& st : states) {
    IntensityRecord rec;
    rec.grid = synth.grid_ptr();
    rec.z = st.z;
    rec.z_index = st.zi;
    rec.times = times;
    KahanSum<double> total;
    for (double v : st.raw) total.add(v);
    rec.prenorm = total.value() * cell;
    if (!(rec.prenorm > 0.0))
      throw WindowError("intensity_records: no intensity crossed the plane");
    rec.energy_flux_ratio = rec.prenorm / (obs.energy / p.photons());
    rec.p = std::move(st.raw);
    for (double& v : rec.p) v /= rec.prenorm;
    // Packets with support near k = 0 trail an algebraic halo that crosses
    // the plane at all times; 1e-4 in the edge bins keeps the arrival-time
    // bias orders of magnitude below the estimator tolerances while still
    // rejecting genuinely clipped transits.
    if (rec.edge_time_fraction() > 1e-4)
      throw WindowError("intensity_records: transit not contained in the window");
    records.push_back(std::move(rec));
  }
  return records;
}

inline IntensityRecord intensity_record(const WavePacket& p,
                                        std::shared_ptr<const CartesianKGrid> grid,
                                        double z, const TimeWindow& window) {
  return intensity_records(p, std::move(grid), {z}, window)[0];
}

/// Mean propagation speed from the slope of the intensity centroid: a least
/// squares line through <r>(t) over at least 8 frames; value = |slope| / c.
inline VelocityEstimate estimate_velocity_centroid(
    const WavePacket& p, std::shared_ptr<const CartesianKGrid> grid,
    const TimeWindow& window) {
  detail::check_window(window, 8);
  detail::FieldSynthesizer synth(p, grid);
  InPlaceFft3 fft(synth.grid().n());
  const double dt = (window.t1 - window.t0) / (window.samples - 1);

  std::vector<double> ts(window.samples);
  std::vector<Vec3> centroids(window.samples);
  for (int i = 0; i < window.samples; ++i) {
    ts[i] = window.t0 + i * dt;
    const FieldFrame f = synth.frame(ts[i], fft);
    if (f.edge_mass_fraction > 1e-6)
      throw CoverageError("estimate_velocity_centroid: box edge carries field mass");
    centroids[i] = f.centroid();
  }

  // least squares slope per component
  KahanSum<double> st, st2;
  for (double t : ts) {
    st.add(t);
    st2.add(t * t);
  }
  const double n = window.samples;
  const double tbar = st.value() / n;
  const double denom = st2.value() - n * tbar * tbar;
  Vec3 slope{}, inter{};
  {
    KahanSum<double> sx, sy, sz, sxt, syt, szt;
    for (int i = 0; i < window.samples; ++i) {
      sx.add(centroids[i].kx);
      sy.add(centroids[i].ky);
      sz.add(centroids[i].kz);
      sxt.add(centroids[i].kx * ts[i]);
      syt.add(centroids[i].ky * ts[i]);
      szt.add(centroids[i].kz * ts[i]);
    }
    slope = {(sxt.value() - tbar * sx.value()) / denom,
             (syt.value() - tbar * sy.value()) / denom,
             (szt.value() - tbar * sz.value()) / denom};
    inter = {sx.value() / n - slope.kx * tbar, sy.value() / n - slope.ky * tbar,
             sz.value() / n - slope.kz * tbar};
  }
  KahanSum<double> res2;
  for (int i = 0; i < window.samples; ++i) {
    const Vec3 fit = inter + slope * ts[i];
    const Vec3 d = centroids[i] - fit;
    res2.add(d.dot(d));
  }
  VelocityEstimate est;
  est.kind = VelocityEstimatorKind::centroid_slope;
  est.value = slope.magnitude();
  est.residual = std::sqrt(res2.value() / n) / synth.grid().box_length();
  est.t0 = window.t0;
  est.t1 = window.t1;
  est.samples = window.samples;
  est.nonlinearity_warning = est.residual > 1e-3;
  return est;
}

/// Mean propagation speed along z from mean arrival times at two planes:
/// value = (z2 - z1) / (c (<t>_2 - <t>_1)).
inline VelocityEstimate estimate_velocity_toa(const IntensityRecord& rec1,
                                              const IntensityRecord& rec2) {
  if (!rec1.grid || !rec2.grid || rec1.grid->n() != rec2.grid->n())
    throw ArgumentError("estimate_velocity_toa: records do not match");
  if (!(rec2.z > rec1.z))
    throw ArgumentError("estimate_velocity_toa: need z2 > z1");
  const double t1 = rec1.mean_time();
  const double t2 = rec2.mean_time();
  const double dt_floor = 0.25 * std::max(rec1.dt(), rec2.dt());
  if (t2 - t1 <= dt_floor)
    throw OrderingError("estimate_velocity_toa: arrival ordering unresolved");
  VelocityEstimate est;
  est.kind = VelocityEstimatorKind::plane_toa;
  est.value = (rec2.z - rec1.z) / (t2 - t1);
  est.residual = std::max(rec1.edge_time_fraction(), rec2.edge_time_fraction());
  est.t0 = rec1.times.front();
  est.t1 = rec1.times.back();
  est.samples = static_cast<int>(rec1.times.size());
  return est;
}

/// Central finite difference of omega(k) = |k|; equals k / |k|.
inline Vec3 dispersion_gradient_check(const KVec3& k) {
  const double mag = k.magnitude();
  if (mag < 1e-3)
    throw ConditioningError("dispersion_gradient_check: |k| below 1e-3");
  const double h = 1e-5 * mag;
  auto omega = [](const KVec3& q) { return q.frequency(); };
  return {(omega({k.kx + h, k.ky, k.kz}) - omega({k.kx - h, k.ky, k.kz})) / (2 * h),
          (omega({k.kx, k.ky + h, k.kz}) - omega({k.kx, k.ky - h, k.kz})) / (2 * h),
          (omega({k.kx, k.ky, k.kz + h}) - omega({k.kx, k.ky, k.kz - h})) / (2 * h)};
}

/// Support-driven cubic k grid for detection runs: centered on the mean
/// wave vector, half-width covering every density-significant node of the
/// packet's spherical grid with a 10 percent margin.
inline std::shared_ptr<const CartesianKGrid> default_detection_grid(
    const WavePacket& p, int n) {
  const auto sgrid = p.spherical_grid();
  if (!sgrid) throw CapabilityError("default_detection_grid: volumetric packet required");
  std::vector<double> density(sgrid->size(), 0.0);
  for (int s = 0; s < p.polarizations(); ++s) {
    const auto f = p.sample_on(*sgrid, s);
    for (std::size_t i = 0; i < f.size(); ++i) density[i] += std::norm(f[i]);
  }
  double max_density = 0.0;
  for (double d : density) max_density = std::max(max_density, d);
  KahanSum<double> cx, cy, cz, m;
  sgrid->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
    const double w = density[idx] * sgrid->weight(ir, it, ip);
    const KVec3 k = sgrid->node(ir, it, ip);
    m.add(w);
    cx.add(k.kx * w);
    cy.add(k.ky * w);
    cz.add(k.kz * w);
  });
  const KVec3 center{cx.value() / m.value(), cy.value() / m.value(),
                     cz.value() / m.value()};
  double extent = 0.0;
  sgrid->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
    if (density[idx] < 1e-26 * max_density) return;
    const KVec3 d = sgrid->node(ir, it, ip) - center;
    extent = std::max({extent, std::abs(d.kx), std::abs(d.ky), std::abs(d.kz)});
  });
  return CartesianKGrid::make(n, 1.1 * extent, center);
}

/// Default transit window: centered on t = 0, spanning the given fraction
/// of the box crossing time.
inline TimeWindow default_window(const CartesianKGrid& grid, int samples,
                                 double fraction = 0.6) {
  const double span = fraction * grid.box_length();
  return {-0.5 * span, 0.5 * span, samples};
}

} // namespace phlim
