#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "phlim/io.hpp"

namespace phlim::io {

struct Sidecar {
  std::string suffix; // appended to the output stem
  std::string content;
};

struct PipelineOptions {
  std::optional<GridParams> grid_override;
  std::optional<int> l_max_override;
  std::optional<UnitsMode> output_units;
  bool verbose = false;
};

struct PipelineResult {
  json report;
  std::vector<Sidecar> sidecars;
};

namespace detail {

inline std::shared_ptr<const SphericalKGrid> resolve_grid(
    const ResolvedDocument& doc, const PipelineOptions& opt) {
  GridParams g = opt.grid_override ? *opt.grid_override : doc.grid;
  if (opt.grid_override && doc.grid.k_max > 0.0 && g.k_max == 0.0)
    g.k_max = doc.grid.k_max;
  if (!doc.state.packet) return nullptr;
  double k_max = g.k_max;
  if (k_max <= 0.0) k_max = packet_coverage(*doc.state.packet);
  if (k_max <= 0.0) return nullptr; // shell-only state
  // requested counts are floors; the state's own accuracy needs win
  packet_grid_floor(*doc.state.packet, g.n_k, g.n_theta);
  return SphericalKGrid::make(k_max, g.n_k, g.n_theta, g.n_phi);
}

inline json grid_to_json(const SphericalKGrid& g) {
  json out;
  out["n_k"] = g.n_k();
  out["n_theta"] = g.n_theta();
  out["n_phi"] = g.n_phi();
  out["k_max"] = quantity(g.k_max(), "k_ref");
  return out;
}

inline json packet_node_to_json(const PacketNode& n) {
  json out;
  switch (n.kind) {
    case PacketNode::Kind::gaussian:
      out["type"] = "gaussian";
      out["k0"] = vec_quantity(n.gaussian.k0, "k_ref");
      out["sigma"] = quantity(n.gaussian.sigma, "k_ref");
      out["r0"] = vec_quantity(n.gaussian.r0, "1/k_ref");
      out["photons"] = n.gaussian.photons;
      break;
    case PacketNode::Kind::biphoton:
      out["type"] = "biphoton";
      out["pump_waist"] = quantity(n.biphoton.pump_waist, "1/k_ref");
      out["crystal_length"] = quantity(n.biphoton.crystal_length, "1/k_ref");
      out["pump_wavelength"] = quantity(n.biphoton.pump_wavelength, "1/k_ref");
      out["refractive_index"] = n.biphoton.refractive_index;
      out["transverse_bound"] = quantity(n.biphoton.bound(), "k_ref");
      out["transverse_samples"] = n.biphoton.transverse_samples;
      out["inner_samples"] = n.biphoton.inner_samples;
      out["degenerate_wavenumber"] = quantity(n.biphoton.degenerate_wavenumber(), "k_ref");
      break;
    case PacketNode::Kind::superposition:
      out["type"] = "superposition";
      out["a"] = packet_node_to_json(*n.a);
      out["b"] = packet_node_to_json(*n.b);
      out["relative_phase"] = quantity(n.relative_phase, "rad");
      break;
  }
  return out;
}

inline json state_echo(const ParsedState& st) {
  if (!st.is_discrete) return packet_node_to_json(*st.packet);
  json out;
  out["type"] = "discrete";
  out["kind"] = st.discrete.kind == EnsembleKind::mixed_ensemble
                    ? "mixed_ensemble"
                    : "pure_superposition";
  json modes = json::array();
  for (std::size_t i = 0; i < st.discrete.terms.size(); ++i) {
    json m;
    m["k"] = vec_quantity(st.discrete.terms[i].k, "k_ref");
    m["n"] = st.discrete.terms[i].occupation;
    m["weight"] = st.discrete.weights[i];
    m["polarization"] = st.discrete.terms[i].polarization;
    if (!st.discrete.phases.empty())
      m["phase"] = quantity(st.discrete.phases[i], "rad");
    modes.push_back(std::move(m));
  }
  out["modes"] = std::move(modes);
  return out;
}

/// Closed-form companion table for the state, where one applies.
inline json oracle_block(const ResolvedDocument& doc) {
  json out;
  if (doc.state.is_discrete) {
    const auto& st = doc.state.discrete;
    // equal-frequency closed forms apply when all |k_i| agree
    double omega0 = st.terms.front().k.frequency();
    bool equal_freq = true;
    for (const auto& t : st.terms)
      if (std::abs(t.k.frequency() - omega0) > 1e-12 * omega0) equal_freq = false;
    int n0 = st.terms.front().occupation;
    bool equal_n = true;
    for (const auto& t : st.terms)
      if (t.occupation != n0) equal_n = false;
    if (equal_freq && equal_n) {
      std::vector<std::vector<double>> angles(st.terms.size(),
                                              std::vector<double>(st.terms.size(), 0.0));
      for (std::size_t i = 0; i < st.terms.size(); ++i)
        for (std::size_t j = 0; j < st.terms.size(); ++j) {
          const double c = st.terms[i].k.unit().dot(st.terms[j].k.unit());
          angles[i][j] = std::acos(std::clamp(c, -1.0, 1.0));
        }
      out["mixed_mass"] = quantity(
          closed_form_mixed_mass(st.weights, angles, n0, omega0), "hbar k_ref / c");
      if (st.terms.size() == 2 && std::abs(st.weights[0] - 0.5) < 1e-12 &&
          n0 % 2 == 0) {
        out["two_mode_mass"] = quantity(
            closed_form_two_mode_mass(n0, omega0, angles[0][1]), "hbar k_ref / c");
      }
    } else {
      out["note"] = "closed forms require equal mode frequencies and occupations";
    }
    return out;
  }
  const auto& node = *doc.state.packet;
  if (node.kind == PacketNode::Kind::gaussian) {
    const double k0 = node.gaussian.k0.magnitude();
    const double sigma = node.gaussian.sigma;
    const double e = closed_form_gaussian_energy(k0, sigma);
    const auto m = closed_form_gaussian_mass(k0, sigma);
    out["energy"] = quantity(e, "hbar c k_ref");
    out["mass"] = quantity(m.mass, "hbar k_ref / c");
    out["mass_asymptote"] = quantity(m.asymptote, "hbar k_ref / c");
    out["asymptote_valid"] = m.asymptote_valid;
    out["beta"] = quantity(k0 / e, "c");
    out["beta_leading_order"] =
        quantity(std::sqrt(std::max(0.0, 1.0 - sigma * sigma / (k0 * k0))), "c");
  } else if (node.kind == PacketNode::Kind::biphoton) {
    const auto est = biphoton_mass_estimate(node.biphoton);
    out["mass_estimate"] = quantity(est.mass, "hbar k_ref / c");
    out["schmidt_number"] = est.schmidt_number;
    out["in_regime"] = est.in_regime;
    out["mass_floor"] =
        quantity(0.5 / node.biphoton.pump_waist, "hbar k_ref / c");
  } else {
    out["note"] = "no closed form for superposed packets";
  }
  return out;
}

struct BuiltState {
  std::optional<Observables> obs;
  std::optional<WavePacket> packet;
  std::shared_ptr<const SphericalKGrid> grid;
};

inline BuiltState build_state(const ResolvedDocument& doc,
                              const PipelineOptions& opt) {
  BuiltState out;
  if (doc.state.is_discrete) {
    out.obs = observables_discrete(doc.state.discrete);
    return out;
  }
  out.grid = resolve_grid(doc, opt);
  out.packet = build_packet(*doc.state.packet, out.grid);
  out.obs = observables_packet(*out.packet);
  return out;
}

} // namespace detail

/// Execute the document's tasks and assemble the report. Pure function of
/// the document and options; file placement belongs to the caller.
inline PipelineResult run_pipeline(const ResolvedDocument& doc,
                                   const PipelineOptions& opt = {}) {
  PipelineResult result;
  json& rep = result.report;
  rep["tool"] = {{"name", "phlim"}, {"version", kVersion}};
  rep["units"] = json::object();
  rep["units"]["mode"] =
      (opt.output_units.value_or(doc.units) == UnitsMode::si) ? "si" : "natural";
  if (doc.k_ref_per_m > 0.0) {
    rep["units"]["k_ref_per_m"] = doc.k_ref_per_m;
    rep["units"]["hbar_J_s"] = units::kHbarJs;
    rep["units"]["c_m_per_s"] = units::kSpeedOfLightMps;
  }
  rep["spec_echo"] = detail::state_echo(doc.state);

  const detail::BuiltState built = detail::build_state(doc, opt);
  const double k_ref_for_si =
      (opt.output_units.value_or(doc.units) == UnitsMode::si) ? doc.k_ref_per_m : 0.0;
  if (built.grid) rep["grid"] = detail::grid_to_json(*built.grid);
  if (built.packet && built.packet->is_shell()) {
    const auto sg = built.packet->shell_grid();
    rep["grid"] = {{"type", "transverse_shell"},
                   {"n", sg->n()},
                   {"bound", detail::quantity(sg->bound(), "k_ref")},
                   {"k_shell", detail::quantity(sg->k_shell(), "k_ref")}};
  }

  json tasks = json::array();
  for (const auto& ts : doc.tasks) {
    json block;
    block["op"] = ts.op;
    if (ts.op == "observables") {
      detail::check_keys(ts.params, {}, "observables.params");
      block["result"] = observables_to_json(*built.obs, k_ref_for_si);
      if (built.packet) {
        block["diagnostics"] = {{"packet_norm", built.packet->norm()},
                                {"photons", built.packet->photons()}};
      }
    } else if (ts.op == "oracle") {
      detail::check_keys(ts.params, {}, "oracle.params");
      block["result"] = detail::oracle_block(doc);
    } else if (ts.op == "decompose") {
      detail::check_keys(ts.params, {"l_max"}, "decompose.params");
      if (!built.packet || built.packet->is_shell())
        throw ContractError("decompose task requires a volumetric packet state");
      int l_max = detail::get_int(ts.params, "l_max", "decompose.params", 16);
      if (opt.l_max_override) l_max = *opt.l_max_override;
      auto [rest, bp] = boost_to_rest_frame(*built.packet);
      const AngularDecomposition d = decompose(rest, l_max);
      block["result"] = {
          {"gamma", bp.gamma},
          {"rapidity", bp.rapidity},
          {"boost_direction", detail::vec_quantity(bp.direction, "1")},
          {"l_max", l_max},
          {"parseval", d.parseval},
          {"truncation_residual", d.residual},
          {"truncation_warning", d.truncation_warning},
          {"mode_energy", detail::quantity(energy_in_modes(d), "hbar c k_ref")},
          {"rest_grid_k_max", detail::quantity(d.grid->k_max(), "k_ref")}};
      result.sidecars.push_back({".decomposition.csv", decomposition_to_csv(d)});
    } else if (ts.op == "detect") {
      detail::check_keys(ts.params,
                         {"n", "centroid_samples", "toa_samples",
                          "window_fraction", "plane_fraction", "export"},
                         "detect.params");
      if (!built.packet || built.packet->is_shell())
        throw ContractError("detect task requires a volumetric packet state");
      const int n = detail::get_int(ts.params, "n", "detect.params", 128);
      const int nc = detail::get_int(ts.params, "centroid_samples", "detect.params", 12);
      const int nt = detail::get_int(ts.params, "toa_samples", "detect.params", 96);
      const double wf =
          detail::get_number(ts.params, "window_fraction", "detect.params", 0.5);
      const double pf =
          detail::get_number(ts.params, "plane_fraction", "detect.params", 0.125);
      std::string exp = "none";
      if (ts.params.contains("export")) {
        if (!ts.params["export"].is_string())
          throw SchemaError("detect.params: 'export' must be a string");
        exp = ts.params["export"].get<std::string>();
        if (exp != "none" && exp != "csv" && exp != "raster" && exp != "both")
          throw SchemaError("detect.params: export must be none|csv|raster|both");
      }
      // detection uses the per-photon amplitude; photon number cancels in
      // every normalized quantity
      const WavePacket& unit_packet = *built.packet;
      auto grid = default_detection_grid(unit_packet, n);
      const double quad_beta = built.obs->beta;
      block["params"] = {{"n", n},
                         {"centroid_samples", nc},
                         {"toa_samples", nt},
                         {"window_fraction", wf},
                         {"plane_fraction", pf},
                         {"export", exp}};
      block["result"] = json::object();
      block["result"]["quadrature_beta"] = detail::quantity(quad_beta, "c");
      const auto est_c = estimate_velocity_centroid(
          unit_packet, grid, default_window(*grid, nc, wf));
      block["result"]["centroid_beta"] = detail::quantity(est_c.value, "c");
      block["result"]["centroid_residual"] = est_c.residual;
      const double z_off = pf * grid->box_length();
      try {
        const auto recs = intensity_records(unit_packet, grid, {-z_off, z_off},
                                            default_window(*grid, nt, wf));
        const auto est_t = estimate_velocity_toa(recs[0], recs[1]);
        block["result"]["toa_beta"] = detail::quantity(est_t.value, "c");
        block["result"]["toa_edge_fraction"] = est_t.residual;
        block["result"]["flux_ratio"] = recs[0].prenorm / recs[1].prenorm;
        block["result"]["energy_flux_ratio"] = recs[0].energy_flux_ratio;
        if (exp == "csv" || exp == "both") {
          result.sidecars.push_back({".plane1.csv", intensity_record_to_csv(recs[0])});
          result.sidecars.push_back({".plane2.csv", intensity_record_to_csv(recs[1])});
        }
        if (exp == "raster" || exp == "both") {
          result.sidecars.push_back(
              {".plane1.raster", intensity_record_to_raster(recs[0])});
          result.sidecars.push_back(
              {".plane2.raster", intensity_record_to_raster(recs[1])});
        }
      } catch (const OrderingError& e) {
        block["result"]["toa_beta"] = nullptr;
        block["result"]["toa_note"] = e.what();
      } catch (const WindowError& e) {
        block["result"]["toa_beta"] = nullptr;
        block["result"]["toa_note"] = e.what();
      }
    }
    tasks.push_back(std::move(block));
  }
  rep["tasks"] = std::move(tasks);
  return result;
}

/// Four-way velocity comparison: quadrature, closed form (when available),
/// centroid slope, plane time-of-arrival.
inline PipelineResult compare_pipeline(const ResolvedDocument& doc,
                                       const PipelineOptions& opt = {},
                                       int detect_n = 128) {
  if (doc.state.is_discrete)
    throw ContractError("compare requires a wave-packet state");
  PipelineResult result;
  json& rep = result.report;
  rep["tool"] = {{"name", "phlim"}, {"version", kVersion}};
  rep["spec_echo"] = detail::state_echo(doc.state);

  const detail::BuiltState built = detail::build_state(doc, opt);
  if (built.packet->is_shell())
    throw ContractError("compare requires a volumetric packet state");

  json table;
  table["quadrature_beta"] = built.obs->beta;
  std::optional<double> closed;
  if (doc.state.packet->kind == PacketNode::Kind::gaussian) {
    const double k0 = doc.state.packet->gaussian.k0.magnitude();
    const double e = closed_form_gaussian_energy(k0, doc.state.packet->gaussian.sigma);
    closed = k0 / e;
    table["closed_form_beta"] = *closed;
  } else {
    table["closed_form_beta"] = nullptr;
  }

  // packets with support near k = 0 carry algebraic field tails and can
  // need a roomier box; retry once at doubled sampling before giving up
  auto grid = default_detection_grid(*built.packet, detect_n);
  VelocityEstimate est_c;
  try {
    est_c = estimate_velocity_centroid(*built.packet, grid,
                                       default_window(*grid, 12, 0.5));
  } catch (const CoverageError&) {
    detect_n *= 2;
    grid = default_detection_grid(*built.packet, detect_n);
    est_c = estimate_velocity_centroid(*built.packet, grid,
                                       default_window(*grid, 12, 0.4));
  }
  table["centroid_beta"] = est_c.value;
  table["detection_n"] = detect_n;
  std::optional<double> toa;
  const double z_off = 0.125 * grid->box_length();
  try {
    const auto recs = intensity_records(*built.packet, grid, {-z_off, z_off},
                                        default_window(*grid, 96, 0.5));
    const auto est_t = estimate_velocity_toa(recs[0], recs[1]);
    toa = est_t.value;
    table["toa_beta"] = est_t.value;
  } catch (const OrderingError& e) {
    table["toa_beta"] = nullptr;
    table["toa_note"] = e.what();
  } catch (const WindowError& e) {
    table["toa_beta"] = nullptr;
    table["toa_note"] = e.what();
  }

  json dev;
  dev["centroid_vs_quadrature"] = std::abs(est_c.value - built.obs->beta);
  if (closed) dev["closed_vs_quadrature"] = std::abs(*closed - built.obs->beta);
  if (toa) dev["toa_vs_quadrature"] = std::abs(*toa - built.obs->beta);
  if (toa) dev["toa_vs_centroid"] = std::abs(*toa - est_c.value);
  rep["betas"] = std::move(table);
  rep["deviations"] = std::move(dev);
  return result;
}

} // namespace phlim::io
