#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phlim/detection.hpp"
#include "phlim/errors.hpp"
#include "phlim/kvec.hpp"
#include "phlim/observables.hpp"
#include "phlim/restframe.hpp"
#include "phlim/states.hpp"
#include "phlim/units.hpp"
#include "phlim/version.hpp"

namespace phlim::io {

using json = nlohmann::ordered_json;

/// Spec-document violation: wrong shape, wrong units, unknown keys.
class SchemaError : public Error {
public:
  using Error::Error;
};

enum class UnitsMode { natural, si };

struct GridParams {
  int n_k = 128;
  int n_theta = 64;
  int n_phi = 64;
  double k_max = 0.0; // natural units; 0 = derive from the state
};

struct TaskSpec {
  std::string op;
  json params;
};

/// Packet construction tree: leaves are closed-form packet specs, inner
/// nodes are binary coherent superpositions.
struct PacketNode {
  enum class Kind { gaussian, biphoton, superposition };
  Kind kind = Kind::gaussian;
  GaussianPacketSpec gaussian;
  BiphotonSpec biphoton;
  std::shared_ptr<PacketNode> a, b;
  double relative_phase = 0.0;
};

struct ParsedState {
  bool is_discrete = false;
  DiscreteModeState discrete;
  std::shared_ptr<PacketNode> packet;
};

struct ResolvedDocument {
  UnitsMode units = UnitsMode::natural;
  double k_ref_per_m = 0.0; // 0 = not provided (natural mode only)
  ParsedState state;
  GridParams grid;
  std::vector<TaskSpec> tasks;
};

namespace detail {

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw SchemaError(where + ": unknown key '" + item.key() + "'");
  }
}

inline double get_number(const json& j, const char* key, const std::string& where,
                         std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw SchemaError(where + ": missing '" + std::string(key) + "'");
  }
  if (!j[key].is_number())
    throw SchemaError(where + ": '" + std::string(key) + "' must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v))
    throw SchemaError(where + ": '" + std::string(key) + "' must be finite");
  return v;
}

inline int get_int(const json& j, const char* key, const std::string& where,
                   std::optional<int> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw SchemaError(where + ": missing '" + std::string(key) + "'");
  }
  if (!j[key].is_number_integer())
    throw SchemaError(where + ": '" + std::string(key) + "' must be an integer");
  return j[key].get<int>();
}

inline KVec3 get_vec3(const json& j, const char* key, const std::string& where,
                      std::optional<KVec3> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw SchemaError(where + ": missing '" + std::string(key) + "'");
  }
  const auto& a = j[key];
  if (!a.is_array() || a.size() != 3 || !a[0].is_number() || !a[1].is_number() ||
      !a[2].is_number())
    throw SchemaError(where + ": '" + std::string(key) +
                      "' must be an array of 3 numbers");
  KVec3 v{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
  if (!v.finite())
    throw SchemaError(where + ": '" + std::string(key) + "' must be finite");
  return v;
}

/// Converters from document units into natural units.
struct InputScale {
  UnitsMode mode = UnitsMode::natural;
  double k_ref = 1.0;
  double wavenumber(double v) const {
    return mode == UnitsMode::si ? v / k_ref : v;
  }
  double length(double v) const { return mode == UnitsMode::si ? v * k_ref : v; }
};

inline std::shared_ptr<PacketNode> parse_packet_node(const json& j,
                                                     const InputScale& in,
                                                     const std::string& where);

inline ParsedState parse_state(const json& j, const InputScale& in) {
  require_object(j, "state");
  if (!j.contains("type") || !j["type"].is_string())
    throw SchemaError("state: missing string 'type'");
  const std::string type = j["type"].get<std::string>();
  ParsedState out;
  if (type == "discrete") {
    check_keys(j, {"type", "kind", "modes"}, "state(discrete)");
    out.is_discrete = true;
    std::string kind = "mixed_ensemble";
    if (j.contains("kind")) {
      if (!j["kind"].is_string())
        throw SchemaError("state(discrete): 'kind' must be a string");
      kind = j["kind"].get<std::string>();
    }
    if (kind == "mixed_ensemble")
      out.discrete.kind = EnsembleKind::mixed_ensemble;
    else if (kind == "pure_superposition")
      out.discrete.kind = EnsembleKind::pure_superposition;
    else
      throw SchemaError("state(discrete): unknown kind '" + kind + "'");
    if (!j.contains("modes") || !j["modes"].is_array() || j["modes"].empty())
      throw SchemaError("state(discrete): 'modes' must be a non-empty array");
    bool any_phase = false;
    std::vector<double> phases;
    for (const auto& m : j["modes"]) {
      require_object(m, "mode");
      check_keys(m, {"k", "n", "weight", "phase", "polarization"}, "mode");
      DiscreteMode dm;
      const KVec3 kraw = get_vec3(m, "k", "mode");
      dm.k = {in.wavenumber(kraw.kx), in.wavenumber(kraw.ky), in.wavenumber(kraw.kz)};
      dm.occupation = get_int(m, "n", "mode", 1);
      dm.polarization = get_int(m, "polarization", "mode", 0);
      out.discrete.terms.push_back(dm);
      out.discrete.weights.push_back(get_number(m, "weight", "mode"));
      const double ph = get_number(m, "phase", "mode", 0.0);
      if (m.contains("phase")) any_phase = true;
      phases.push_back(ph);
    }
    if (any_phase) out.discrete.phases = std::move(phases);
    out.discrete.validate();
    return out;
  }
  out.packet = parse_packet_node(j, in, "state");
  return out;
}

inline std::shared_ptr<PacketNode> parse_packet_node(const json& j,
                                                     const InputScale& in,
                                                     const std::string& where) {
  require_object(j, where);
  if (!j.contains("type") || !j["type"].is_string())
    throw SchemaError(where + ": missing string 'type'");
  const std::string type = j["type"].get<std::string>();
  auto node = std::make_shared<PacketNode>();
  if (type == "gaussian") {
    check_keys(j, {"type", "k0", "sigma", "r0", "photons"}, where + "(gaussian)");
    node->kind = PacketNode::Kind::gaussian;
    const KVec3 k0 = get_vec3(j, "k0", where);
    node->gaussian.k0 = {in.wavenumber(k0.kx), in.wavenumber(k0.ky),
                         in.wavenumber(k0.kz)};
    node->gaussian.sigma = in.wavenumber(get_number(j, "sigma", where));
    const KVec3 r0 = get_vec3(j, "r0", where, KVec3{0, 0, 0});
    node->gaussian.r0 = {in.length(r0.kx), in.length(r0.ky), in.length(r0.kz)};
    node->gaussian.photons = get_int(j, "photons", where, 1);
    node->gaussian.validate();
    return node;
  }
  if (type == "biphoton") {
    check_keys(j,
               {"type", "pump_waist", "crystal_length", "pump_wavelength",
                "refractive_index", "transverse_bound", "transverse_samples",
                "inner_samples"},
               where + "(biphoton)");
    node->kind = PacketNode::Kind::biphoton;
    node->biphoton.pump_waist = in.length(get_number(j, "pump_waist", where));
    node->biphoton.crystal_length = in.length(get_number(j, "crystal_length", where));
    node->biphoton.pump_wavelength =
        in.length(get_number(j, "pump_wavelength", where));
    node->biphoton.refractive_index = get_number(j, "refractive_index", where);
    node->biphoton.transverse_bound =
        in.wavenumber(get_number(j, "transverse_bound", where, 0.0));
    node->biphoton.transverse_samples =
        get_int(j, "transverse_samples", where, 96);
    node->biphoton.inner_samples = get_int(j, "inner_samples", where, 64);
    node->biphoton.validate();
    return node;
  }
  if (type == "superposition") {
    check_keys(j, {"type", "a", "b", "relative_phase"}, where + "(superposition)");
    node->kind = PacketNode::Kind::superposition;
    if (!j.contains("a") || !j.contains("b"))
      throw SchemaError(where + "(superposition): needs 'a' and 'b'");
    node->a = parse_packet_node(j["a"], in, where + ".a");
    node->b = parse_packet_node(j["b"], in, where + ".b");
    if (node->a->kind == PacketNode::Kind::biphoton ||
        node->b->kind == PacketNode::Kind::biphoton)
      throw SchemaError(where + ": biphoton states cannot be superposed");
    node->relative_phase = get_number(j, "relative_phase", where, 0.0);
    return node;
  }
  throw SchemaError(where + ": unknown state type '" + type + "'");
}

/// Radial coverage needed by every closed-form leaf of a packet tree.
inline double packet_coverage(const PacketNode& node) {
  switch (node.kind) {
    case PacketNode::Kind::gaussian:
      return node.gaussian.k0.magnitude() + 8.0 * node.gaussian.sigma;
    case PacketNode::Kind::biphoton:
      return 0.0; // shell representation, no spherical grid
    case PacketNode::Kind::superposition:
      return std::max(packet_coverage(*node.a), packet_coverage(*node.b));
  }
  return 0.0;
}

/// Node counts every leaf needs on a shared grid, per the adaptive rule of
/// default_gaussian_grid.
inline void packet_grid_floor(const PacketNode& node, int& n_k, int& n_theta) {
  switch (node.kind) {
    case PacketNode::Kind::gaussian: {
      const double ratio = node.gaussian.k0.magnitude() / node.gaussian.sigma;
      n_theta = std::max(
          n_theta, static_cast<int>(std::ceil(6.0 * ratio / 8.0)) * 8);
      n_k = std::max(n_k, static_cast<int>(std::ceil(3.2 * (ratio + 8.0))));
      return;
    }
    case PacketNode::Kind::biphoton:
      return;
    case PacketNode::Kind::superposition:
      packet_grid_floor(*node.a, n_k, n_theta);
      packet_grid_floor(*node.b, n_k, n_theta);
      return;
  }
}

inline WavePacket build_packet(const PacketNode& node,
                               const std::shared_ptr<const SphericalKGrid>& grid) {
  switch (node.kind) {
    case PacketNode::Kind::gaussian:
      return make_gaussian_packet(node.gaussian, grid);
    case PacketNode::Kind::biphoton:
      return make_biphoton(node.biphoton);
    case PacketNode::Kind::superposition:
      return superpose(build_packet(*node.a, grid), build_packet(*node.b, grid),
                       node.relative_phase);
  }
  throw ArgumentError("build_packet: unreachable");
}

} // namespace detail

/// Parse and validate a state-spec document. Throws SchemaError on any
/// violation; nothing is partially accepted.
inline ResolvedDocument parse_document(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("spec is not valid JSON: ") + e.what());
  }
  detail::require_object(j, "document");
  detail::check_keys(j, {"units", "k_ref", "state", "grid", "tasks"}, "document");

  ResolvedDocument doc;
  if (!j.contains("units") || !j["units"].is_string())
    throw SchemaError("document: missing string 'units'");
  const std::string units = j["units"].get<std::string>();
  if (units == "natural")
    doc.units = UnitsMode::natural;
  else if (units == "si")
    doc.units = UnitsMode::si;
  else
    throw SchemaError("document: units must be 'si' or 'natural'");

  if (j.contains("k_ref")) {
    if (!j["k_ref"].is_number() || !(j["k_ref"].get<double>() > 0.0))
      throw SchemaError("document: 'k_ref' must be a positive number (1/m)");
    doc.k_ref_per_m = j["k_ref"].get<double>();
  } else if (doc.units == UnitsMode::si) {
    throw SchemaError("document: SI units require 'k_ref' (1/m)");
  }

  detail::InputScale in{doc.units, doc.k_ref_per_m > 0 ? doc.k_ref_per_m : 1.0};
  if (!j.contains("state")) throw SchemaError("document: missing 'state'");
  doc.state = detail::parse_state(j["state"], in);

  if (j.contains("grid")) {
    detail::require_object(j["grid"], "grid");
    detail::check_keys(j["grid"], {"n_k", "n_theta", "n_phi", "k_max"}, "grid");
    doc.grid.n_k = detail::get_int(j["grid"], "n_k", "grid", 128);
    doc.grid.n_theta = detail::get_int(j["grid"], "n_theta", "grid", 64);
    doc.grid.n_phi = detail::get_int(j["grid"], "n_phi", "grid", 64);
    doc.grid.k_max = in.wavenumber(detail::get_number(j["grid"], "k_max", "grid", 0.0));
    if (doc.grid.n_k < 2 || doc.grid.n_theta < 2 || doc.grid.n_phi < 2)
      throw SchemaError("grid: node counts must be >= 2");
  }

  if (j.contains("tasks")) {
    if (!j["tasks"].is_array()) throw SchemaError("document: 'tasks' must be an array");
    for (const auto& t : j["tasks"]) {
      detail::require_object(t, "task");
      detail::check_keys(t, {"op", "params"}, "task");
      if (!t.contains("op") || !t["op"].is_string())
        throw SchemaError("task: missing string 'op'");
      TaskSpec ts;
      ts.op = t["op"].get<std::string>();
      if (ts.op != "observables" && ts.op != "detect" && ts.op != "decompose" &&
          ts.op != "oracle")
        throw SchemaError("task: unknown op '" + ts.op + "'");
      ts.params = t.contains("params") ? t["params"] : json::object();
      detail::require_object(ts.params, "task.params");
      doc.tasks.push_back(std::move(ts));
    }
  }
  if (doc.tasks.empty()) doc.tasks.push_back({"observables", json::object()});
  return doc;
}

namespace detail {

inline json quantity(double value, const char* unit) {
  return json{{"value", value}, {"unit", unit}};
}

inline json vec_quantity(const Vec3& v, const char* unit) {
  return json{{"value", json::array({v.kx, v.ky, v.kz})}, {"unit", unit}};
}

} // namespace detail

/// Observables block with explicit unit labels; SI columns appear when a
/// k_ref is available.
inline json observables_to_json(const Observables& obs, double k_ref_per_m,
                                const units::UnitScale* scale = nullptr) {
  json out;
  out["energy"] = detail::quantity(obs.energy, "hbar c k_ref");
  out["momentum"] = detail::vec_quantity(obs.momentum, "hbar k_ref");
  out["mass"] = detail::quantity(obs.mass, "hbar k_ref / c");
  out["beta"] = detail::quantity(obs.beta, "c");
  out["direction"] = detail::vec_quantity(obs.direction, "1");
  out["mass_clamped"] = obs.mass_clamped;
  if (k_ref_per_m > 0.0) {
    units::UnitScale def;
    def.k_ref_per_m = k_ref_per_m;
    const units::UnitScale& s = scale ? *scale : def;
    out["energy_si"] = detail::quantity(s.energy_si(obs.energy), "J");
    out["momentum_si"] = detail::vec_quantity(
        {s.momentum_si(obs.momentum.kx), s.momentum_si(obs.momentum.ky),
         s.momentum_si(obs.momentum.kz)},
        "kg m / s");
    out["mass_si"] = detail::quantity(s.mass_si(obs.mass), "kg");
  }
  return out;
}

/// Columnar text table of decomposition coefficients for external plotting.
inline std::string decomposition_to_csv(const AngularDecomposition& d) {
  std::ostringstream os;
  os.precision(17);
  os << "l,j,k_r,re_beta,im_beta\n";
  for (int l = 0; l <= d.l_max; ++l)
    for (int j = -l; j <= l; ++j) {
      const auto& ch = d.beta(l, j);
      for (int ir = 0; ir < d.grid->n_k(); ++ir)
        os << l << ',' << j << ',' << d.grid->radial_node(ir) << ','
           << ch[ir].real() << ',' << ch[ir].imag() << '\n';
    }
  return os.str();
}

inline std::string intensity_record_to_csv(const IntensityRecord& rec) {
  std::ostringstream os;
  os.precision(17);
  os << "x,y,t,p\n";
  const int n = rec.grid->n();
  for (std::size_t it = 0; it < rec.times.size(); ++it)
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy)
        os << rec.grid->r(ix) << ',' << rec.grid->r(iy) << ',' << rec.times[it]
           << ','
           << rec.p[(it * static_cast<std::size_t>(n) + ix) * n + iy] << '\n';
  return os.str();
}

/// Compact binary raster: a 64-byte JSON-prefixed header (padded with
/// spaces), then little-endian float64 values in (t, x, y) row-major order.
inline std::string intensity_record_to_raster(const IntensityRecord& rec) {
  const int n = rec.grid->n();
  json hdr;
  hdr["shape"] = json::array({rec.times.size(), n, n});
  hdr["order"] = "t,x,y";
  hdr["unit"] = "1/(dr^2 dt)";
  std::string header = hdr.dump();
  if (header.size() > 63)
    throw ArgumentError("intensity_record_to_raster: header exceeds 64 bytes");
  header.resize(63, ' ');
  header.push_back('\n');
  std::string out = header;
  out.resize(64 + rec.p.size() * sizeof(double));
  static_assert(sizeof(double) == 8);
  std::memcpy(out.data() + 64, rec.p.data(), rec.p.size() * sizeof(double));
  return out;
}

} // namespace phlim::io
