#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "phlim/pipeline.hpp"

using namespace phlim;
using phlim::io::parse_document;
using phlim::io::SchemaError;
using Catch::Approx;

namespace {

const char* kGaussianNatural = R"({
  "units": "natural",
  "state": {"type": "gaussian", "k0": [0, 0, 10], "sigma": 1.0}
})";

const char* kGaussianSi = R"({
  "units": "si",
  "k_ref": 1e6,
  "state": {"type": "gaussian", "k0": [0, 0, 1e7], "sigma": 1e6}
})";

} // namespace

TEST_CASE("documents parse with defaults resolved") {
  const auto doc = parse_document(kGaussianNatural);
  CHECK(doc.units == io::UnitsMode::natural);
  CHECK(doc.tasks.size() == 1);
  CHECK(doc.tasks[0].op == "observables");
  CHECK(doc.grid.n_k == 128);
  REQUIRE(doc.state.packet);
  CHECK(doc.state.packet->gaussian.k0.kz == 10.0);
}

TEST_CASE("schema violations are rejected with diagnostics") {
  CHECK_THROWS_AS(parse_document("not json at all"), SchemaError);
  CHECK_THROWS_AS(parse_document(R"({"state": {}})"), SchemaError);
  CHECK_THROWS_AS(parse_document(R"({"units": "cgs", "state": {}})"), SchemaError);
  CHECK_THROWS_AS(
      parse_document(R"({"units": "si", "state": {"type": "gaussian", "k0": [0,0,1], "sigma": 1}})"),
      SchemaError); // si requires k_ref
  CHECK_THROWS_AS(
      parse_document(R"({"units": "natural", "state": {"type": "gaussian", "k0": [0,0,1], "sigma": 1, "spin": 2}})"),
      SchemaError); // unknown key
  CHECK_THROWS_AS(
      parse_document(R"({"units": "natural", "state": {"type": "vortex"}})"),
      SchemaError);
  CHECK_THROWS_AS(
      parse_document(R"({"units": "natural", "state": {"type": "gaussian", "k0": [0,0,1], "sigma": 1}, "tasks": [{"op": "fly"}]})"),
      SchemaError);
  CHECK_THROWS_AS(
      parse_document(R"({"units": "natural", "state": {"type": "gaussian", "k0": [0,0], "sigma": 1}})"),
      SchemaError); // k0 must have 3 entries
}

TEST_CASE("SI and natural documents resolve to the same internal state") {
  const auto nat = parse_document(kGaussianNatural);
  const auto si = parse_document(kGaussianSi);
  REQUIRE(nat.state.packet);
  REQUIRE(si.state.packet);
  CHECK(si.state.packet->gaussian.k0.kz ==
        Approx(nat.state.packet->gaussian.k0.kz).epsilon(1e-15));
  CHECK(si.state.packet->gaussian.sigma ==
        Approx(nat.state.packet->gaussian.sigma).epsilon(1e-15));

  const auto rep_nat = io::run_pipeline(nat);
  const auto rep_si = io::run_pipeline(si);
  const double beta_nat =
      rep_nat.report["tasks"][0]["result"]["beta"]["value"].get<double>();
  const double beta_si =
      rep_si.report["tasks"][0]["result"]["beta"]["value"].get<double>();
  CHECK(beta_nat == beta_si); // bit-identical: units never touch beta
  const double e_nat =
      rep_nat.report["tasks"][0]["result"]["energy"]["value"].get<double>();
  const double e_si =
      rep_si.report["tasks"][0]["result"]["energy"]["value"].get<double>();
  CHECK(e_nat == Approx(e_si).epsilon(1e-12));
}

TEST_CASE("reports are deterministic") {
  const auto doc = parse_document(kGaussianNatural);
  const auto a = io::run_pipeline(doc);
  const auto b = io::run_pipeline(doc);
  CHECK(a.report.dump() == b.report.dump());
}

TEST_CASE("rescaling hbar never changes beta") {
  const auto doc = parse_document(kGaussianSi);
  const auto built_obs = [&] {
    auto grid = io::detail::resolve_grid(doc, {});
    return observables_packet(io::detail::build_packet(*doc.state.packet, grid));
  }();
  units::UnitScale a{1e6, units::kHbarJs, units::kSpeedOfLightMps};
  units::UnitScale b{1e6, 7.3e-34, units::kSpeedOfLightMps};
  const auto ja = io::observables_to_json(built_obs, 1e6, &a);
  const auto jb = io::observables_to_json(built_obs, 1e6, &b);
  CHECK(ja["beta"].dump() == jb["beta"].dump());
  CHECK(ja["direction"].dump() == jb["direction"].dump());
  CHECK(ja["mass"].dump() == jb["mass"].dump()); // natural value is hbar-free
  CHECK(ja["mass_si"]["value"].get<double>() !=
        jb["mass_si"]["value"].get<double>());
}

TEST_CASE("observables report carries unit labels on every number") {
  const auto doc = parse_document(kGaussianSi);
  const auto rep = io::run_pipeline(doc).report;
  const auto& obs = rep["tasks"][0]["result"];
  for (const char* key : {"energy", "momentum", "mass", "beta", "direction",
                          "energy_si", "momentum_si", "mass_si"}) {
    INFO(key);
    REQUIRE(obs.contains(key));
    CHECK(obs[key].contains("unit"));
    CHECK(obs[key].contains("value"));
  }
  CHECK(obs["energy"]["unit"] == "hbar c k_ref");
  CHECK(obs["mass_si"]["unit"] == "kg");
  // resolved grid is echoed
  CHECK(rep["grid"]["n_k"].get<int>() == 128);
}

TEST_CASE("discrete document runs through the pipeline") {
  const char* text = R"({
    "units": "natural",
    "state": {"type": "discrete", "kind": "pure_superposition", "modes": [
      {"k": [0, 0, 1], "n": 2, "weight": 0.5},
      {"k": [0, 0, -1], "n": 2, "weight": 0.5}
    ]},
    "tasks": [{"op": "observables"}, {"op": "oracle"}]
  })";
  const auto rep = io::run_pipeline(parse_document(text)).report;
  CHECK(rep["tasks"][0]["result"]["mass"]["value"].get<double>() ==
        Approx(2.0).epsilon(1e-14));
  CHECK(rep["tasks"][1]["result"]["two_mode_mass"]["value"].get<double>() ==
        Approx(2.0).epsilon(1e-14));
}

TEST_CASE("superposition document builds and runs") {
  const char* text = R"({
    "units": "natural",
    "state": {"type": "superposition",
      "a": {"type": "gaussian", "k0": [0, 0, 10], "sigma": 1},
      "b": {"type": "gaussian", "k0": [0, 0, -10], "sigma": 1},
      "relative_phase": 0.0},
    "grid": {"n_k": 96, "n_theta": 48, "n_phi": 8}
  })";
  const auto rep = io::run_pipeline(parse_document(text)).report;
  CHECK(rep["tasks"][0]["result"]["beta"]["value"].get<double>() == 0.0);
}

TEST_CASE("decompose task emits a sidecar and gamma") {
  const char* text = R"({
    "units": "natural",
    "state": {"type": "gaussian", "k0": [0, 0, 2], "sigma": 1},
    "grid": {"n_k": 96, "n_theta": 48, "n_phi": 32},
    "tasks": [{"op": "decompose", "params": {"l_max": 12}}]
  })";
  const auto result = io::run_pipeline(parse_document(text));
  REQUIRE(result.sidecars.size() == 1);
  CHECK(result.sidecars[0].suffix == ".decomposition.csv");
  CHECK(result.sidecars[0].content.rfind("l,j,k_r", 0) == 0);
  const auto& blk = result.report["tasks"][0]["result"];
  CHECK(blk["gamma"].get<double>() > 1.0);
  CHECK(blk["truncation_residual"].get<double>() < 1e-4);
}

TEST_CASE("oracle task reports the biphoton estimate") {
  const char* text = R"({
    "units": "si",
    "k_ref": 1.0,
    "state": {"type": "biphoton", "pump_waist": 1e-3, "crystal_length": 2e-3,
              "pump_wavelength": 4.05e-7, "refractive_index": 1.66,
              "transverse_samples": 32, "inner_samples": 16},
    "tasks": [{"op": "oracle"}]
  })";
  const auto rep = io::run_pipeline(parse_document(text)).report;
  const auto& blk = rep["tasks"][0]["result"];
  CHECK(blk["in_regime"].get<bool>());
  CHECK(blk["mass_estimate"]["value"].get<double>() >
        blk["mass_floor"]["value"].get<double>());
}

TEST_CASE("raster export carries a 64-byte header and f64 payload") {
  // tiny synthetic record
  IntensityRecord rec;
  rec.grid = CartesianKGrid::make(4, 1.0);
  rec.z = 0.0;
  rec.times = {0.0, 1.0};
  rec.p.assign(2 * 4 * 4, 0.5);
  const std::string blob = io::intensity_record_to_raster(rec);
  REQUIRE(blob.size() == 64 + rec.p.size() * 8);
  CHECK(blob[63] == '\n');
  const std::string header = blob.substr(0, 63);
  const auto hdr = nlohmann::json::parse(header);
  CHECK(hdr["shape"][0].get<int>() == 2);
  CHECK(hdr["shape"][1].get<int>() == 4);
  double first = 0.0;
  std::memcpy(&first, blob.data() + 64, 8);
  CHECK(first == 0.5);
}

TEST_CASE("csv export is well-formed") {
  IntensityRecord rec;
  rec.grid = CartesianKGrid::make(4, 1.0);
  rec.z = 0.0;
  rec.times = {0.0};
  rec.p.assign(16, 1.0 / 16.0);
  const std::string csv = io::intensity_record_to_csv(rec);
  CHECK(csv.rfind("x,y,t,p", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
}
