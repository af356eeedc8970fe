#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "phlim/observables.hpp"
#include "phlim/states.hpp"

using namespace phlim;
using Catch::Approx;

namespace {

WavePacket gaussian10(std::shared_ptr<const SphericalKGrid>* grid_out = nullptr) {
  GaussianPacketSpec spec;
  spec.k0 = {0.0, 0.0, 10.0};
  spec.sigma = 1.0;
  auto grid = default_gaussian_grid(spec);
  if (grid_out) *grid_out = grid;
  return make_gaussian_packet(spec, grid);
}

} // namespace

TEST_CASE("gaussian packet is normalized on the default grid") {
  const auto p = gaussian10();
  CHECK(std::abs(p.norm() - 1.0) < 1e-10);
}

TEST_CASE("displacement phase leaves |psi|^2 untouched") {
  GaussianPacketSpec a, b;
  a.k0 = b.k0 = {0.0, 0.0, 10.0};
  a.sigma = b.sigma = 1.0;
  b.r0 = {0.4, -1.2, 2.5};
  auto grid = default_gaussian_grid(a);
  const auto pa = make_gaussian_packet(a, grid);
  const auto pb = make_gaussian_packet(b, grid);
  const auto da = marginal_density(pa);
  const auto db = marginal_density(pb);
  double worst = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i)
    worst = std::max(worst, std::abs(da[i] - db[i]));
  CHECK(worst < 1e-14);
}

TEST_CASE("gaussian mean momentum is the carrier") {
  std::shared_ptr<const SphericalKGrid> grid;
  const auto p = gaussian10(&grid);
  const auto obs = observables_packet(p);
  CHECK(obs.momentum.kx == Approx(0.0).margin(1e-10));
  CHECK(obs.momentum.ky == Approx(0.0).margin(1e-10));
  CHECK(obs.momentum.kz == Approx(10.0).epsilon(1e-8));
}

TEST_CASE("undersized grid raises a coverage error") {
  GaussianPacketSpec spec;
  spec.k0 = {0.0, 0.0, 10.0};
  spec.sigma = 1.0;
  const auto small = SphericalKGrid::make(12.0, 64, 32, 32);
  CHECK_THROWS_AS(make_gaussian_packet(spec, small), CoverageError);
}

TEST_CASE("normalize is idempotent and scaling-safe") {
  const auto p = gaussian10();
  const auto p1 = normalize(p);
  CHECK(std::abs(p1.norm() - 1.0) < 1e-14);
  CHECK(p1.scale() == Approx(p.scale()).epsilon(1e-12));

  WavePacket scaled = p;
  scaled.rescale(3.0);
  CHECK(scaled.norm() == Approx(9.0 * p.norm()).epsilon(1e-12));
  const auto back = normalize(scaled);
  const auto obs_a = observables_packet(p);
  const auto obs_b = observables_packet(back);
  CHECK(obs_a.energy == Approx(obs_b.energy).epsilon(1e-13));
  CHECK(obs_a.mass == Approx(obs_b.mass).epsilon(1e-12));
}

TEST_CASE("normalize rejects the zero field") {
  const auto grid = SphericalKGrid::make(2.0, 8, 8, 8);
  auto zero = WavePacket::closed_form(
      {[](const KVec3&) { return std::complex<double>{0.0, 0.0}; }}, 1, grid);
  CHECK_THROWS_AS(normalize(zero), DegenerateStateError);
}

TEST_CASE("superpose of a packet with itself") {
  std::shared_ptr<const SphericalKGrid> grid;
  const auto p = gaussian10(&grid);
  SECTION("in phase reproduces the packet") {
    const auto s = superpose(p, p, 0.0);
    CHECK(std::abs(s.norm() - 1.0) < 1e-10);
    double worst = 0.0;
    grid->for_each_node([&](int ir, int it, int ip, std::size_t) {
      const KVec3 k = grid->node(ir, it, ip);
      worst = std::max(worst, std::abs(s.amplitude(0, k) - p.amplitude(0, k)));
    });
    CHECK(worst < 1e-10);
  }
  SECTION("opposite phase cancels") {
    CHECK_THROWS_AS(superpose(p, p, M_PI), DegenerateStateError);
  }
}

TEST_CASE("two-lobe superposition has zero mean momentum") {
  GaussianPacketSpec up, down;
  up.k0 = {0.0, 0.0, 10.0};
  down.k0 = {0.0, 0.0, -10.0};
  up.sigma = down.sigma = 1.0;
  const auto grid = SphericalKGrid::make(18.0, 128, 64, 16);
  const auto s = superpose(make_gaussian_packet(up, grid),
                           make_gaussian_packet(down, grid), 0.0);
  const auto obs = observables_packet(s);
  CHECK(obs.momentum.magnitude() < 1e-10);
  CHECK(obs.beta == 0.0);
}

TEST_CASE("superposition norm matches the overlap formula") {
  GaussianPacketSpec a, b;
  a.k0 = {0.0, 0.0, 10.0};
  b.k0 = {0.3, 0.0, 9.0};
  a.sigma = b.sigma = 1.0;
  const auto grid = SphericalKGrid::make(18.5, 128, 64, 32);
  const auto pa = make_gaussian_packet(a, grid);
  const auto pb = make_gaussian_packet(b, grid);
  const auto ov = packet_overlap(pa, pb);
  for (double delta : {0.0, 0.7, M_PI / 2, 2.9}) {
    // norm^2 of the raw sum psi_a + e^{i delta} psi_b
    const std::complex<double> ph{std::cos(delta), std::sin(delta)};
    KahanSum<double> norm2;
    const auto fa = pa.sample_on(*grid, 0);
    const auto fb = pb.sample_on(*grid, 0);
    grid->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
      norm2.add(std::norm(fa[idx] + ph * fb[idx]) * grid->weight(ir, it, ip));
    });
    const double expect = 2.0 + 2.0 * std::real(ph * ov);
    CHECK(norm2.value() == Approx(expect).margin(1e-10));
  }
}

TEST_CASE("superpose rejects mismatched inputs") {
  GaussianPacketSpec spec;
  spec.k0 = {0.0, 0.0, 10.0};
  spec.sigma = 1.0;
  const auto g1 = SphericalKGrid::make(18.0, 64, 64, 16);
  const auto g2 = SphericalKGrid::make(18.0, 64, 64, 8);
  const auto p1 = make_gaussian_packet(spec, g1);
  const auto p2 = make_gaussian_packet(spec, g2);
  CHECK_THROWS_AS(superpose(p1, p2, 0.0), ArgumentError);
  GaussianPacketSpec two = spec;
  two.photons = 2;
  const auto p3 = make_gaussian_packet(two, g1);
  CHECK_THROWS_AS(superpose(p1, p3, 0.0), ArgumentError);
}

TEST_CASE("marginal density integrates to one and ignores global phase") {
  std::shared_ptr<const SphericalKGrid> grid;
  const auto p = gaussian10(&grid);
  const auto d = marginal_density(p);
  KahanSum<double> acc;
  grid->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
    acc.add(d[idx] * grid->weight(ir, it, ip));
  });
  CHECK(acc.value() == Approx(1.0).margin(1e-10));

  // a global phase never shows up in the density
  const auto g = grid;
  auto fn = [p](const KVec3& k) {
    return p.amplitude(0, k) * std::complex<double>(std::cos(1.1), std::sin(1.1));
  };
  auto q = WavePacket::closed_form({fn}, 1, g);
  const auto dq = marginal_density(q);
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    worst = std::max(worst, std::abs(d[i] - dq[i]));
  CHECK(worst < 1e-14);
}

TEST_CASE("two equal-weight polarizations of the same shape match one") {
  GaussianPacketSpec spec;
  spec.k0 = {0.0, 0.0, 10.0};
  spec.sigma = 1.0;
  auto grid = default_gaussian_grid(spec);
  const auto one = make_gaussian_packet(spec, grid);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  auto half = [one, inv_sqrt2](const KVec3& k) {
    return inv_sqrt2 * one.amplitude(0, k);
  };
  const auto two = WavePacket::closed_form({half, half}, 1, grid);
  REQUIRE(std::abs(two.norm() - 1.0) < 1e-10);
  const auto d1 = marginal_density(one);
  const auto d2 = marginal_density(two);
  double worst = 0.0;
  for (std::size_t i = 0; i < d1.size(); ++i)
    worst = std::max(worst, std::abs(d1[i] - d2[i]));
  CHECK(worst < 1e-14);
}

TEST_CASE("marginal density demands a normalized packet") {
  auto p = gaussian10();
  p.rescale(2.0);
  CHECK_THROWS_AS(marginal_density(p), ContractError);
}

TEST_CASE("biphoton marginal is normalized and in regime at the reference point") {
  BiphotonSpec spec;
  spec.pump_waist = 1e-3;
  spec.crystal_length = 2e-3;
  spec.pump_wavelength = 405e-9;
  spec.refractive_index = 1.66;
  spec.transverse_samples = 48;
  spec.inner_samples = 32;
  REQUIRE(spec.in_regime());
  const auto p = make_biphoton(spec);
  CHECK(p.photons() == 2);
  CHECK(std::abs(p.norm() - 1.0) < 1e-8);
  CHECK(p.is_shell());
}

TEST_CASE("biphoton validation errors") {
  BiphotonSpec spec;
  spec.pump_waist = 1e-3;
  spec.crystal_length = 2e-3;
  spec.pump_wavelength = 405e-9;
  spec.refractive_index = 1.66;
  SECTION("bound below the pump width is a coverage error") {
    spec.transverse_bound = 1.0; // << 8 / w_p
    CHECK_THROWS_AS(make_biphoton(spec), CoverageError);
  }
  SECTION("non-positive parameters are rejected") {
    spec.pump_waist = 0.0;
    CHECK_THROWS_AS(make_biphoton(spec), ArgumentError);
  }
}

TEST_CASE("discrete state validation") {
  DiscreteModeState st;
  st.terms = {{{0, 0, 1}, 0, 1}, {{0, 1, 0}, 0, 1}};
  st.weights = {0.5, 0.5};
  CHECK_NOTHROW(st.validate());
  st.weights = {0.6, 0.6};
  CHECK_THROWS_AS(st.validate(), ArgumentError);
  st.weights = {0.5, 0.5};
  st.terms[0].occupation = 0;
  CHECK_THROWS_AS(st.validate(), ArgumentError);
}
