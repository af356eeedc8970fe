#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "phlim/restframe.hpp"

using namespace phlim;
using Catch::Approx;

namespace {

WavePacket gaussian(double k0z, double sigma, int n_k = 128, int n_theta = 64,
                    int n_phi = 32) {
  GaussianPacketSpec spec;
  spec.k0 = {0.0, 0.0, k0z};
  spec.sigma = sigma;
  const auto grid =
      SphericalKGrid::make(std::abs(k0z) + 8.0 * sigma, n_k, n_theta, n_phi);
  return make_gaussian_packet(spec, grid);
}

WavePacket isotropic(double sigma, Vec3 r0 = {}) {
  GaussianPacketSpec spec;
  spec.k0 = {0.0, 0.0, 0.0};
  spec.sigma = sigma;
  spec.r0 = r0;
  const auto grid = SphericalKGrid::make(8.0 * sigma, 96, 32, 16);
  return make_gaussian_packet(spec, grid);
}

double l2_difference(const WavePacket& a, const WavePacket& b,
                     const SphericalKGrid& grid) {
  KahanSum<double> acc;
  grid.for_each_node([&](int ir, int it, int ip, std::size_t) {
    const KVec3 k = grid.node(ir, it, ip);
    acc.add(std::norm(a.amplitude(0, k) - b.amplitude(0, k)) *
            grid.weight(ir, it, ip));
  });
  return std::sqrt(acc.value());
}

} // namespace

TEST_CASE("isotropic packet is already at rest: identity boost") {
  const auto p = isotropic(1.0);
  const auto [rest, bp] = boost_to_rest_frame(p);
  CHECK(bp.gamma == 1.0);
  CHECK(bp.beta == 0.0);
  CHECK(bp.rapidity == 0.0);
  const auto obs = observables_packet(rest);
  CHECK(obs.beta == 0.0);
}

TEST_CASE("boosted gaussian at k0/sigma = 10 meets the rest-frame contract") {
  const auto p = gaussian(10.0, 1.0);
  const auto lab = observables_packet(p);
  const auto [rest, bp] = boost_to_rest_frame(p);

  CHECK(bp.gamma == Approx(lab.energy / lab.mass).epsilon(1e-12));
  CHECK(std::abs(bp.gamma - 10.0) / 10.0 < 0.02);
  CHECK(bp.rapidity == Approx(std::atanh(lab.beta)).epsilon(1e-12));

  const auto obs = observables_packet(rest);
  CHECK(std::abs(obs.energy - lab.mass) < 1e-6 * lab.mass);
  CHECK(obs.momentum.magnitude() < 1e-6 * lab.mass);
  // mass invariance and norm preservation
  CHECK(std::abs(obs.mass - lab.mass) < 1e-6 * lab.mass);
  CHECK(std::abs(rest.norm() - 1.0) < 1e-8);
}

TEST_CASE("boost by the inverse velocity returns the original amplitude") {
  const auto p = gaussian(10.0, 1.0);
  const auto lab = observables_packet(p);
  const auto [rest, bp] = boost_to_rest_frame(p);
  const auto back = lorentz_boost(rest, bp.velocity() * (-1.0), p.spherical_grid());
  const double err = l2_difference(p, back, *p.spherical_grid());
  CHECK(err < 1e-6);
  const auto obs = observables_packet(back);
  CHECK(obs.beta == Approx(lab.beta).epsilon(1e-10));
}

TEST_CASE("plane-wave-like packets are rejected") {
  // all amplitude on a single quadrature node: a plane-wave surrogate whose
  // mass sits below the floor
  const auto grid = SphericalKGrid::make(6.0, 32, 16, 8);
  std::vector<std::complex<double>> field(grid->size(), {0.0, 0.0});
  field[grid->index(0, 8, 0)] = 1.0;
  auto p = normalize(WavePacket::sampled(grid, {std::move(field)}, 1));
  const auto obs = observables_packet(p);
  CHECK(obs.mass <= 1e-8);
  CHECK_THROWS_AS(boost_to_rest_frame(p), DegenerateStateError);
}

TEST_CASE("sampled amplitudes boost through interpolation") {
  const auto p = gaussian(5.0, 1.0, 96, 48, 24);
  const auto grid = p.spherical_grid();
  const auto sampled =
      WavePacket::sampled(grid, {p.sample_on(*grid, 0)}, p.photons());
  REQUIRE(std::abs(sampled.norm() - 1.0) < 1e-10);
  const auto [rest_exact, bp] = boost_to_rest_frame(p);
  const auto rest_interp = lorentz_boost(sampled, bp.velocity(),
                                         rest_exact.spherical_grid());
  const double err =
      l2_difference(rest_exact, rest_interp, *rest_exact.spherical_grid());
  CHECK(err < 5e-3);
  const auto obs = observables_packet(normalize(rest_interp));
  CHECK(obs.momentum.magnitude() < 1e-3 * obs.energy);
}

TEST_CASE("decompose requires the rest frame") {
  const auto p = gaussian(10.0, 1.0);
  CHECK_THROWS_AS(decompose(p, 8), ContractError);
}

TEST_CASE("isotropic packet occupies only the (0,0) channel") {
  const auto p = isotropic(1.0);
  const auto d = decompose(p, 6);
  CHECK(d.residual < 1e-12);
  for (int l = 0; l <= 6; ++l)
    for (int j = -l; j <= l; ++j) {
      if (l == 0) continue;
      for (const auto& b : d.beta(l, j)) CHECK(std::abs(b) < 1e-12);
    }
  // beta_00(k) = sqrt(4 pi) psi(k)
  const auto& b00 = d.beta(0, 0);
  const auto& grid = *d.grid;
  for (int ir = 0; ir < grid.n_k(); ++ir) {
    const KVec3 k{0.0, 0.0, grid.radial_node(ir)};
    CHECK(std::abs(b00[ir] - std::sqrt(4.0 * M_PI) * p.amplitude(0, k)) < 1e-12);
  }
}

TEST_CASE("single-channel field decomposes into that channel only") {
  const auto grid = SphericalKGrid::make(6.0, 48, 24, 24);
  auto fn = [](const KVec3& k) {
    const double kr = k.magnitude();
    if (kr == 0.0) return std::complex<double>{};
    const double theta = std::acos(std::clamp(k.kz / kr, -1.0, 1.0));
    const double phi = std::atan2(k.ky, k.kx);
    const double radial = std::exp(-(kr - 2.0) * (kr - 2.0));
    return radial * spherical_harmonic(1, 0, theta, phi);
  };
  auto p = normalize(WavePacket::closed_form({fn}, 1, grid));
  const auto d = decompose(p, 5);
  CHECK(d.residual < 1e-10);
  for (int l = 0; l <= 5; ++l)
    for (int j = -l; j <= l; ++j) {
      if (l == 1 && j == 0) continue;
      for (const auto& b : d.beta(l, j)) CHECK(std::abs(b) < 1e-12);
    }
}

TEST_CASE("reconstruction round-trips band-limited and smooth states") {
  SECTION("isotropic packet reconstructs to machine precision") {
    const auto p = isotropic(1.0);
    const auto d = decompose(p, 4);
    const auto q = reconstruct(d);
    const double err = l2_difference(p, q, *d.grid);
    CHECK(err < 1e-12);
  }
  SECTION("boosted gaussian at k0/sigma = 2, l_max = 16, residual below 1e-6") {
    const auto p = gaussian(2.0, 1.0, 96, 64, 48);
    const auto [rest, bp] = boost_to_rest_frame(p);
    const auto d = decompose(rest, 16);
    // frozen oracle: truncated mass 1.6e-7 at l_max = 16 for this packet
    CHECK(d.residual < 1e-6);
    CHECK(d.residual > 1e-9);
    const auto q = reconstruct(d);
    const double err = l2_difference(rest, q, *d.grid);
    CHECK(err * err < 1e-6 + 1e-8);
    CHECK_FALSE(d.truncation_warning);
  }
  SECTION("zero coefficients give the zero field") {
    const auto p = isotropic(1.0);
    auto d = decompose(p, 2);
    for (auto& ch : d.coeffs) std::fill(ch.begin(), ch.end(), std::complex<double>{});
    const auto q = reconstruct(d);
    for (const auto& v : q.sample_on(*d.grid, 0)) CHECK(std::abs(v) == 0.0);
  }
}

TEST_CASE("truncation warning fires when l_max is too small") {
  const auto p = gaussian(10.0, 1.0, 96, 64, 16);
  const auto [rest, bp] = boost_to_rest_frame(p);
  const auto d = decompose(rest, 4);
  CHECK(d.truncation_warning);
  CHECK(d.residual > 1e-3);
}

TEST_CASE("mode scalar product equals the direct overlap") {
  // two rest-frame gaussians with displacement phases populate many channels
  const auto grid = SphericalKGrid::make(9.6, 96, 48, 48);
  GaussianPacketSpec sa, sb;
  sa.sigma = 1.0;
  sa.r0 = {0.0, 0.0, 0.3};
  sb.sigma = 1.2;
  sb.r0 = {0.1, 0.0, -0.2};
  const auto pa = make_gaussian_packet(sa, grid);
  const auto pb = make_gaussian_packet(sb, grid);
  const auto da = decompose(pa, 16);
  const auto db = decompose(pb, 16);
  CHECK(da.residual < 1e-8);
  CHECK(db.residual < 1e-8);
  const auto direct = packet_overlap(pa, pb);
  const auto via_modes = scalar_product_modes(da, db);
  CHECK(std::abs(via_modes - direct) < 1e-8);
  // self products recover the norms within truncation
  CHECK(std::abs(scalar_product_modes(da, da) - 1.0) < 1e-7);
}

TEST_CASE("disjoint channels are orthogonal") {
  const auto grid = SphericalKGrid::make(6.0, 48, 24, 24);
  auto channel_state = [&](int l, int j) {
    auto fn = [l, j](const KVec3& k) {
      const double kr = k.magnitude();
      if (kr == 0.0) return std::complex<double>{};
      const double theta = std::acos(std::clamp(k.kz / kr, -1.0, 1.0));
      const double phi = std::atan2(k.ky, k.kx);
      return std::exp(-(kr - 2.0) * (kr - 2.0)) * spherical_harmonic(l, j, theta, phi);
    };
    return normalize(WavePacket::closed_form({fn}, 1, grid));
  };
  const auto d1 = decompose(channel_state(2, 1), 4);
  const auto d2 = decompose(channel_state(3, -2), 4);
  CHECK(std::abs(scalar_product_modes(d1, d2)) < 1e-12);
}

TEST_CASE("mode-space energy matches quadrature energy") {
  SECTION("rest-frame gaussian") {
    const auto p = isotropic(1.0);
    const auto obs = observables_packet(p);
    const auto d = decompose(p, 4);
    CHECK(energy_in_modes(d) == Approx(obs.energy).epsilon(1e-6));
  }
  SECTION("fixed-radial-shell state has energy k_m exactly") {
    const auto p = isotropic(1.0);
    auto d = decompose(p, 2);
    const int node = d.grid->n_k() / 2;
    const double k_m = d.grid->radial_node(node);
    for (auto& ch : d.coeffs) std::fill(ch.begin(), ch.end(), std::complex<double>{});
    // normalized single-node shell in the (0,0) channel
    const double w = d.grid->radial_weight(node) * k_m * k_m;
    d.coeffs[0][node] = 1.0 / std::sqrt(w);
    d.photons = 1;
    CHECK(energy_in_modes(d) == Approx(k_m).epsilon(1e-14));
  }
  SECTION("zero state has zero energy") {
    const auto p = isotropic(1.0);
    auto d = decompose(p, 2);
    for (auto& ch : d.coeffs) std::fill(ch.begin(), ch.end(), std::complex<double>{});
    CHECK(energy_in_modes(d) == 0.0);
  }
}

TEST_CASE("scalar product rejects mismatched decompositions") {
  const auto pa = isotropic(1.0);
  const auto da = decompose(pa, 4);
  const auto db = decompose(pa, 6);
  CHECK_THROWS_AS(scalar_product_modes(da, db), ArgumentError);
}

TEST_CASE("decompose rejects l_max beyond the capability cap") {
  const auto p = isotropic(1.0);
  CHECK_THROWS_AS(decompose(p, 33), CapabilityError);
}
