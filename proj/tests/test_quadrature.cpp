#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "phlim/cartesian_grid.hpp"
#include "phlim/quadrature.hpp"
#include "phlim/spherical_grid.hpp"

using namespace phlim;
using Catch::Approx;

TEST_CASE("gauss_legendre matches tabulated low orders") {
  const auto r2 = gauss_legendre(2);
  CHECK(r2.nodes[1] == Approx(0.5773502691896258).epsilon(1e-14));
  CHECK(r2.weights[0] == Approx(1.0).epsilon(1e-14));

  const auto r5 = gauss_legendre(5);
  CHECK(r5.nodes[0] == Approx(-0.906179845938664).epsilon(1e-13));
  CHECK(r5.nodes[2] == Approx(0.0).margin(1e-15));
  CHECK(r5.weights[2] == Approx(128.0 / 225.0).epsilon(1e-14));
}

TEST_CASE("gauss_legendre integrates polynomials exactly") {
  // order n is exact through degree 2n-1
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  for (int n : {4, 9, 16}) {
    const auto rule = gauss_legendre(n);
    std::vector<double> c(2 * n);
    for (auto& x : c) x = coeff(rng);
    KahanSum<double> acc;
    for (int i = 0; i < n; ++i) {
      double xp = 1.0, val = 0.0;
      for (double ck : c) {
        val += ck * xp;
        xp *= rule.nodes[i];
      }
      acc.add(rule.weights[i] * val);
    }
    double exact = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k)
      if (k % 2 == 0) exact += 2.0 * c[k] / (k + 1);
    CHECK(acc.value() == Approx(exact).margin(1e-12));
  }
}

TEST_CASE("gauss_legendre weights positive and nodes sorted") {
  for (int n : {1, 2, 7, 33, 128}) {
    const auto rule = gauss_legendre(n);
    for (int i = 0; i < n; ++i) {
      CHECK(rule.weights[i] > 0.0);
      if (i > 0) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
    }
  }
}

TEST_CASE("mapped rule integrates over [a, b]") {
  const auto rule = gauss_legendre(12, 1.0, 4.0);
  KahanSum<double> acc;
  for (int i = 0; i < 12; ++i)
    acc.add(rule.weights[i] * rule.nodes[i] * rule.nodes[i]);
  CHECK(acc.value() == Approx((64.0 - 1.0) / 3.0).epsilon(1e-14));
}

TEST_CASE("kahan summation keeps catastrophic sequences accurate") {
  KahanSum<double> acc;
  acc.add(1.0);
  for (int i = 0; i < 1000000; ++i) acc.add(1e-16);
  CHECK(acc.value() == Approx(1.0 + 1e-10).epsilon(1e-12));
}

TEST_CASE("adaptive simpson agrees with closed forms") {
  const double v = adaptive_simpson([](double x) { return std::exp(-x * x); },
                                    0.0, 6.0, 1e-14);
  CHECK(v == Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-12));
}

TEST_CASE("spherical grid integrates the unit ball volume to 1e-12") {
  for (double k_max : {1.0, 3.7, 18.0}) {
    const auto grid = SphericalKGrid::make(k_max, 32, 16, 16);
    std::vector<std::complex<double>> one(grid->size(), {1.0, 0.0});
    const auto v = integrate_spherical(one, *grid);
    const double exact = 4.0 / 3.0 * M_PI * k_max * k_max * k_max;
    CHECK(std::abs(v.real() - exact) / exact < 1e-12);
    CHECK(std::abs(v.imag()) < 1e-12 * exact);
  }
}

TEST_CASE("odd angular integrand cancels to 1e-14") {
  const auto grid = SphericalKGrid::make(2.5, 24, 20, 20);
  std::vector<std::complex<double>> f(grid->size());
  grid->for_each_node([&](int ir, int it, int ip, std::size_t idx) {
    (void)ir;
    (void)ip;
    f[idx] = grid->cos_theta_node(it);
  });
  const auto v = integrate_spherical(f, *grid);
  CHECK(std::abs(v.real()) < 1e-14);
}

TEST_CASE("grid weights are positive everywhere") {
  const auto grid = SphericalKGrid::make(5.0, 12, 10, 8);
  grid->for_each_node([&](int ir, int it, int ip, std::size_t) {
    CHECK(grid->weight(ir, it, ip) > 0.0);
  });
}

TEST_CASE("field size mismatch raises argument error") {
  const auto grid = SphericalKGrid::make(1.0, 8, 8, 8);
  std::vector<std::complex<double>> wrong(grid->size() - 1);
  CHECK_THROWS_AS(integrate_spherical(wrong, *grid), ArgumentError);
}

TEST_CASE("shell grid rejects bounds beyond the shell radius") {
  CHECK_THROWS_AS(TransverseShellGrid::make(1.0, 0.9, 16), CoverageError);
  const auto g = TransverseShellGrid::make(10.0, 1.0, 16);
  CHECK(g->kz(0, 0) > 0.0);
  CHECK(g->kz(0, 0) < 10.0);
}

TEST_CASE("cartesian grid: power-of-two sampling and conjugate spacing") {
  CHECK_THROWS_AS(CartesianKGrid::make(100, 1.0), ArgumentError);
  CHECK_THROWS_AS(CartesianKGrid::make(64, -1.0), ArgumentError);
  const auto g = CartesianKGrid::make(64, 9.0, {0.0, 0.0, 10.0});
  CHECK(g->dk() == Approx(2.0 * 9.0 / 64).epsilon(1e-15));
  CHECK(g->dr() == Approx(2.0 * M_PI / (64 * g->dk())).epsilon(1e-15));
  CHECK(g->kz(32) == Approx(10.0).margin(1e-15));
  CHECK(g->kx(0) == Approx(-9.0).margin(1e-15));
  CHECK(g->r(32) == 0.0);
  CHECK_THROWS_AS(g->nearest_r_index(2.0 * g->box_length()), ArgumentError);
}
