#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "varbh/errors.hpp"
#include "varbh/hubbard.hpp"
#include "varbh/lattice.hpp"

using namespace varbh;

TEST_CASE("free particle: Bloch energies are folded plane waves") {
  LatticeSpec spec{0.0, 4, 16};
  const BlochSpectrum s = solve_bloch(spec, 3);
  for (int j = 0; j < 4; ++j) {
    const double qt = s.quasimomenta[j] / kPi;
    std::vector<double> free;
    for (int n = -3; n <= 3; ++n) free.push_back((qt + 2.0 * n) * (qt + 2.0 * n));
    std::sort(free.begin(), free.end());
    for (int b = 0; b < 3; ++b) CHECK(s.energies[b][j] == doctest::Approx(free[b]).epsilon(1e-12));
  }
}

TEST_CASE("band edges match Mathieu characteristic values") {
  // s = 10: E = a_r(q) + s/2 with q = s/4, from an independent Mathieu solver.
  LatticeSpec spec{10.0, 2, 16};
  const BlochSpectrum s = solve_bloch(spec, 4);
  REQUIRE(s.quasimomenta[0] == 0.0);
  REQUIRE(std::abs(s.quasimomenta[1]) == doctest::Approx(kPi));
  const double at_zero[] = {2.846921657958265, 8.492474366738957, 10.613041084867152, 21.19483734691593};
  const double at_edge[] = {2.9236684941712054, 7.495930746446916, 14.185709970139655, 14.61214775765854};
  for (int b = 0; b < 4; ++b) {
    CHECK(s.energies[b][0] == doctest::Approx(at_zero[b]).epsilon(1e-9));
    CHECK(s.energies[b][1] == doctest::Approx(at_edge[b]).epsilon(1e-9));
  }
}

TEST_CASE("Bloch matrix is symmetric and residuals are small") {
  const auto h = bloch_matrix(7.3, 0.4, 10);
  const int p = 21;
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) CHECK(h[r * p + c] == h[c * p + r]);
  const BlochSpectrum s = solve_bloch({7.3, 6, 16}, 5);
  CHECK(s.max_residual < 1e-10);
}

TEST_CASE("bands ascend at every quasimomentum") {
  const BlochSpectrum s = solve_bloch({4.0, 8, 16}, 5);
  for (int j = 0; j < 8; ++j)
    for (int b = 1; b < 5; ++b) CHECK(s.energies[b][j] > s.energies[b - 1][j]);
}

TEST_CASE("Wannier functions are orthonormal across bands and sites") {
  for (double depth : {3.0, 10.0, 25.0}) {
    const WannierBasis w = build_wannier(solve_bloch({depth, 5, 16}, 5));
    double worst = 0.0;
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b)
        for (int i = 0; i < 5; ++i)
          for (int j = 0; j < 5; ++j) {
            const double expected = (a == b && i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(wannier_overlap(w, a, i, b, j) - expected));
          }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("Wannier functions are real with parity (-1)^band about the site centre") {
  const WannierBasis w = build_wannier(solve_bloch({10.0, 4, 16}, 4));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  std::vector<double> xp, xm;
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng);
    xp.push_back(1.0 + x);
    xm.push_back(1.0 - x);
  }
  for (int b = 0; b < 4; ++b) {
    const auto fp = wannier_value(w, b, 1, xp);
    const auto fm = wannier_value(w, b, 1, xm);
    const double sign = b % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < fp.size(); ++i) CHECK(fp[i] == doctest::Approx(sign * fm[i]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("Wannier functions localise on their site in a deep lattice") {
  const WannierBasis w = build_wannier(solve_bloch({25.0, 8, 16}, 2));
  const auto x = ring_grid(8, 512);
  const auto weights = periodic_simpson_weights(x.size(), 8.0);
  const auto f = wannier_value(w, 0, 3, x);
  double near = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - 3.0) < 0.5) near += weights[i] * f[i] * f[i];
  }
  CHECK(near > 0.99);
}

TEST_CASE("translated Wannier functions agree with the stored site index") {
  const WannierBasis w = build_wannier(solve_bloch({10.0, 4, 16}, 2));
  const std::vector<double> x{0.1, 0.37, 0.8};
  std::vector<double> shifted;
  for (double v : x) shifted.push_back(v + 2.0);
  const auto a = wannier_value(w, 1, 0, x);
  const auto b = wannier_value(w, 1, 2, shifted);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("h applied to a Wannier function reproduces the band energy") {
  const WannierBasis w = build_wannier(solve_bloch({10.0, 4, 16}, 3));
  const auto x = ring_grid(4, 1024);
  const auto weights = periodic_simpson_weights(x.size(), 4.0);
  const BlochSpectrum s = solve_bloch({10.0, 4, 16}, 3);
  for (int b = 0; b < 3; ++b) {
    const auto f = wannier_value(w, b, 0, x);
    const auto hf = wannier_apply_h(w, b, 0, x);
    double e = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) e += weights[i] * f[i] * hf[i];
    CHECK(e == doctest::Approx(onsite_energy(s, b)).epsilon(1e-8));
  }
}

TEST_CASE("invalid lattices are rejected") {
  CHECK_THROWS_AS(solve_bloch({-1.0, 4, 16}, 2), std::invalid_argument);
  CHECK_THROWS_AS(solve_bloch({10.0, 0, 16}, 2), std::invalid_argument);
  CHECK_THROWS_AS(solve_bloch({10.0, 4, 2}, 2), std::invalid_argument);
  CHECK_THROWS_AS(solve_bloch({10.0, 4, 8}, 20), std::invalid_argument);
  CHECK_THROWS_AS(build_wannier(solve_bloch({0.05, 4, 16}, 2)), std::invalid_argument);
}

TEST_CASE("periodic Simpson weights integrate smooth periodic functions exactly") {
  const auto x = ring_grid(3, 64);
  const auto w = periodic_simpson_weights(x.size(), 3.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * std::pow(std::cos(2.0 * kPi * x[i] / 3.0), 2);
  CHECK(acc == doctest::Approx(1.5).epsilon(1e-13));
}
