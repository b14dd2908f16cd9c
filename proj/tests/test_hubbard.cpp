#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "varbh/hubbard.hpp"
#include "varbh/lattice.hpp"

using namespace varbh;

namespace {

const BHParams& params_s10() {
  static const BHParams p = compute_bh_params({10.0, 4, 16}, 5, 1.0);
  return p;
}

}  // namespace

TEST_CASE("tunnelling: quasimomentum sum equals the real-space integral") {
  const BlochSpectrum s = solve_bloch({10.0, 6, 16}, 4);
  const WannierBasis w = build_wannier(s);
  for (int b = 0; b < 4; ++b) {
    CHECK(tunneling(s, b, 1) == doctest::Approx(tunneling_real_space(w, b, 1)).epsilon(1e-9).scale(1.0));
    CHECK(-tunneling(s, b, 0) == doctest::Approx(onsite_energy(s, b)).epsilon(1e-12));
  }
}

TEST_CASE("tunnelling signs alternate with the band index") {
  const BHParams& p = params_s10();
  for (int b = 0; b < 5; ++b) CHECK((b % 2 == 0 ? p.J[b] > 0.0 : p.J[b] < 0.0));
  for (int b = 1; b < 5; ++b) CHECK(std::abs(p.J[b]) > std::abs(p.J[b - 1]));
}

TEST_CASE("deep-lattice asymptotics") {
  const BHParams p = compute_bh_params({25.0, 8, 16}, 1, 1.0);
  // Mathieu asymptote J = (4/sqrt(pi)) s^(3/4) exp(-2 sqrt(s)).
  const double j_asym = 4.0 / std::sqrt(kPi) * std::pow(25.0, 0.75) * std::exp(-10.0);
  CHECK(p.J[0] == doctest::Approx(j_asym).epsilon(0.15));
  // Harmonic Gaussian of width sigma^2 = 1/(pi^2 sqrt(s)): U = (1/pi) / (sqrt(2 pi) sigma).
  const double sigma = std::sqrt(1.0 / (kPi * kPi * 5.0));
  const double u_harm = 1.0 / (kPi * std::sqrt(2.0 * kPi) * sigma);
  CHECK(p.U(0, 0, 0, 0) == doctest::Approx(u_harm).epsilon(0.15));
  CHECK(p.U(0, 0, 0, 0) < u_harm);
}

TEST_CASE("interaction tensor: parity rule and permutation symmetry") {
  const BHParams& p = params_s10();
  const int n = p.num_bands;
  double parity = 0.0;
  double perm = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          const double u = p.U(a, b, c, d);
          if ((a + b + c + d) % 2 == 1) parity = std::max(parity, std::abs(u));
          std::array<int, 4> idx{a, b, c, d};
          std::sort(idx.begin(), idx.end());
          do {
            perm = std::max(perm, std::abs(u - p.U(idx[0], idx[1], idx[2], idx[3])));
          } while (std::next_permutation(idx.begin(), idx.end()));
        }
  CHECK(parity < 1e-10);
  CHECK(perm < 1e-12);
  for (int a = 0; a < n; ++a) CHECK(p.U(a, a, a, a) > 0.0);
}

TEST_CASE("parameters are converged in the plane-wave cutoff") {
  const BHParams a = compute_bh_params({10.0, 4, 16}, 3, 1.0);
  const BHParams b = compute_bh_params({10.0, 4, 24}, 3, 1.0);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(a.J[k] - b.J[k]) < 1e-8);
    CHECK(std::abs(a.E[k] - b.E[k]) < 1e-8);
  }
  for (std::size_t k = 0; k < a.U.data().size(); ++k) CHECK(std::abs(a.U.data()[k] - b.U.data()[k]) < 1e-8);
}

TEST_CASE("truncation and coupling") {
  const BHParams& p = params_s10();
  const BHParams t = p.truncated(3).with_coupling(2.5);
  CHECK(t.num_bands == 3);
  CHECK(t.g == 2.5);
  CHECK(t.J.size() == 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) CHECK(t.U(a, b, c, d) == p.U(a, b, c, d));
  CHECK_THROWS_AS((void)p.truncated(6), std::invalid_argument);
  CHECK_THROWS_AS((void)p.truncated(0), std::invalid_argument);
}

TEST_CASE("effective coupling conversion round-trips and scales linearly") {
  const UnitContext rb{1064e-9, 1.443e-25};
  const double a_s = 5.3e-9;
  const double omega = 2.0 * kPi * 30e3;
  const double g = effective_g(a_s, omega, rb);
  CHECK(g > 0.0);
  CHECK(scattering_length_from_g(g, omega, rb) == doctest::Approx(a_s).epsilon(1e-14));
  CHECK(effective_g(2.0 * a_s, omega, rb) == doctest::Approx(2.0 * g).epsilon(1e-14));
  CHECK_THROWS_AS(effective_g(a_s, omega, UnitContext{}), std::invalid_argument);
}

TEST_CASE("interaction tensor rejects bad quadrature settings") {
  const WannierBasis w = build_wannier(solve_bloch({10.0, 4, 16}, 2));
  CHECK_THROWS_AS(interaction_tensor(w, 3), std::invalid_argument);
  CHECK_THROWS_AS(interaction_tensor(w, 2, 30), std::invalid_argument);
}
