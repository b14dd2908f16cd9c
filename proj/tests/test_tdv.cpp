#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "varbh/eigensolver.hpp"
#include "varbh/errors.hpp"
#include "varbh/hubbard.hpp"
#include "varbh/tdv.hpp"

using namespace varbh;

namespace {

const BHParams& params() {
  static const BHParams p = compute_bh_params({10.0, 4, 16}, 5, 1.0, 1024);
  return p;
}

Eigen::MatrixXcd random_frame(int nv, int D, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd m(nv, D);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = cplx(nd(rng), nd(rng));
  return Eigen::HouseholderQR<Eigen::MatrixXcd>(m).householderQ() * Eigen::MatrixXcd::Identity(nv, D);
}

TdvState random_state(int L, int nv, int D, int N, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  TdvState s;
  for (int k = 0; k < L; ++k) s.frames.push_back(random_frame(nv, D, rng));
  s.reduced = std::make_shared<FockBasis>(L, D, N);
  s.C.resize(static_cast<Eigen::Index>(s.reduced->dimension()));
  for (Eigen::Index i = 0; i < s.C.size(); ++i) s.C(i) = cplx(nd(rng), nd(rng));
  s.C.normalize();
  return s;
}

double mbh_energy(const TdvState& s, const BHParams& p, double g, bool periodic) {
  auto basis = std::make_shared<const FockBasis>(s.sites(), s.fixed_bands(), s.particles());
  const MbhState psi = embed_to_mbh(s, basis);
  return expectation(build_mbh_parts(p, *basis, periodic), g, psi);
}

}  // namespace

TEST_CASE("embedding energy identity on 100 random variational states") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int D = trial % 2 == 0 ? 1 : 2;
    const int L = 2 + trial % 2;
    const int nv = 3;
    const int N = 2 + trial % 3;
    const bool periodic = trial % 3 != 0;
    const BHParams p = params().truncated(nv);
    const TdvState s = random_state(L, nv, D, N, rng);
    const double g = 0.5 + 0.05 * trial;
    worst = std::max(worst, std::abs(tdv_energy(s, p, g, periodic) - mbh_energy(s, p, g, periodic)));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("embedded states are normalised and overlaps agree with the closed form") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const TdvState a = random_state(3, 4, 1, 3, rng);
    TdvState b = random_state(3, 4, 1, 3, rng);
    b.reduced = a.reduced;
    auto basis = std::make_shared<const FockBasis>(3, 4, 3);
    const MbhState ea = embed_to_mbh(a, basis);
    const MbhState eb = embed_to_mbh(b, basis);
    CHECK(ea.norm() == doctest::Approx(1.0).epsilon(1e-12));
    const cplx direct = inner_product(ea, eb);
    const cplx closed = tdv_overlap(a, b);
    CHECK(std::abs(direct - closed) < 1e-12);
  }
}

TEST_CASE("single fixed band: variational energy equals the BH energy") {
  const BHParams p = params().truncated(1);
  for (double g : {0.2, 1.0, 4.0}) {
    auto basis = std::make_shared<const FockBasis>(4, 1, 6);
    const GroundState bh = ground_state(build_mbh_hamiltonian(p.with_coupling(g), *basis, true), basis);
    const TdvGroundState tdv = tdv_ground_state(p.with_coupling(g), 4, 6, 1, true, {.starts = 2});
    CHECK(std::abs(tdv.energy - bh.energy) < 1e-9);
  }
}

TEST_CASE("frame gradient matches finite differences") {
  std::mt19937_64 rng(99);
  for (int D : {1, 2}) {
    const BHParams p = params().truncated(3);
    const TdvState s = random_state(3, 3, D, 3, rng);
    const TdvDensities rho = tdv_densities(*s.reduced, s.C);
    const double g = 2.0;
    const auto grad = frame_gradient(s, rho, p, g, true);
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<Eigen::MatrixXcd> dir;
      for (int k = 0; k < 3; ++k) dir.push_back(Eigen::MatrixXcd::Random(3, D));
      const double h = 1e-6;
      auto shifted = [&](double eps) {
        TdvState t = s;
        for (int k = 0; k < 3; ++k) t.frames[k] += eps * dir[k];
        return tdv_energy(t, p, g, true);
      };
      const double numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
      double analytic = 0.0;
      for (int k = 0; k < 3; ++k) analytic += 2.0 * grad[k].cwiseProduct(dir[k].conjugate()).sum().real();
      CHECK(numeric == doctest::Approx(analytic).epsilon(1e-6));
    }
  }
}

TEST_CASE("evolution right-hand side is the projected gradient flow") {
  std::mt19937_64 rng(5);
  const BHParams p = params().truncated(4);
  const TdvState s = random_state(3, 4, 1, 4, rng);
  const double g = 1.7;
  const TdvDerivative rhs = tdv_rhs(s, p, g, true);
  const TdvDensities rho = tdv_densities(*s.reduced, s.C);
  const auto grad = frame_gradient(s, rho, p, g, true);
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXcd d = s.frames[k].col(0);
    const Eigen::VectorXcd F = grad[k].col(0) / rho.rho1(k, k).real();
    const Eigen::VectorXcd expected = cplx(0.0, -1.0) * (F - d * d.dot(F));
    CHECK((rhs.d_dot[k] - expected).norm() < 1e-12);
  }
  const auto h = reduced_hamiltonian(s, p, true);
  Eigen::VectorXcd hc(s.C.size());
  h.multiply(g, s.C.data(), hc.data());
  CHECK((rhs.C_dot - cplx(0.0, -1.0) * hc).norm() < 1e-12);
}

TEST_CASE("single fixed band: TDV dynamics reproduces BH dynamics") {
  const BHParams p = params().truncated(1);
  const TdvState s0 = tdv_fock_state(1, {2, 2, 1, 1}, {0, 0, 0, 0});
  TdvEvolveOptions o;
  o.output_stride = 100;
  const TdvTrajectory t = evolve_tdv(s0, p, constant_schedule(1.0), 2.0, true, o);

  auto basis = std::make_shared<const FockBasis>(4, 1, 6);
  const std::uint8_t occ[4] = {2, 2, 1, 1};
  EvolveOptions mo;
  mo.output_stride = 100;
  mo.snapshot_stride = 0;
  const Trajectory m = evolve(build_mbh_parts(p, *basis, true), constant_schedule(1.0), MbhState::fock(basis, occ),
                              2.0, mo);
  REQUIRE(t.site_populations.size() == m.site_populations.size());
  for (std::size_t i = 0; i < t.site_populations.size(); ++i)
    for (int k = 0; k < 4; ++k) CHECK(std::abs(t.site_populations[i][k] - m.site_populations[i][k]) < 1e-9);
}

TEST_CASE("static coupling: energy, norm and mode orthonormality are conserved") {
  const BHParams p = params();
  const TdvState s0 = tdv_fock_state(5, {2, 2, 1, 1}, {0, 0, 0, 0});
  TdvEvolveOptions o;
  o.output_stride = 50;
  o.record_energy = true;
  const TdvTrajectory t = evolve_tdv(s0, p, constant_schedule(4.0), 2.0, true, o);
  double drift = 0.0;
  for (double e : t.energy) drift = std::max(drift, std::abs(e - t.energy.front()) / std::abs(t.energy.front()));
  CHECK(drift < 1e-8);
  CHECK(t.max_norm_drift < 1e-6);
  CHECK(t.max_frame_drift < 1e-6);
}

TEST_CASE("parity freezing: odd-parity components stay zero") {
  const BHParams p = params();
  const TdvState s0 = tdv_fock_state(5, {2, 2, 1, 1}, {0, 0, 0, 0});
  TdvEvolveOptions o;
  o.output_stride = 1000;
  const TdvTrajectory t = evolve_tdv(s0, p, constant_schedule(4.0), 3.0, true, o);
  for (int k = 0; k < 4; ++k) {
    CHECK(t.final_state.frames[k](1, 0) == cplx(0.0, 0.0));
    CHECK(t.final_state.frames[k](3, 0) == cplx(0.0, 0.0));
    CHECK(std::abs(t.final_state.frames[k](2, 0)) > 1e-6);
  }
}

TEST_CASE("an excited pair cannot move without interactions") {
  // Site 2 (index 1) holds its pair in the second band; every other site in the lowest band.
  const BHParams p = params().truncated(3);
  const TdvState s0 = tdv_fock_state(3, {2, 2, 1, 1}, {0, 1, 0, 0});
  TdvEvolveOptions o;
  o.output_stride = 100;
  const TdvTrajectory t = evolve_tdv(s0, p, constant_schedule(0.0), 5.0, true, o);
  for (const auto& pops : t.site_populations) CHECK(std::abs(pops[1] - 2.0) < 1e-6);
}

TEST_CASE("the variational ground state is stationary under the evolution") {
  const BHParams p = params().truncated(3).with_coupling(2.0);
  const TdvGroundState gs = tdv_ground_state(p, 3, 3, 1, true, {.starts = 3});
  CHECK(gs.converged);
  TdvEvolveOptions o;
  o.output_stride = 1000;
  const TdvTrajectory t = evolve_tdv(gs.state, p, constant_schedule(2.0), 1.0, true, o);
  CHECK(t.min_fidelity > 1.0 - 1e-6);
}

TEST_CASE("two variational modes never do worse than one") {
  const BHParams p = params().truncated(3).with_coupling(3.0);
  const TdvGroundState one = tdv_ground_state(p, 3, 4, 1, true, {.starts = 3});
  const TdvGroundState two = tdv_ground_state(p, 3, 4, 2, true, {.starts = 3});
  CHECK(two.energy <= one.energy + 1e-10);
  CHECK(frame_orthonormality_error(two.state) < 1e-10);
  // Variational upper bound on the multiband ground state with the same bands.
  auto basis = std::make_shared<const FockBasis>(3, 3, 4);
  const GroundState mbh = dense_ground_state(build_mbh_hamiltonian(p, *basis, true), basis);
  CHECK(two.energy >= mbh.energy - 1e-10);
}

TEST_CASE("minimisation is deterministic for a fixed seed") {
  const BHParams p = params().truncated(3).with_coupling(1.0);
  const TdvGroundState a = tdv_ground_state(p, 2, 3, 1, true, {.starts = 4, .seed = 11});
  const TdvGroundState b = tdv_ground_state(p, 2, 3, 1, true, {.starts = 4, .seed = 11});
  CHECK(a.energy == b.energy);
  CHECK(a.best_start == b.best_start);
}

TEST_CASE("pair-state overlap bound is 1/sqrt(2) at alpha = beta") {
  const OverlapBound bound = psi13_overlap_bound();
  CHECK(std::abs(bound.value - 1.0 / std::sqrt(2.0)) < 1e-8);
  CHECK(std::abs(bound.alpha - 1.0 / std::sqrt(2.0)) < 1e-5);
  CHECK(std::abs(bound.beta - 1.0 / std::sqrt(2.0)) < 1e-5);
  CHECK(psi13_overlap(1.0, 0.0) == doctest::Approx(0.0));
  CHECK(psi13_overlap(std::sqrt(0.5), std::sqrt(0.5)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("empty sites make the evolution equations singular") {
  const BHParams p = params().truncated(2);
  const TdvState s = tdv_fock_state(2, {2, 0}, {0, 0});
  CHECK_THROWS_AS(tdv_rhs(s, p, 1.0, false), NumericalError);
}

TEST_CASE("populations of Fock states") {
  const TdvState s = tdv_fock_state(3, {2, 1, 0, 3}, {0, 2, 0, 1});
  const auto sites = tdv_site_populations(s);
  const std::vector<double> want{2.0, 1.0, 0.0, 3.0};
  REQUIRE(sites.size() == want.size());
  for (std::size_t k = 0; k < want.size(); ++k) CHECK(sites[k] == doctest::Approx(want[k]).epsilon(1e-12));
  const auto bands = tdv_band_populations(s);
  CHECK(bands[0] == doctest::Approx(2.0));
  CHECK(bands[1] == doctest::Approx(3.0));
  CHECK(bands[2] == doctest::Approx(1.0));
}
