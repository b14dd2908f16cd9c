#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "varbh/eigensolver.hpp"
#include "varbh/errors.hpp"
#include "varbh/hubbard.hpp"
#include "varbh/propagation.hpp"

using namespace varbh;

namespace {

const BHParams& params() {
  static const BHParams p = compute_bh_params({10.0, 4, 16}, 3, 1.0, 1024);
  return p;
}

MbhState fock_state(std::shared_ptr<const FockBasis> basis, std::vector<std::uint8_t> occ) {
  return MbhState::fock(std::move(basis), occ);
}

}  // namespace

TEST_CASE("RK4 matches the exact exponential propagator (1 site, 2 particles, 3 bands)") {
  auto basis = std::make_shared<const FockBasis>(1, 3, 2);
  const BHParams p = params().truncated(3).with_coupling(1.3);
  const auto parts = build_mbh_parts(p, *basis, false);
  const Eigen::MatrixXd h = parts.evaluate(p.g).to_dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);

  // Superposition of band-1 and band-3 pairs so that the dynamics is non-trivial.
  MbhState psi0 = fock_state(basis, {2, 0, 0});
  psi0.amplitudes[basis->index(std::vector<std::uint8_t>{1, 0, 1})] = 1.0;
  for (auto& a : psi0.amplitudes) a /= std::sqrt(2.0);

  const double T = 5.0;
  EvolveOptions o;
  o.dt = 1e-3;
  o.snapshot_stride = 0;
  o.record_populations = false;
  const Trajectory traj = evolve(parts, constant_schedule(p.g), psi0, T, o);

  const Eigen::VectorXcd x0 = Eigen::Map<const Eigen::VectorXcd>(psi0.amplitudes.data(), basis->dimension());
  const Eigen::VectorXcd phases = (cplx(0.0, -T) * eig.eigenvalues().cast<cplx>()).array().exp();
  const Eigen::VectorXcd exact =
      eig.eigenvectors().cast<cplx>() * phases.asDiagonal() * (eig.eigenvectors().transpose().cast<cplx>() * x0);
  double err = 0.0;
  for (Eigen::Index i = 0; i < exact.size(); ++i) err = std::max(err, std::abs(exact(i) - traj.final_state.amplitudes[i]));
  CHECK(err < 1e-8);
  CHECK(traj.max_norm_drift < 1e-10);
}

TEST_CASE("static Hamiltonian: norm and energy are conserved") {
  auto basis = std::make_shared<const FockBasis>(4, 2, 4);
  const BHParams p = params().truncated(2);
  const auto parts = build_mbh_parts(p, *basis, true);
  EvolveOptions o;
  o.output_stride = 50;
  o.snapshot_stride = 0;
  o.record_energy = true;
  const Trajectory t = evolve(parts, constant_schedule(2.0), fock_state(basis, {2, 0, 1, 0, 1, 0, 0, 0}), 3.0, o);
  CHECK(t.max_norm_drift < 1e-6);
  double drift = 0.0;
  for (double e : t.energy) drift = std::max(drift, std::abs(e - t.energy.front()) / std::abs(t.energy.front()));
  CHECK(drift < 1e-8);
  for (const auto& pops : t.site_populations) {
    double n = 0.0;
    for (double v : pops) n += v;
    CHECK(n == doctest::Approx(4.0).epsilon(1e-10));
  }
}

TEST_CASE("step halving changes the final state by less than 1e-7") {
  auto basis = std::make_shared<const FockBasis>(1, 3, 2);
  const auto parts = build_mbh_parts(params().truncated(3), *basis, false);
  const double change = halving_infidelity(parts, sinusoidal_schedule(1.0, 0.1, 15.9), fock_state(basis, {2, 0, 0}),
                                           20.0, 1e-3);
  CHECK(change < 1e-7);
}

TEST_CASE("mirror-symmetric initial state keeps mirror-symmetric populations") {
  auto basis = std::make_shared<const FockBasis>(4, 2, 6);
  const auto parts = build_mbh_parts(params().truncated(2), *basis, true);
  EvolveOptions o;
  o.output_stride = 100;
  o.snapshot_stride = 0;
  const Trajectory t = evolve(parts, constant_schedule(0.2), fock_state(basis, {2, 0, 2, 0, 1, 0, 1, 0}), 2.0, o);
  for (const auto& pops : t.site_populations) {
    CHECK(std::abs(pops[0] - pops[1]) < 1e-6);
    CHECK(std::abs(pops[2] - pops[3]) < 1e-6);
  }
}

TEST_CASE("schedules") {
  const Schedule lin = linear_schedule(0.2, 1.0, 10.0);
  CHECK(lin(0.0) == 0.2);
  CHECK(lin(5.0) == doctest::Approx(0.6));
  CHECK(lin(10.0) == 1.0);
  CHECK(lin(20.0) == 1.0);
  const Schedule sine = sinusoidal_schedule(1.0, 0.1, 2.0);
  CHECK(sine(kPi / 4.0) == doctest::Approx(1.1));
  CHECK(constant_schedule(3.0)(7.0) == 3.0);
  CHECK_THROWS_AS(linear_schedule(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("step counts cover the duration exactly") {
  CHECK(step_count(1.0, 1e-3) == 1000);
  CHECK(step_count(1.0, 0.3) == 4);
  CHECK(step_count(0.0, 0.1) == 0);
  CHECK_THROWS_AS(step_count(1.0, -1e-3), std::invalid_argument);
}

TEST_CASE("fidelity is recorded and the ground state is stationary") {
  auto basis = std::make_shared<const FockBasis>(3, 2, 3);
  const BHParams p = params().truncated(2).with_coupling(1.0);
  const auto parts = build_mbh_parts(p, *basis, true);
  const GroundState gs = ground_state(build_mbh_hamiltonian(p, *basis, true), basis);
  EvolveOptions o;
  o.snapshot_stride = 0;
  const Trajectory t = evolve(parts, constant_schedule(1.0), gs.state, 1.0, o);
  CHECK(t.min_fidelity > 1.0 - 1e-9);
  CHECK(t.fidelity.size() == t.times.size());
  CHECK(expectation(parts, 1.0, t.final_state) == doctest::Approx(gs.energy).epsilon(1e-10));
}

TEST_CASE("unstable time steps are reported as numerical failures") {
  auto basis = std::make_shared<const FockBasis>(1, 3, 2);
  const auto parts = build_mbh_parts(params().truncated(3), *basis, false);
  EvolveOptions o;
  o.dt = 0.5;
  o.snapshot_stride = 0;
  CHECK_THROWS_AS(evolve(parts, constant_schedule(1.0), fock_state(basis, {1, 1, 0}), 10.0, o), NumericalError);
}

TEST_CASE("inner products require the same basis") {
  auto a = std::make_shared<const FockBasis>(1, 2, 2);
  auto b = std::make_shared<const FockBasis>(1, 3, 2);
  CHECK_THROWS_AS(inner_product(fock_state(a, {2, 0}), fock_state(b, {2, 0, 0})), std::invalid_argument);
  CHECK(fidelity(fock_state(a, {2, 0}), fock_state(a, {1, 1})) == 0.0);
}
