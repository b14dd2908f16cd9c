#include "varbh/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "varbh/errors.hpp"

namespace varbh {

Schedule constant_schedule(double g) {
  return [g](double) { return g; };
}

Schedule linear_schedule(double g_ini, double g_fin, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("ramp duration must be positive");
  return [=](double t) { return t >= tau ? g_fin : g_ini + (g_fin - g_ini) * t / tau; };
}

Schedule sinusoidal_schedule(double g0, double g_mod, double omega) {
  return [=](double t) { return g0 + g_mod * std::sin(omega * t); };
}

int step_count(double duration, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw std::invalid_argument("duration must be non-negative");
  return static_cast<int>(std::ceil(duration / dt - 1e-9));
}

namespace {

using VecC = Eigen::VectorXcd;

void check_state(const ParametricHamiltonian& h, const MbhState& psi) {
  if (!psi.basis) throw std::invalid_argument("state has no basis");
  if (psi.amplitudes.size() != h.dimension) throw std::invalid_argument("state and Hamiltonian dimensions differ");
}

// y = -i (H(g) - shift) x
void generator(const ParametricHamiltonian& h, double g, double shift, const VecC& x, VecC& y) {
  h.multiply(g, x.data(), y.data());
  y = cplx(0.0, -1.0) * (y - shift * x);
}

}  // namespace

Trajectory evolve(const ParametricHamiltonian& hamiltonian, const Schedule& g, const MbhState& psi0,
                  double duration, const EvolveOptions& options) {
  check_state(hamiltonian, psi0);
  if (options.output_stride < 1) throw std::invalid_argument("output stride must be >= 1");
  if (options.snapshot_stride < 0) throw std::invalid_argument("snapshot stride must be >= 0");
  const int steps = step_count(duration, options.dt);
  const double dt = steps > 0 ? duration / steps : 0.0;
  const auto n = static_cast<Eigen::Index>(hamiltonian.dimension);

  const Eigen::Map<const VecC> initial(psi0.amplitudes.data(), n);
  const double shift = expectation(hamiltonian, g(0.0), psi0);

  VecC psi = initial;
  VecC k1(n), k2(n), k3(n), k4(n), tmp(n);

  Trajectory traj;
  traj.steps = steps;
  MbhState view{psi0.basis, {}};

  auto physical = [&](double t) -> const MbhState& {
    view.amplitudes.resize(static_cast<std::size_t>(n));
    const cplx phase = std::polar(1.0, -shift * t);
    for (Eigen::Index i = 0; i < n; ++i) view.amplitudes[i] = phase * psi(i);
    return view;
  };
  auto record = [&](int step) {
    const double t = step * dt;
    traj.times.push_back(t);
    traj.fidelity.push_back(std::abs(initial.dot(psi)));
    if (options.record_populations || options.record_energy) {
      const MbhState& s = physical(t);
      if (options.record_populations) {
        traj.site_populations.push_back(site_populations(s));
        traj.band_populations.push_back(band_populations(s));
      }
      if (options.record_energy) traj.energy.push_back(expectation(hamiltonian, g(t), s));
    }
    if (options.snapshot_stride > 0 && step % options.snapshot_stride == 0) {
      traj.snapshot_times.push_back(t);
      traj.snapshots.push_back(physical(t));
    }
  };

  record(0);
  for (int step = 1; step <= steps; ++step) {
    const double t = (step - 1) * dt;
    const double g0 = g(t);
    const double gh = g(t + 0.5 * dt);
    const double g1 = g(t + dt);
    generator(hamiltonian, g0, shift, psi, k1);
    tmp = psi + (0.5 * dt) * k1;
    generator(hamiltonian, gh, shift, tmp, k2);
    tmp = psi + (0.5 * dt) * k2;
    generator(hamiltonian, gh, shift, tmp, k3);
    tmp = psi + dt * k3;
    generator(hamiltonian, g1, shift, tmp, k4);
    psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double drift = std::abs(psi.norm() - 1.0);
    traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
    if (drift > options.norm_tolerance || !std::isfinite(drift)) {
      throw NumericalError("norm drift " + std::to_string(drift) + " at t = " + std::to_string(step * dt) +
                           " exceeds tolerance; reduce dt");
    }
    traj.min_fidelity = std::min(traj.min_fidelity, std::abs(initial.dot(psi)));
    if (step % options.output_stride == 0 || step == steps) record(step);
  }
  traj.final_state = physical(steps * dt);
  return traj;
}

double halving_infidelity(const ParametricHamiltonian& hamiltonian, const Schedule& g, const MbhState& psi0,
                          double duration, double dt) {
  EvolveOptions coarse;
  coarse.dt = dt;
  coarse.snapshot_stride = 0;
  coarse.record_populations = false;
  coarse.output_stride = std::numeric_limits<int>::max();
  EvolveOptions fine = coarse;
  fine.dt = 0.5 * dt;
  const Trajectory a = evolve(hamiltonian, g, psi0, duration, coarse);
  const Trajectory b = evolve(hamiltonian, g, psi0, duration, fine);
  return 1.0 - fidelity(a.final_state, b.final_state);
}

std::vector<double> site_populations(const MbhState& state) {
  const FockBasis& basis = *state.basis;
  std::vector<double> pop(static_cast<std::size_t>(basis.sites()), 0.0);
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const double w = std::norm(state.amplitudes[i]);
    if (w == 0.0) continue;
    for (int k = 0; k < basis.sites(); ++k) {
      int n = 0;
      for (int b = 0; b < basis.bands(); ++b) n += basis.occupation(i, k, b);
      pop[k] += w * n;
    }
  }
  return pop;
}

std::vector<double> band_populations(const MbhState& state) {
  const FockBasis& basis = *state.basis;
  std::vector<double> pop(static_cast<std::size_t>(basis.bands()), 0.0);
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const double w = std::norm(state.amplitudes[i]);
    if (w == 0.0) continue;
    for (int b = 0; b < basis.bands(); ++b) {
      int n = 0;
      for (int k = 0; k < basis.sites(); ++k) n += basis.occupation(i, k, b);
      pop[b] += w * n;
    }
  }
  return pop;
}

cplx inner_product(const MbhState& a, const MbhState& b) {
  if (!a.basis || !b.basis || !a.basis->same_shape(*b.basis) || a.amplitudes.size() != b.amplitudes.size()) {
    throw std::invalid_argument("states live in different Fock bases");
  }
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.amplitudes.size(); ++i) acc += std::conj(a.amplitudes[i]) * b.amplitudes[i];
  return acc;
}

double fidelity(const MbhState& a, const MbhState& b) { return std::abs(inner_product(a, b)); }

double expectation(const CsrMatrix<double>& hamiltonian, const MbhState& state) {
  if (state.amplitudes.size() != hamiltonian.dimension) throw std::invalid_argument("dimension mismatch");
  std::vector<cplx> y(state.amplitudes.size());
  hamiltonian.multiply(state.amplitudes.data(), y.data());
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < y.size(); ++i) acc += std::conj(state.amplitudes[i]) * y[i];
  return acc.real();
}

double expectation(const ParametricHamiltonian& hamiltonian, double g, const MbhState& state) {
  if (state.amplitudes.size() != hamiltonian.dimension) throw std::invalid_argument("dimension mismatch");
  std::vector<cplx> y(state.amplitudes.size());
  hamiltonian.multiply(g, state.amplitudes.data(), y.data());
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < y.size(); ++i) acc += std::conj(state.amplitudes[i]) * y[i];
  return acc.real();
}

}  // namespace varbh
