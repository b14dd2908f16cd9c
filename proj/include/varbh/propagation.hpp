#pragma once

// Real-time propagation of MBH states under H(t) = H_1 + g(t) H_U with
// fixed-step RK4, plus the observables recorded along the way.

#include <functional>
#include <vector>

#include "varbh/fock.hpp"

namespace varbh {

/// Coupling schedule g(t).
using Schedule = std::function<double(double)>;

Schedule constant_schedule(double g);
/// g_ini + (g_fin - g_ini) t / tau, held at g_fin after tau.
Schedule linear_schedule(double g_ini, double g_fin, double tau);
/// g0 + g_mod sin(omega t).
Schedule sinusoidal_schedule(double g0, double g_mod, double omega);

struct EvolveOptions {
  double dt = 1e-3;
  int output_stride = 1;      ///< observables recorded every this many steps
  int snapshot_stride = 100;  ///< states stored every this many steps; 0 disables
  double norm_tolerance = 1e-6;
  bool record_populations = true;
  bool record_energy = false;  ///< <H(g(t))> at output times (one extra product each)
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> site_populations;  ///< [output][site]
  std::vector<std::vector<double>> band_populations;  ///< [output][band]
  std::vector<double> energy;                         ///< empty unless requested
  std::vector<double> fidelity;                       ///< |<psi(0)|psi(t)>| at output times

  std::vector<double> snapshot_times;
  std::vector<MbhState> snapshots;

  MbhState final_state;
  double min_fidelity = 1.0;  ///< over every integrator step
  double max_norm_drift = 0.0;
  int steps = 0;
};

/// Number of RK4 steps of size close to `dt` covering `duration` exactly.
int step_count(double duration, double dt);

/// Integrates i d/dt psi = H(g(t)) psi over [0, duration]. The generator is
/// shifted by <psi0|H(g(0))|psi0> internally and the phase restored, so
/// returned states are those of the unshifted equation.
/// Throws NumericalError if | ||psi|| - 1 | exceeds options.norm_tolerance.
Trajectory evolve(const ParametricHamiltonian& hamiltonian, const Schedule& g, const MbhState& psi0,
                  double duration, const EvolveOptions& options = {});

/// 1 - |<psi_dt(T)|psi_{dt/2}(T)>|: the step-halving convergence measure.
double halving_infidelity(const ParametricHamiltonian& hamiltonian, const Schedule& g, const MbhState& psi0,
                          double duration, double dt);

std::vector<double> site_populations(const MbhState& state);
std::vector<double> band_populations(const MbhState& state);

/// |<a|b>|. Throws std::invalid_argument for different bases.
double fidelity(const MbhState& a, const MbhState& b);
cplx inner_product(const MbhState& a, const MbhState& b);

/// <psi|H|psi> (real part; H Hermitian).
double expectation(const CsrMatrix<double>& hamiltonian, const MbhState& state);
double expectation(const ParametricHamiltonian& hamiltonian, double g, const MbhState& state);

}  // namespace varbh
