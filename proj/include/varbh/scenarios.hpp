#pragma once

// End-to-end numerical experiments comparing the multiband model (MBH) with
// the variational ansatz (TDV): ground-state sweeps, Fock-state evolution,
// linear interaction quenches and interaction-modulation spectroscopy.

#include <functional>
#include <string>
#include <vector>

#include "varbh/hubbard.hpp"
#include "varbh/tdv.hpp"

namespace varbh {

/// Runs job(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any job is rethrown after all workers finish.
void parallel_for(int count, int threads, const std::function<void(int)>& job);

struct LatticeSetup {
  double depth = 10.0;
  int sites = 4;
  bool periodic = true;
  int plane_wave_cutoff = 16;
  int points_per_site = kDefaultPointsPerSite;
  /// Ring used to compute J, E, U; 0 means `sites`.
  int param_sites = 0;
};

/// Hubbard parameters for `bands` bands at unit coupling. When param_sites
/// differs from sites, the result is relabelled to `sites` sites.
BHParams lattice_parameters(const LatticeSetup& lattice, int bands);

// ---------------------------------------------------------------- gs sweep

struct GsSweepConfig {
  int particles = 6;
  std::vector<double> g{0.2, 1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<int> mbh_bands{1, 2, 3, 4, 5};
  std::vector<int> tdv_bands{5};
  std::vector<int> variational_bands{1, 2};
  TdvMinimizeOptions minimize;
  int threads = 1;
};

struct GsSweepRow {
  double g = 0.0;
  std::string method;  ///< "mbh" or "tdv"
  int bands = 0;       ///< N_M or N_V
  int variational_bands = 0;  ///< D; 0 for mbh rows
  double energy = 0.0;
  double relative = 0.0;  ///< energy - E_BH(g)
  bool converged = true;
};

/// Rows ordered by g, then MBH band counts, then TDV (N_V, D) pairs.
/// `params` must hold at least as many bands as the largest count requested.
std::vector<GsSweepRow> gs_sweep(const BHParams& params, const LatticeSetup& lattice, const GsSweepConfig& config);

// ------------------------------------------------------- Fock evolution

struct FockEvolutionConfig {
  double g = 0.2;
  std::vector<int> occupation{2, 2, 1, 1};
  std::vector<int> band{0, 0, 0, 0};  ///< 0-based band of each site's particles
  double duration = 20.0;
  double dt = 1e-3;
  int output_stride = 100;
  int mbh_bands = 3;
  int tdv_bands = 5;
};

struct FockEvolutionResult {
  std::vector<double> times;
  std::vector<std::vector<double>> mbh_sites;  ///< [output][site]
  std::vector<std::vector<double>> tdv_sites;
  std::vector<std::vector<double>> mbh_bands;  ///< [output][band]
  std::vector<std::vector<double>> tdv_bands;
  double mbh_energy_drift = 0.0;  ///< max relative |<H>(t) - <H>(0)|
  double tdv_energy_drift = 0.0;
  double mbh_norm_drift = 0.0;
  double tdv_frame_drift = 0.0;
};

FockEvolutionResult fock_evolution(const BHParams& params, const LatticeSetup& lattice,
                                   const FockEvolutionConfig& config);

// --------------------------------------------------------- linear quench

struct QuenchConfig {
  int particles = 6;
  double g_ini = 0.2;
  double g_fin = 1.0;
  std::vector<double> tau{1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0};
  double dt = 1e-3;
  int mbh_bands = 3;
  int tdv_bands = 5;
  TdvMinimizeOptions minimize;
  int threads = 1;
};

struct QuenchRow {
  double tau = 0.0;
  double mbh = 0.0;  ///< <H(g_fin)> at t = tau
  double tdv = 0.0;
};

struct QuenchResult {
  std::vector<QuenchRow> rows;
  double mbh_ground = 0.0;  ///< MBH ground state at g_fin
  double tdv_ground = 0.0;  ///< TDV (D = 1) ground state at g_fin
  double mbh_sudden = 0.0;  ///< <psi0|H(g_fin)|psi0>, MBH Hamiltonian
  double tdv_sudden = 0.0;  ///< same with the variational energy
};

/// The initial state is the single-band ground state at g_ini for both methods.
QuenchResult linear_quench(const BHParams& params, const LatticeSetup& lattice, const QuenchConfig& config);

// ------------------------------------------------------- modulation sweep

struct ModulationConfig {
  int particles = 2;
  double g0 = 1.0;
  double g_mod = 0.1;
  double duration = 400.0;
  std::vector<double> omega;
  double dt = 1e-3;
  int mbh_bands = 5;
  int tdv_bands = 5;
  int threads = 1;
};

/// omega_min, omega_min + step, ..., up to omega_max inclusive.
std::vector<double> omega_grid(double omega_min, double omega_max, double step);

struct ModulationRow {
  double omega = 0.0;
  double mbh = 0.0;  ///< D(omega) = 1 - min_t |<psi(0)|psi(t)>|
  double tdv = 0.0;
};

struct ModulationResult {
  std::vector<ModulationRow> rows;
  /// |<band-1 state|MBH ground state at g0>|
  double initial_overlap = 0.0;
};

/// Single-site spectroscopy: g(t) = g0 + g_mod sin(omega t) on one site
/// without hopping. `params` must be a single-site parameter set.
ModulationResult modulation_sweep(const BHParams& params, const ModulationConfig& config);

struct Peak {
  double position = 0.0;
  double height = 0.0;
};

/// Interior local maxima of y(x) above `min_height`, refined by a parabola
/// through each maximum and its neighbours.
std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y, double min_height = 0.0);

}  // namespace varbh
