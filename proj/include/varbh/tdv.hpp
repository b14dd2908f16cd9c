#pragma once

// Time-dependent variational (TDV) ansatz: every site k carries D orthonormal
// modes w_k^mu = sum_alpha X_k(alpha, mu) w^alpha built from N_V fixed Wannier
// bands, and the many-body state is a Fock expansion C over those modes.
//
// D = 1 supports ground states and real-time evolution; D = 2 ground states only.

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "varbh/fock.hpp"
#include "varbh/propagation.hpp"

namespace varbh {

struct TdvState {
  /// frames[k] is N_V x D with orthonormal columns.
  std::vector<Eigen::MatrixXcd> frames;
  /// Fock basis over L sites x D modes.
  std::shared_ptr<const FockBasis> reduced;
  Eigen::VectorXcd C;

  [[nodiscard]] int sites() const { return static_cast<int>(frames.size()); }
  [[nodiscard]] int fixed_bands() const { return static_cast<int>(frames.front().rows()); }
  [[nodiscard]] int variational_bands() const { return static_cast<int>(frames.front().cols()); }
  [[nodiscard]] int particles() const { return reduced->particles(); }
};

/// D = 1 state with site k holding occupation[k] bosons in fixed band band[k]
/// (0-based). The mode of site k is the unit vector of that band.
TdvState tdv_fock_state(int fixed_bands, const std::vector<int>& occupation, const std::vector<int>& band);

/// max_k || X_k^+ X_k - 1 ||_max
double frame_orthonormality_error(const TdvState& state);

/// Time-dependent Hubbard parameters of a D = 1 state.
struct TdvParameters {
  std::vector<std::pair<int, int>> bonds;
  std::vector<cplx> J_bond;  ///< sum_a conj(d_k^a) J^a d_l^a for bond (k, l)
  std::vector<double> E_site;
  std::vector<double> U_site;  ///< g sum U^{abcd} conj(d^a) conj(d^b) d^c d^d
};

TdvParameters tdv_parameters(const TdvState& state, const BHParams& params, bool periodic);

struct TdvDensities {
  /// <a^+_m a_n> over reduced modes m = k * D + mu.
  Eigen::MatrixXcd rho1;
  /// Per site, <a^+_k a^+_l a_m a_n> in (k, l, m, n) row-major order, D^4 entries.
  std::vector<std::vector<cplx>> rho2;
  /// D = 1 shorthand: rho_kkkk = <n_k (n_k - 1)>.
  std::vector<double> rho2_diag;
};

TdvDensities tdv_densities(const FockBasis& reduced, const Eigen::VectorXcd& C);

/// Projection of the MBH Hamiltonian onto the reduced modes, split as static + g * interaction.
ParametricOperator<cplx> reduced_hamiltonian(const TdvState& state, const BHParams& params, bool periodic);

/// <C| H_red(g) |C>.
double tdv_energy(const TdvState& state, const BHParams& params, double g, bool periodic);

/// Gradient of the energy with respect to conj(X_k), at fixed C.
std::vector<Eigen::MatrixXcd> frame_gradient(const TdvState& state, const TdvDensities& densities,
                                             const BHParams& params, double g, bool periodic);

struct TdvDerivative {
  std::vector<Eigen::VectorXcd> d_dot;
  Eigen::VectorXcd C_dot;
};

/// Right-hand side of the D = 1 evolution equations. Throws NumericalError if
/// some rho_kk falls below 1e-12.
TdvDerivative tdv_rhs(const TdvState& state, const BHParams& params, double g, bool periodic);

inline constexpr double kMinSiteDensity = 1e-12;

struct TdvEvolveOptions {
  double dt = 1e-3;
  int output_stride = 1;
  double drift_tolerance = 1e-6;
  bool record_populations = true;
  bool record_energy = false;
};

struct TdvTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> site_populations;
  std::vector<std::vector<double>> band_populations;
  std::vector<double> energy;
  std::vector<double> fidelity;
  TdvState final_state;
  double min_fidelity = 1.0;
  double max_frame_drift = 0.0;
  double max_norm_drift = 0.0;
  int steps = 0;
};

/// RK4 integration of the D = 1 equations. Throws NumericalError when the
/// mode orthonormality or ||C|| drifts beyond the tolerance.
TdvTrajectory evolve_tdv(const TdvState& initial, const BHParams& params, const Schedule& g, double duration,
                         bool periodic, const TdvEvolveOptions& options = {});

double tdv_halving_infidelity(const TdvState& initial, const BHParams& params, const Schedule& g,
                              double duration, bool periodic, double dt);

/// <a|b> for two D = 1 states on the same reduced basis.
cplx tdv_overlap(const TdvState& a, const TdvState& b);

std::vector<double> tdv_site_populations(const TdvState& state);
std::vector<double> tdv_band_populations(const TdvState& state);

/// Expands the TDV state in the MBH Fock basis (basis bands >= N_V).
MbhState embed_to_mbh(const TdvState& state, std::shared_ptr<const FockBasis> basis);

struct TdvMinimizeOptions {
  int starts = 16;
  std::uint64_t seed = 0x7d5eed;
  int max_iterations = 4000;
  double energy_tolerance = 1e-10;    ///< per-iteration decrease
  double gradient_tolerance = 1e-6;   ///< Riemannian gradient norm
  std::size_t dense_limit = 64;       ///< reduced spaces up to this size are diagonalised densely
};

struct TdvGroundState {
  double energy = 0.0;
  TdvState state;
  bool converged = false;
  int best_start = 0;
  /// Energy after every iteration, per start.
  std::vector<std::vector<double>> log;
};

/// Minimises the variational energy at coupling params.g over frames of
/// N_V = params.num_bands fixed bands and D variational bands, with C the
/// lowest eigenvector of the reduced Hamiltonian.
TdvGroundState tdv_ground_state(const BHParams& params, int sites, int particles, int variational_bands,
                                bool periodic, const TdvMinimizeOptions& options = {});

/// Largest overlap of b1^+ b3^+ |0> with a single-mode pair state
/// (1/sqrt 2)(alpha b1^+ + beta b3^+)^2 |0>, alpha^2 + beta^2 = 1.
struct OverlapBound {
  double alpha = 0.0;
  double beta = 0.0;
  double value = 0.0;
};

double psi13_overlap(double alpha, double beta);
OverlapBound psi13_overlap_bound();

}  // namespace varbh
