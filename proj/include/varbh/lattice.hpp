#pragma once

// Band structure of the 1D sinusoidal lattice V(x) = s sin^2(pi x) on a ring
// of L sites, and the real Wannier functions built from it.
//
// Units: energy E_R, length a (lattice constant), time hbar/E_R. In these units
// the kinetic operator is -(1/pi^2) d^2/dx^2 and a plane wave with wave vector
// K has kinetic energy (K/pi)^2.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace varbh {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

struct LatticeSpec {
  double depth = 10.0;       ///< s, in E_R
  int sites = 4;             ///< L, ring length in lattice constants
  int plane_wave_cutoff = 16;  ///< n_max; reciprocal vectors -n_max..n_max

  /// Throws std::invalid_argument if any invariant is broken.
  void validate() const;
  [[nodiscard]] int plane_wave_count() const { return 2 * plane_wave_cutoff + 1; }
};

struct BlochSpectrum {
  LatticeSpec lattice;
  int num_bands = 0;
  /// q_j = 2 pi j / L folded into (-pi, pi], in units of 1/a.
  std::vector<double> quasimomenta;
  /// energies[band][j], bands ascending.
  std::vector<std::vector<double>> energies;
  /// eigenvectors[band][j][n]: coefficient of exp(i (q_j + 2 pi n) x) for
  /// n = -n_max..n_max (stored at offset n + n_max). Unit norm.
  std::vector<std::vector<std::vector<cplx>>> eigenvectors;

  [[nodiscard]] int sites() const { return lattice.sites; }
  /// Largest ||H v - E v|| over all returned pairs.
  double max_residual = 0.0;
};

/// Lowest `num_bands` Bloch eigenpairs at each of the L ring quasimomenta.
BlochSpectrum solve_bloch(const LatticeSpec& spec, int num_bands);

/// Dense plane-wave Hamiltonian at one quasimomentum (q in units of 1/a).
/// Exposed for oracles and convergence checks.
std::vector<double> bloch_matrix(double depth, double quasimomentum, int plane_wave_cutoff);

/// Real, parity-definite Wannier functions on the ring.
///
/// w_0^b(x) = sum_K coefficients[b][K] exp(i K x), with K running over
/// wavevectors (all q_j + 2 pi n). Site i is the translate w_0^b(x - i).
/// Band b is 0-based: even b is even about the site centre, odd b is odd.
struct WannierBasis {
  LatticeSpec lattice;
  int num_bands = 0;
  std::vector<double> wavevectors;
  std::vector<std::vector<cplx>> coefficients;

  [[nodiscard]] int sites() const { return lattice.sites; }
  [[nodiscard]] double site_position(int site) const { return static_cast<double>(site); }
};

/// Minimum depth for which the Bloch phase convention is well defined.
inline constexpr double kMinWannierDepth = 0.1;

/// Throws std::invalid_argument for depth below kMinWannierDepth and
/// NumericalError if a band touches its neighbour at some quasimomentum.
WannierBasis build_wannier(const BlochSpectrum& spectrum);

/// w_site^band at each x (x wrapped onto the ring). Throws NumericalError if
/// the imaginary part of the plane-wave sum exceeds 1e-10.
std::vector<double> wannier_value(const WannierBasis& basis, int band, int site,
                                  std::span<const double> x);

/// (h w_site^band)(x) with h = -(1/pi^2) d^2/dx^2 + s sin^2(pi x).
std::vector<double> wannier_apply_h(const WannierBasis& basis, int band, int site,
                                    std::span<const double> x);

/// Exact plane-wave overlap <w_i^a | w_j^b>.
double wannier_overlap(const WannierBasis& basis, int band_a, int site_a, int band_b,
                       int site_b);

/// Uniform periodic grid over the full ring, `points_per_site` points per unit length.
std::vector<double> ring_grid(int sites, int points_per_site);

/// Composite Simpson weights for a periodic uniform grid with an even point count.
std::vector<double> periodic_simpson_weights(std::size_t points, double length);

}  // namespace varbh
