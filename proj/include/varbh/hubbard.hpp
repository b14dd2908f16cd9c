#pragma once

// Hubbard parameters of the multiband model: nearest-neighbour tunnelling J,
// on-site band energies E and the on-site interaction tensor U.
//
// Interaction convention: U_phys^{abcd} = g * U_unit^{abcd}, where g is the
// 1D contact coupling measured in E_R / k (k = pi / a the lattice wave number).
// Equivalently U_unit = (1/pi) * integral w^a w^b w^c w^d dx with x in units of a.

#include <cstddef>
#include <vector>

#include "varbh/lattice.hpp"

namespace varbh {

/// Dense rank-4 tensor of side n, index order (a, b, c, d).
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int side) : side_(side), data_(static_cast<std::size_t>(side) * side * side * side, 0.0) {}

  [[nodiscard]] int side() const { return side_; }
  double& operator()(int a, int b, int c, int d) { return data_[index(a, b, c, d)]; }
  double operator()(int a, int b, int c, int d) const { return data_[index(a, b, c, d)]; }
  [[nodiscard]] const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  [[nodiscard]] std::size_t index(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * side_ + b) * side_ + c) * side_ + d;
  }
  int side_ = 0;
  std::vector<double> data_;
};

struct BHParams {
  int num_bands = 0;
  std::vector<double> J;  ///< signed nearest-neighbour tunnelling per band; H term -J (b^+ b + h.c.)
  std::vector<double> E;  ///< band-averaged on-site energy per band
  Tensor4 U;              ///< on-site interaction per unit g
  double g = 0.0;

  // Provenance, recorded into caches and manifests.
  double depth = 0.0;
  int sites = 0;
  int plane_wave_cutoff = 0;
  int points_per_site = 0;

  /// Restriction to the lowest `bands` bands.
  [[nodiscard]] BHParams truncated(int bands) const;
  [[nodiscard]] BHParams with_coupling(double coupling) const;
};

/// -(1/L) sum_q exp(i q r) E^band(q). r = 1 gives J, r = 0 gives -E.
double tunneling(const BlochSpectrum& spectrum, int band, int range);

/// (1/L) sum_q E^band(q).
double onsite_energy(const BlochSpectrum& spectrum, int band);

/// Same hopping from the real-space integral -<w_0|h|w_r> by periodic Simpson quadrature.
double tunneling_real_space(const WannierBasis& basis, int band, int range, int points_per_site = 2048);

inline constexpr int kDefaultPointsPerSite = 2048;

/// U_unit on site 0 by periodic Simpson quadrature over the full ring.
/// Entries with odd band-index sum are verified below 1e-10 and stored as zero.
/// Throws NumericalError if halving the grid changes any entry by more than 1e-8.
Tensor4 interaction_tensor(const WannierBasis& basis, int num_bands,
                           int points_per_site = kDefaultPointsPerSite);

/// Physical context needed to express g in internal units.
struct UnitContext {
  double wavelength = 0.0;  ///< lattice laser wavelength [m]; a = wavelength / 2
  double mass = 0.0;        ///< atomic mass [kg]
};

inline constexpr double kHbar = 1.054571817e-34;

/// g = 2 hbar a_s Omega, expressed in E_R / k.
double effective_g(double scattering_length, double transverse_frequency, const UnitContext& units);

/// Inverse of effective_g at fixed transverse frequency.
double scattering_length_from_g(double g, double transverse_frequency, const UnitContext& units);

/// All parameters from an already solved spectrum and its Wannier basis.
BHParams bh_params_from(const BlochSpectrum& spectrum, const WannierBasis& basis, double g,
                        int points_per_site = kDefaultPointsPerSite);

/// Bloch spectrum + Wannier basis + all parameters for one lattice.
BHParams compute_bh_params(const LatticeSpec& spec, int num_bands, double g,
                           int points_per_site = kDefaultPointsPerSite);

}  // namespace varbh
