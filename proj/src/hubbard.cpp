#include "varbh/hubbard.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "varbh/errors.hpp"

namespace varbh {

BHParams BHParams::truncated(int bands) const {
  if (bands < 1 || bands > num_bands) throw std::invalid_argument("cannot truncate to " + std::to_string(bands) + " bands");
  BHParams out = *this;
  out.num_bands = bands;
  out.J.resize(bands);
  out.E.resize(bands);
  out.U = Tensor4(bands);
  for (int a = 0; a < bands; ++a)
    for (int b = 0; b < bands; ++b)
      for (int c = 0; c < bands; ++c)
        for (int d = 0; d < bands; ++d) out.U(a, b, c, d) = U(a, b, c, d);
  return out;
}

BHParams BHParams::with_coupling(double coupling) const {
  BHParams out = *this;
  out.g = coupling;
  return out;
}

double tunneling(const BlochSpectrum& spectrum, int band, int range) {
  if (band < 0 || band >= spectrum.num_bands) throw std::invalid_argument("band index out of range");
  if (range < 0) throw std::invalid_argument("tunnelling range must be non-negative");
  const int L = spectrum.sites();
  cplx acc{0.0, 0.0};
  for (int j = 0; j < L; ++j) {
    acc += std::polar(1.0, spectrum.quasimomenta[j] * range) * spectrum.energies[band][j];
  }
  acc /= static_cast<double>(L);
  if (std::abs(acc.imag()) > 1e-12 * (1.0 + std::abs(acc.real()))) {
    throw NumericalError("dispersion is not inversion symmetric");
  }
  return -acc.real();
}

double onsite_energy(const BlochSpectrum& spectrum, int band) {
  if (band < 0 || band >= spectrum.num_bands) throw std::invalid_argument("band index out of range");
  double acc = 0.0;
  for (double e : spectrum.energies[band]) acc += e;
  return acc / spectrum.sites();
}

double tunneling_real_space(const WannierBasis& basis, int band, int range, int points_per_site) {
  const int L = basis.sites();
  const auto x = ring_grid(L, points_per_site);
  const auto w = periodic_simpson_weights(x.size(), L);
  const auto left = wannier_value(basis, band, 0, x);
  const auto right = wannier_apply_h(basis, band, range % L, x);
  double acc = 0.0;
  for (std::size_t m = 0; m < x.size(); ++m) acc += w[m] * left[m] * right[m];
  return -acc;
}

namespace {

Tensor4 quartic_integrals(const std::vector<std::vector<double>>& pair, const std::vector<double>& weights,
                          int bands, std::size_t stride) {
  Tensor4 u(bands);
  for (int a = 0; a < bands; ++a)
    for (int b = 0; b < bands; ++b)
      for (int c = 0; c < bands; ++c)
        for (int d = 0; d < bands; ++d) {
          const auto& p = pair[a * bands + b];
          const auto& q = pair[c * bands + d];
          double acc = 0.0;
          for (std::size_t m = 0, k = 0; m < p.size(); m += stride, ++k) acc += weights[k] * p[m] * q[m];
          u(a, b, c, d) = acc / kPi;
        }
  return u;
}

}  // namespace

Tensor4 interaction_tensor(const WannierBasis& basis, int num_bands, int points_per_site) {
  if (num_bands < 1 || num_bands > basis.num_bands) throw std::invalid_argument("too many bands for Wannier basis");
  if (points_per_site < 4 || points_per_site % 4 != 0) {
    throw std::invalid_argument("points per site must be a positive multiple of 4");
  }
  const int L = basis.sites();
  const auto x = ring_grid(L, points_per_site);

  std::vector<std::vector<double>> w(num_bands);
  for (int b = 0; b < num_bands; ++b) w[b] = wannier_value(basis, b, 0, x);

  std::vector<std::vector<double>> pair(static_cast<std::size_t>(num_bands) * num_bands);
  for (int a = 0; a < num_bands; ++a)
    for (int b = 0; b < num_bands; ++b) {
      auto& p = pair[a * num_bands + b];
      p.resize(x.size());
      for (std::size_t m = 0; m < x.size(); ++m) p[m] = w[a][m] * w[b][m];
    }

  Tensor4 fine = quartic_integrals(pair, periodic_simpson_weights(x.size(), L), num_bands, 1);
  const Tensor4 coarse = quartic_integrals(pair, periodic_simpson_weights(x.size() / 2, L), num_bands, 2);

  for (std::size_t k = 0; k < fine.data().size(); ++k) {
    if (std::abs(fine.data()[k] - coarse.data()[k]) > 1e-8) {
      throw NumericalError("interaction quadrature not converged at " + std::to_string(points_per_site) +
                           " points per site");
    }
  }
  for (int a = 0; a < num_bands; ++a)
    for (int b = 0; b < num_bands; ++b)
      for (int c = 0; c < num_bands; ++c)
        for (int d = 0; d < num_bands; ++d) {
          if ((a + b + c + d) % 2 == 0) continue;
          if (std::abs(fine(a, b, c, d)) > 1e-10) {
            throw NumericalError("parity-forbidden interaction integral is not zero");
          }
          fine(a, b, c, d) = 0.0;
        }
  return fine;
}

namespace {

void check_units(const UnitContext& units) {
  if (!(units.wavelength > 0.0) || !(units.mass > 0.0)) {
    throw std::invalid_argument("effective coupling needs a lattice wavelength and an atomic mass");
  }
}

// E_R / k in J m.
double coupling_unit(const UnitContext& units) {
  const double k = 2.0 * kPi / units.wavelength;
  const double recoil = kHbar * kHbar * k * k / (2.0 * units.mass);
  return recoil / k;
}

}  // namespace

double effective_g(double scattering_length, double transverse_frequency, const UnitContext& units) {
  check_units(units);
  if (scattering_length < 0.0 || transverse_frequency < 0.0) {
    throw std::invalid_argument("scattering length and transverse frequency must be non-negative");
  }
  return 2.0 * kHbar * scattering_length * transverse_frequency / coupling_unit(units);
}

double scattering_length_from_g(double g, double transverse_frequency, const UnitContext& units) {
  check_units(units);
  if (!(transverse_frequency > 0.0)) throw std::invalid_argument("transverse frequency must be positive");
  return g * coupling_unit(units) / (2.0 * kHbar * transverse_frequency);
}

BHParams bh_params_from(const BlochSpectrum& spectrum, const WannierBasis& basis, double g, int points_per_site) {
  const int num_bands = spectrum.num_bands;
  BHParams p;
  p.num_bands = num_bands;
  p.g = g;
  p.depth = spectrum.lattice.depth;
  p.sites = spectrum.lattice.sites;
  p.plane_wave_cutoff = spectrum.lattice.plane_wave_cutoff;
  p.points_per_site = points_per_site;
  for (int b = 0; b < num_bands; ++b) {
    p.J.push_back(tunneling(spectrum, b, 1));
    p.E.push_back(onsite_energy(spectrum, b));
  }
  p.U = interaction_tensor(basis, num_bands, points_per_site);
  return p;
}

BHParams compute_bh_params(const LatticeSpec& spec, int num_bands, double g, int points_per_site) {
  const BlochSpectrum spectrum = solve_bloch(spec, num_bands);
  return bh_params_from(spectrum, build_wannier(spectrum), g, points_per_site);
}

}  // namespace varbh
