#include "varbh/lattice.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "varbh/errors.hpp"

namespace varbh {

void LatticeSpec::validate() const {
  if (!std::isfinite(depth)) throw std::invalid_argument("lattice depth must be finite");
  if (depth < 0.0) throw std::invalid_argument("lattice depth must be non-negative");
  if (sites < 1) throw std::invalid_argument("lattice needs at least one site");
  if (plane_wave_cutoff < 4) throw std::invalid_argument("plane-wave cutoff must be >= 4");
}

std::vector<double> bloch_matrix(double depth, double quasimomentum, int plane_wave_cutoff) {
  const int p = 2 * plane_wave_cutoff + 1;
  const double qt = quasimomentum / kPi;
  std::vector<double> h(static_cast<std::size_t>(p) * p, 0.0);
  for (int r = 0; r < p; ++r) {
    const double k = qt + 2.0 * (r - plane_wave_cutoff);
    h[r * p + r] = k * k + 0.5 * depth;
    if (r + 1 < p) {
      h[r * p + r + 1] = -0.25 * depth;
      h[(r + 1) * p + r] = -0.25 * depth;
    }
  }
  return h;
}

BlochSpectrum solve_bloch(const LatticeSpec& spec, int num_bands) {
  spec.validate();
  const int p = spec.plane_wave_count();
  if (num_bands < 1 || num_bands > 2 * spec.plane_wave_cutoff - 1) {
    throw std::invalid_argument("plane-wave cutoff " + std::to_string(spec.plane_wave_cutoff) +
                                " too small for " + std::to_string(num_bands) + " bands");
  }

  BlochSpectrum out;
  out.lattice = spec;
  out.num_bands = num_bands;
  out.energies.assign(num_bands, std::vector<double>(spec.sites));
  out.eigenvectors.assign(num_bands, std::vector<std::vector<cplx>>(spec.sites));

  for (int j = 0; j < spec.sites; ++j) {
    double qt = 2.0 * j / spec.sites;
    if (qt > 1.0) qt -= 2.0;
    const double q = kPi * qt;
    out.quasimomenta.push_back(q);

    const auto dense = bloch_matrix(spec.depth, q, spec.plane_wave_cutoff);
    const Eigen::Map<const Eigen::MatrixXd> h(dense.data(), p, p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    if (eig.info() != Eigen::Success) throw NumericalError("Bloch eigensolver failed");

    for (int b = 0; b < num_bands; ++b) {
      const Eigen::VectorXd v = eig.eigenvectors().col(b);
      const double e = eig.eigenvalues()(b);
      out.max_residual = std::max(out.max_residual, (h * v - e * v).norm());
      out.energies[b][j] = e;
      out.eigenvectors[b][j].assign(v.data(), v.data() + p);
    }
  }
  return out;
}

WannierBasis build_wannier(const BlochSpectrum& spectrum) {
  const LatticeSpec& spec = spectrum.lattice;
  if (spec.depth < kMinWannierDepth) {
    throw std::invalid_argument("Wannier construction needs depth >= 0.1 E_R (bands touch at s = 0)");
  }
  const int L = spec.sites;
  const int p = spec.plane_wave_count();
  const int nmax = spec.plane_wave_cutoff;

  for (int j = 0; j < L; ++j) {
    for (int b = 0; b + 1 < spectrum.num_bands; ++b) {
      if (spectrum.energies[b + 1][j] - spectrum.energies[b][j] < 1e-8) {
        throw NumericalError("bands " + std::to_string(b + 1) + " and " + std::to_string(b + 2) +
                             " are degenerate at quasimomentum index " + std::to_string(j));
      }
    }
  }

  WannierBasis basis;
  basis.lattice = spec;
  basis.num_bands = spectrum.num_bands;
  basis.wavevectors.reserve(static_cast<std::size_t>(L) * p);
  for (int j = 0; j < L; ++j) {
    for (int n = -nmax; n <= nmax; ++n) {
      basis.wavevectors.push_back(spectrum.quasimomenta[j] + 2.0 * kPi * n);
    }
  }

  basis.coefficients.assign(spectrum.num_bands, std::vector<cplx>(static_cast<std::size_t>(L) * p));
  for (int b = 0; b < spectrum.num_bands; ++b) {
    for (int j = 0; j < L; ++j) {
      const auto& c = spectrum.eigenvectors[b][j];
      // Even bands: phi_q(0) real positive. Odd bands: phi_q'(0) real positive.
      cplx anchor{0.0, 0.0};
      for (int r = 0; r < p; ++r) {
        const double k = basis.wavevectors[static_cast<std::size_t>(j) * p + r];
        anchor += (b % 2 == 0) ? c[r] : cplx{0.0, 1.0} * k * c[r];
      }
      if (std::abs(anchor) < 1e-12) {
        throw NumericalError("cannot fix Bloch phase for band " + std::to_string(b + 1) +
                             " at quasimomentum index " + std::to_string(j));
      }
      const cplx phase = std::conj(anchor) / std::abs(anchor);
      for (int r = 0; r < p; ++r) {
        basis.coefficients[b][static_cast<std::size_t>(j) * p + r] = c[r] * phase / static_cast<double>(L);
      }
    }
  }
  return basis;
}

namespace {

double wrap(double x, double length) {
  double y = std::fmod(x, length);
  if (y < 0.0) y += length;
  return y;
}

// Sum_K coeff_K * weight(K) * exp(i K x) using the exp(2 pi i x) recurrence per quasimomentum.
template <class Weight>
cplx plane_wave_sum(const WannierBasis& basis, int band, double x, Weight weight) {
  const int L = basis.sites();
  const int p = basis.lattice.plane_wave_count();
  const auto& a = basis.coefficients[band];
  const cplx step = std::polar(1.0, 2.0 * kPi * x);
  cplx acc{0.0, 0.0};
  for (int j = 0; j < L; ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * p;
    cplx e = std::polar(1.0, basis.wavevectors[off] * x);
    for (int r = 0; r < p; ++r) {
      acc += a[off + r] * weight(basis.wavevectors[off + r]) * e;
      e *= step;
    }
  }
  return acc;
}

void check_band(const WannierBasis& basis, int band, int site) {
  if (band < 0 || band >= basis.num_bands) throw std::invalid_argument("band index out of range");
  if (site < 0 || site >= basis.sites()) throw std::invalid_argument("site index out of range");
}

}  // namespace

std::vector<double> wannier_value(const WannierBasis& basis, int band, int site,
                                  std::span<const double> x) {
  check_band(basis, band, site);
  const double length = basis.sites();
  std::vector<double> out(x.size());
  for (std::size_t m = 0; m < x.size(); ++m) {
    const cplx v = plane_wave_sum(basis, band, wrap(x[m] - site, length), [](double) { return 1.0; });
    if (std::abs(v.imag()) > 1e-10) {
      throw NumericalError("Wannier function has imaginary part " + std::to_string(v.imag()));
    }
    out[m] = v.real();
  }
  return out;
}

std::vector<double> wannier_apply_h(const WannierBasis& basis, int band, int site,
                                    std::span<const double> x) {
  check_band(basis, band, site);
  const double length = basis.sites();
  const double s = basis.lattice.depth;
  std::vector<double> out(x.size());
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double u = wrap(x[m] - site, length);
    const cplx kin = plane_wave_sum(basis, band, u, [](double k) { return k * k / (kPi * kPi); });
    const cplx val = plane_wave_sum(basis, band, u, [](double) { return 1.0; });
    const double sn = std::sin(kPi * x[m]);
    out[m] = (kin + s * sn * sn * val).real();
  }
  return out;
}

double wannier_overlap(const WannierBasis& basis, int band_a, int site_a, int band_b, int site_b) {
  check_band(basis, band_a, site_a);
  check_band(basis, band_b, site_b);
  const auto& a = basis.coefficients[band_a];
  const auto& b = basis.coefficients[band_b];
  cplx acc{0.0, 0.0};
  for (std::size_t k = 0; k < a.size(); ++k) {
    acc += std::conj(a[k]) * b[k] * std::polar(1.0, basis.wavevectors[k] * (site_a - site_b));
  }
  return (acc * static_cast<double>(basis.sites())).real();
}

std::vector<double> ring_grid(int sites, int points_per_site) {
  const std::size_t n = static_cast<std::size_t>(sites) * points_per_site;
  std::vector<double> x(n);
  for (std::size_t m = 0; m < n; ++m) x[m] = static_cast<double>(m) / points_per_site;
  return x;
}

std::vector<double> periodic_simpson_weights(std::size_t points, double length) {
  if (points < 2 || points % 2 != 0) {
    throw std::invalid_argument("periodic Simpson rule needs an even number of points");
  }
  const double h = length / static_cast<double>(points);
  std::vector<double> w(points);
  for (std::size_t m = 0; m < points; ++m) w[m] = (m % 2 == 0 ? 2.0 : 4.0) * h / 3.0;
  return w;
}

}  // namespace varbh
