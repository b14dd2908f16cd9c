#include "varbh/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <tuple>

namespace varbh {

// ---------------------------------------------------------------------------
// FockBasis
// ---------------------------------------------------------------------------

std::size_t FockBasis::count(int modes, int particles) {
  if (modes <= 0) return particles == 0 ? 1 : 0;
  // C(particles + modes - 1, modes - 1), computed incrementally.
  long double c = 1.0L;
  const int k = std::min(modes - 1, particles);
  const int n = particles + modes - 1;
  for (int i = 1; i <= k; ++i) {
    c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (c > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 2)) {
      return std::numeric_limits<std::size_t>::max();
    }
  }
  return static_cast<std::size_t>(std::llround(c));
}

FockBasis::FockBasis(int sites, int bands, int particles, std::size_t max_dimension)
    : sites_(sites), bands_(bands), particles_(particles) {
  if (sites < 1 || bands < 1 || particles < 1) {
    throw std::invalid_argument("Fock basis needs positive sites, bands and particles");
  }
  if (particles > 250) throw std::invalid_argument("at most 250 particles are supported");
  const int m = modes();
  dimension_ = count(m, particles);
  if (dimension_ > max_dimension) {
    throw std::invalid_argument("Fock space dimension " + std::to_string(dimension_) + " exceeds limit " +
                                std::to_string(max_dimension));
  }

  pascal_rows_ = particles + m + 2;
  pascal_.assign(static_cast<std::size_t>(pascal_rows_) * pascal_rows_, 0);
  for (int n = 0; n < pascal_rows_; ++n) {
    pascal_[static_cast<std::size_t>(n) * pascal_rows_] = 1;
    for (int k = 1; k <= n; ++k) {
      pascal_[static_cast<std::size_t>(n) * pascal_rows_ + k] =
          pascal_[static_cast<std::size_t>(n - 1) * pascal_rows_ + k - 1] +
          (k <= n - 1 ? pascal_[static_cast<std::size_t>(n - 1) * pascal_rows_ + k] : 0);
    }
  }

  occupations_.resize(dimension_ * static_cast<std::size_t>(m));
  std::vector<std::uint8_t> current(m, 0);
  std::size_t written = 0;
  // Ascending lexicographic enumeration: each position takes 0..remaining,
  // the last mode absorbs whatever is left.
  auto fill = [&](auto&& self, int position, int remaining) -> void {
    if (position == m - 1) {
      current[position] = static_cast<std::uint8_t>(remaining);
      std::copy(current.begin(), current.end(), occupations_.begin() + written * m);
      ++written;
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      current[position] = static_cast<std::uint8_t>(v);
      self(self, position + 1, remaining - v);
    }
  };
  fill(fill, 0, particles);
}

std::uint64_t FockBasis::binom(int n, int k) const {
  if (k < 0 || n < 0 || k > n) return 0;
  return pascal_[static_cast<std::size_t>(n) * pascal_rows_ + k];
}

// Number of states sharing the prefix before `position` whose entry there is
// below `value`, given `remaining` particles from `position` on.
std::uint64_t FockBasis::tail(int position, int remaining, int value) const {
  const int r = modes() - position - 1;
  if (r == 0 || value == 0) return 0;
  return binom(remaining + r, r) - binom(remaining - value + r, r);
}

std::size_t FockBasis::index(std::span<const std::uint8_t> occupation) const {
  int remaining = 0;
  for (auto n : occupation) remaining += n;
  std::uint64_t rank = 0;
  for (int i = 0; i + 1 < modes(); ++i) {
    rank += tail(i, remaining, occupation[i]);
    remaining -= occupation[i];
  }
  return static_cast<std::size_t>(rank);
}

std::int64_t FockBasis::site_rank_delta(int site, int particles_before_site, const std::uint8_t* before,
                                        const std::uint8_t* after) const {
  int rem_before = particles_ - particles_before_site;
  int rem_after = rem_before;
  std::int64_t delta = 0;
  for (int b = 0; b < bands_; ++b) {
    const int position = site * bands_ + b;
    delta += static_cast<std::int64_t>(tail(position, rem_after, after[b]));
    delta -= static_cast<std::int64_t>(tail(position, rem_before, before[b]));
    rem_after -= after[b];
    rem_before -= before[b];
  }
  return delta;
}

LadderResult apply_ladder(const FockBasis& basis, std::size_t state_index, int site, int band, Ladder kind) {
  if (state_index >= basis.dimension()) throw std::invalid_argument("state index out of range");
  if (site < 0 || site >= basis.sites() || band < 0 || band >= basis.bands()) {
    throw std::invalid_argument("mode out of range");
  }
  auto s = basis.state(state_index);
  std::vector<std::uint8_t> occ(s.begin(), s.end());
  const int mode = site * basis.bands() + band;
  LadderResult out;
  if (kind == Ladder::annihilate) {
    if (occ[mode] == 0) return out;
    out.amplitude = std::sqrt(static_cast<double>(occ[mode]));
    --occ[mode];
    out.particles = basis.particles() - 1;
  } else {
    out.amplitude = std::sqrt(static_cast<double>(occ[mode]) + 1.0);
    ++occ[mode];
    out.particles = basis.particles() + 1;
  }
  out.valid = true;
  out.index = basis.index(occ);
  return out;
}

// ---------------------------------------------------------------------------
// Sparse matrices
// ---------------------------------------------------------------------------

namespace {

template <class Scalar>
Scalar conj_if_complex(const Scalar& v) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return v;
  } else {
    return std::conj(v);
  }
}

}  // namespace

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> CsrMatrix<Scalar>::to_dense() const {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(dimension, dimension);
  for (std::size_t r = 0; r < dimension; ++r)
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) m(r, cols[k]) += values[k];
  return m;
}

template <class Scalar>
double CsrMatrix<Scalar>::hermiticity_error() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < dimension; ++r) {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const std::size_t c = cols[k];
      const auto first = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[c]);
      const auto last = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[c + 1]);
      const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(r));
      Scalar partner{};
      if (it != last && *it == r) partner = values[static_cast<std::size_t>(it - cols.begin())];
      worst = std::max(worst, std::abs(values[k] - conj_if_complex(partner)));
    }
  }
  return worst;
}

template <class Scalar>
CsrMatrix<Scalar> ParametricOperator<Scalar>::evaluate(double g) const {
  CsrMatrix<Scalar> m;
  m.dimension = dimension;
  m.row_ptr = row_ptr;
  m.cols = cols;
  m.values.resize(cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) m.values[k] = static_values[k] + g * coupling_values[k];
  return m;
}

template <class Scalar>
ParametricOperator<Scalar> ParametricOperator<Scalar>::scaled(double factor) const {
  ParametricOperator out = *this;
  for (auto& v : out.static_values) v *= factor;
  for (auto& v : out.coupling_values) v *= factor;
  return out;
}

template <class Scalar>
ParametricOperator<Scalar> assemble_operator(
    const FockBasis& basis, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& one_body,
    const std::vector<std::vector<Scalar>>& two_body) {
  const int m = basis.modes();
  const int nb = basis.bands();
  if (one_body.rows() != m || one_body.cols() != m) throw std::invalid_argument("one-body matrix has wrong shape");
  if (!two_body.empty() && static_cast<int>(two_body.size()) != basis.sites()) {
    throw std::invalid_argument("need one two-body tensor per site");
  }
  const std::size_t nb4 = static_cast<std::size_t>(nb) * nb * nb * nb;
  for (const auto& t : two_body) {
    if (!t.empty() && t.size() != nb4) throw std::invalid_argument("two-body tensor has wrong size");
  }

  struct Term {
    int from;
    int to;
    Scalar value;
  };
  // Row r gets <r| v b_i^+ b_j |c>, i.e. annihilate i and create j on |r>.
  std::vector<Term> hops;
  std::vector<Scalar> diagonal(m, Scalar{});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const Scalar v = one_body(i, j);
      if (v == Scalar{}) continue;
      if (i == j) {
        diagonal[i] = v;
      } else {
        hops.push_back({i, j, v});
      }
    }

  // Per site, per annihilated pair (a, b): list of (c, d, V_abcd) with V != 0.
  struct Pair {
    int c;
    int d;
    Scalar value;
  };
  std::vector<std::vector<std::vector<Pair>>> pairs(two_body.size());
  for (std::size_t k = 0; k < two_body.size(); ++k) {
    if (two_body[k].empty()) continue;
    pairs[k].resize(static_cast<std::size_t>(nb) * nb);
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b)
        for (int c = 0; c < nb; ++c)
          for (int d = 0; d < nb; ++d) {
            const Scalar v = two_body[k][((static_cast<std::size_t>(a) * nb + b) * nb + c) * nb + d];
            if (v != Scalar{}) pairs[k][a * nb + b].push_back({c, d, v});
          }
  }

  ParametricOperator<Scalar> out;
  out.dimension = basis.dimension();
  out.row_ptr.reserve(basis.dimension() + 1);
  out.row_ptr.push_back(0);

  struct Entry {
    std::uint32_t col;
    Scalar stat;
    Scalar coup;
  };
  std::vector<Entry> row;
  std::vector<std::uint8_t> occ(m);
  std::vector<std::uint8_t> local(nb);

  for (std::size_t r = 0; r < basis.dimension(); ++r) {
    row.clear();
    const auto s = basis.state(r);
    std::copy(s.begin(), s.end(), occ.begin());

    Scalar diag{};
    for (int i = 0; i < m; ++i) diag += diagonal[i] * static_cast<double>(occ[i]);
    if (diag != Scalar{}) row.push_back({static_cast<std::uint32_t>(r), diag, Scalar{}});

    for (const auto& t : hops) {
      if (occ[t.from] == 0) continue;
      double amp = std::sqrt(static_cast<double>(occ[t.from]));
      --occ[t.from];
      amp *= std::sqrt(static_cast<double>(occ[t.to]) + 1.0);
      ++occ[t.to];
      row.push_back({static_cast<std::uint32_t>(basis.index(occ)), t.value * amp, Scalar{}});
      --occ[t.to];
      ++occ[t.from];
    }

    int before = 0;
    for (int k = 0; k < basis.sites(); ++k) {
      const std::uint8_t* site_occ = occ.data() + static_cast<std::size_t>(k) * nb;
      int on_site = 0;
      for (int b = 0; b < nb; ++b) on_site += site_occ[b];
      if (static_cast<std::size_t>(k) < pairs.size() && !pairs[k].empty() && on_site >= 2) {
        for (int a = 0; a < nb; ++a) {
          if (site_occ[a] == 0) continue;
          for (int b = 0; b < nb; ++b) {
            const auto& list = pairs[k][a * nb + b];
            if (list.empty()) continue;
            std::copy(site_occ, site_occ + nb, local.begin());
            double amp = std::sqrt(static_cast<double>(local[a]));
            --local[a];
            if (local[b] == 0) continue;
            amp *= std::sqrt(static_cast<double>(local[b]));
            --local[b];
            for (const auto& p : list) {
              double amp2 = amp * std::sqrt(static_cast<double>(local[p.c]) + 1.0);
              ++local[p.c];
              amp2 *= std::sqrt(static_cast<double>(local[p.d]) + 1.0);
              ++local[p.d];
              const std::int64_t col =
                  static_cast<std::int64_t>(r) + basis.site_rank_delta(k, before, site_occ, local.data());
              row.push_back({static_cast<std::uint32_t>(col), Scalar{}, p.value * amp2});
              --local[p.d];
              --local[p.c];
            }
          }
        }
      }
      before += on_site;
    }

    std::sort(row.begin(), row.end(), [](const Entry& x, const Entry& y) { return x.col < y.col; });
    for (std::size_t k = 0; k < row.size();) {
      Entry merged = row[k];
      std::size_t j = k + 1;
      for (; j < row.size() && row[j].col == merged.col; ++j) {
        merged.stat += row[j].stat;
        merged.coup += row[j].coup;
      }
      if (merged.stat != Scalar{} || merged.coup != Scalar{}) {
        out.cols.push_back(merged.col);
        out.static_values.push_back(merged.stat);
        out.coupling_values.push_back(merged.coup);
      }
      k = j;
    }
    out.row_ptr.push_back(out.cols.size());
  }
  return out;
}

template struct CsrMatrix<double>;
template struct CsrMatrix<std::complex<double>>;
template struct ParametricOperator<double>;
template struct ParametricOperator<std::complex<double>>;
template ParametricOperator<double> assemble_operator<double>(const FockBasis&, const Eigen::MatrixXd&,
                                                              const std::vector<std::vector<double>>&);
template ParametricOperator<std::complex<double>> assemble_operator<std::complex<double>>(
    const FockBasis&, const Eigen::MatrixXcd&, const std::vector<std::vector<std::complex<double>>>&);

// ---------------------------------------------------------------------------
// Multiband Bose-Hubbard Hamiltonian
// ---------------------------------------------------------------------------

std::vector<std::pair<int, int>> lattice_bonds(int sites, bool periodic) {
  std::vector<std::pair<int, int>> bonds;
  if (sites < 2) return bonds;
  for (int k = 0; k + 1 < sites; ++k) bonds.emplace_back(k, k + 1);
  if (periodic && sites > 2) bonds.emplace_back(sites - 1, 0);
  return bonds;
}

ParametricHamiltonian build_mbh_parts(const BHParams& params, const FockBasis& basis, bool periodic) {
  if (params.num_bands != basis.bands()) {
    throw std::invalid_argument("parameter band count " + std::to_string(params.num_bands) +
                                " does not match basis band count " + std::to_string(basis.bands()));
  }
  const int nb = basis.bands();
  const int m = basis.modes();
  Eigen::MatrixXd one_body = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < basis.sites(); ++k)
    for (int b = 0; b < nb; ++b) one_body(k * nb + b, k * nb + b) = params.E[b];
  for (const auto& [k, l] : lattice_bonds(basis.sites(), periodic)) {
    for (int b = 0; b < nb; ++b) {
      one_body(k * nb + b, l * nb + b) += -params.J[b];
      one_body(l * nb + b, k * nb + b) += -params.J[b];
    }
  }
  std::vector<double> half_u(params.U.data());
  for (auto& v : half_u) v *= 0.5;
  const std::vector<std::vector<double>> two_body(basis.sites(), half_u);
  return assemble_operator<double>(basis, one_body, two_body);
}

SparseHamiltonian to_hamiltonian(const CsrMatrix<double>& m) {
  SparseHamiltonian h;
  static_cast<CsrMatrix<double>&>(h) = m;
  h.hermitian = h.hermiticity_error() <= 1e-12;
  return h;
}

SparseHamiltonian build_mbh_hamiltonian(const BHParams& params, const FockBasis& basis, bool periodic) {
  return to_hamiltonian(build_mbh_parts(params, basis, periodic).evaluate(params.g));
}

double MbhState::norm() const {
  double acc = 0.0;
  for (const auto& a : amplitudes) acc += std::norm(a);
  return std::sqrt(acc);
}

MbhState MbhState::fock(std::shared_ptr<const FockBasis> basis, std::span<const std::uint8_t> occupation) {
  if (static_cast<int>(occupation.size()) != basis->modes()) throw std::invalid_argument("occupation has wrong length");
  int total = 0;
  for (auto n : occupation) total += n;
  if (total != basis->particles()) throw std::invalid_argument("occupation does not match particle number");
  MbhState s;
  s.amplitudes.assign(basis->dimension(), {0.0, 0.0});
  s.amplitudes[basis->index(occupation)] = 1.0;
  s.basis = std::move(basis);
  return s;
}

void write_coo(std::ostream& out, const CsrMatrix<double>& m) {
  const auto old = out.precision(17);
  for (std::size_t r = 0; r < m.dimension; ++r)
    for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) out << r << ' ' << m.cols[k] << ' ' << m.values[k] << '\n';
  out.precision(old);
}

}  // namespace varbh
