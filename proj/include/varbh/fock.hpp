#pragma once

// Number-conserving bosonic Fock space over L sites x B bands, and sparse
// assembly of number-conserving Hamiltonians on it.
//
// Mode index: site * bands + band. States are the occupation arrays
// (n_0, ..., n_{M-1}) with sum N, in ascending lexicographic order; ranks are
// computed combinatorially, never by hashing.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "varbh/hubbard.hpp"

namespace varbh {

inline constexpr std::size_t kDefaultMaxDimension = 5'000'000;

class FockBasis {
 public:
  FockBasis(int sites, int bands, int particles, std::size_t max_dimension = kDefaultMaxDimension);

  [[nodiscard]] int sites() const { return sites_; }
  [[nodiscard]] int bands() const { return bands_; }
  [[nodiscard]] int particles() const { return particles_; }
  [[nodiscard]] int modes() const { return sites_ * bands_; }
  [[nodiscard]] std::size_t dimension() const { return dimension_; }

  [[nodiscard]] std::span<const std::uint8_t> state(std::size_t i) const {
    return {occupations_.data() + i * static_cast<std::size_t>(modes()), static_cast<std::size_t>(modes())};
  }
  [[nodiscard]] int occupation(std::size_t i, int site, int band) const {
    return occupations_[i * static_cast<std::size_t>(modes()) + site * bands_ + band];
  }

  /// Rank of an occupation array. Valid for any particle total up to N + 1,
  /// ranking among arrays with that same total.
  [[nodiscard]] std::size_t index(std::span<const std::uint8_t> occupation) const;

  /// Rank change when the occupations of one site are replaced, keeping the
  /// site total fixed. `before`/`after` hold that site's `bands()` entries and
  /// `particles_before_site` is the number of particles on earlier sites.
  [[nodiscard]] std::int64_t site_rank_delta(int site, int particles_before_site, const std::uint8_t* before,
                                             const std::uint8_t* after) const;

  /// Number of occupation arrays of `modes` modes holding `particles` bosons,
  /// saturating at SIZE_MAX.
  static std::size_t count(int modes, int particles);

  [[nodiscard]] bool same_shape(const FockBasis& other) const {
    return sites_ == other.sites_ && bands_ == other.bands_ && particles_ == other.particles_;
  }

 private:
  [[nodiscard]] std::uint64_t binom(int n, int k) const;
  [[nodiscard]] std::uint64_t tail(int position, int remaining, int value) const;

  int sites_;
  int bands_;
  int particles_;
  std::size_t dimension_ = 0;
  std::vector<std::uint8_t> occupations_;
  int pascal_rows_ = 0;
  std::vector<std::uint64_t> pascal_;
};

enum class Ladder { create, annihilate };

/// Result of b or b^+ on a basis state. `index` ranks the image among states
/// with `particles` bosons; a zero result has amplitude 0 and `valid` false.
struct LadderResult {
  bool valid = false;
  std::size_t index = 0;
  int particles = 0;
  double amplitude = 0.0;
};

LadderResult apply_ladder(const FockBasis& basis, std::size_t state_index, int site, int band, Ladder kind);

/// Compressed sparse row matrix.
template <class Scalar>
struct CsrMatrix {
  std::size_t dimension = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> cols;
  std::vector<Scalar> values;

  [[nodiscard]] std::size_t nonzeros() const { return values.size(); }

  template <class V>
  void multiply(const V* x, V* y) const {
    for (std::size_t r = 0; r < dimension; ++r) {
      V acc{};
      for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += values[k] * x[cols[k]];
      y[r] = acc;
    }
  }

  [[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> to_dense() const;
  /// max |A_rc - conj(A_cr)| over stored entries (missing partners count fully).
  [[nodiscard]] double hermiticity_error() const;
};

struct SparseHamiltonian : CsrMatrix<double> {
  bool hermitian = false;
};

/// H(g) = H_static + g * H_coupling on one shared sparsity pattern.
template <class Scalar>
struct ParametricOperator {
  std::size_t dimension = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> cols;
  std::vector<Scalar> static_values;
  std::vector<Scalar> coupling_values;

  [[nodiscard]] std::size_t nonzeros() const { return cols.size(); }

  template <class V>
  void multiply(double g, const V* x, V* y) const {
    for (std::size_t r = 0; r < dimension; ++r) {
      V acc{};
      for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
        acc += (static_values[k] + g * coupling_values[k]) * x[cols[k]];
      }
      y[r] = acc;
    }
  }

  [[nodiscard]] CsrMatrix<Scalar> evaluate(double g) const;
  /// Multiplies both parts by `factor` (factor -1 gives the backward-time generator).
  [[nodiscard]] ParametricOperator scaled(double factor) const;
};

using ParametricHamiltonian = ParametricOperator<double>;

/// Generic number-conserving operator
///   sum_{ij} one_body(i, j) b_i^+ b_j  +  sum_k sum_{abcd} two_body[k](a,b,c,d) b_ka^+ b_kb^+ b_kc b_kd
/// One-body terms go into the static part, two-body terms into the coupling part.
/// `two_body[k]` holds bands^4 entries in (a, b, c, d) row-major order; an empty
/// vector means no interaction on that site.
template <class Scalar>
ParametricOperator<Scalar> assemble_operator(
    const FockBasis& basis, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& one_body,
    const std::vector<std::vector<Scalar>>& two_body);

/// Nearest-neighbour bonds (k, l) of the ring. L = 1 has none; L = 2 has the
/// single bond (0, 1) whether or not the ring is periodic.
std::vector<std::pair<int, int>> lattice_bonds(int sites, bool periodic);

/// Multiband Bose-Hubbard Hamiltonian split as H_1 + g H_U.
ParametricHamiltonian build_mbh_parts(const BHParams& params, const FockBasis& basis, bool periodic);

/// H at the coupling stored in `params`.
SparseHamiltonian build_mbh_hamiltonian(const BHParams& params, const FockBasis& basis, bool periodic);

SparseHamiltonian to_hamiltonian(const CsrMatrix<double>& m);

/// "row col value" lines, one per stored entry, 17 significant digits.
void write_coo(std::ostream& out, const CsrMatrix<double>& m);

inline constexpr std::size_t kDenseLimit = 2000;

/// Complex amplitudes over a Fock basis.
struct MbhState {
  std::shared_ptr<const FockBasis> basis;
  std::vector<std::complex<double>> amplitudes;

  [[nodiscard]] double norm() const;
  /// Basis state |occupation>.
  static MbhState fock(std::shared_ptr<const FockBasis> basis, std::span<const std::uint8_t> occupation);
};

}  // namespace varbh
