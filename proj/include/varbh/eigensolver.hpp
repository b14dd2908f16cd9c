#pragma once

// Extremal eigenpairs of Hermitian operators: restarted Lanczos with full
// reorthogonalisation, plus a dense oracle for small spaces.

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "varbh/fock.hpp"

namespace varbh {

struct LanczosOptions {
  int krylov_dimension = 60;
  int max_restarts = 400;
  double tolerance = 1e-10;  ///< on ||A x - theta x||
  std::uint64_t seed = 0x5eed;
};

template <class Scalar>
struct EigenPair {
  double value = 0.0;
  std::vector<Scalar> vector;
  double residual = 0.0;
  int matvecs = 0;
};

template <class Scalar>
using LinearMap = std::function<void(const Scalar*, Scalar*)>;

/// Lowest eigenpair of the Hermitian map. Throws NumericalError if the
/// residual target is not met within the restart budget. `initial`, when
/// given, replaces the random start vector.
template <class Scalar>
EigenPair<Scalar> lanczos_lowest(std::size_t dimension, const LinearMap<Scalar>& apply,
                                 const LanczosOptions& options = {}, const Scalar* initial = nullptr);

/// Lowest eigenpair by dense diagonalisation.
template <class Scalar>
EigenPair<Scalar> dense_lowest(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& matrix);

struct GroundState {
  double energy = 0.0;
  MbhState state;
  double residual = 0.0;
};

/// Lanczos ground state of a many-body Hamiltonian.
GroundState ground_state(const SparseHamiltonian& hamiltonian, std::shared_ptr<const FockBasis> basis,
                         const LanczosOptions& options = {});

/// Dense-diagonalisation ground state (dimension <= kDenseLimit).
GroundState dense_ground_state(const SparseHamiltonian& hamiltonian, std::shared_ptr<const FockBasis> basis);

/// Lowest eigenpair of a complex Hermitian sparse matrix; dense up to `dense_limit`.
EigenPair<std::complex<double>> lowest_eigenpair(const CsrMatrix<std::complex<double>>& matrix,
                                                 const LanczosOptions& options = {},
                                                 std::size_t dense_limit = kDenseLimit,
                                                 const std::complex<double>* initial = nullptr);

}  // namespace varbh
