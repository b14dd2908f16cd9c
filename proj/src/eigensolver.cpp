#include "varbh/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "varbh/errors.hpp"

namespace varbh {

namespace {

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
Vec<Scalar> random_start(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vec<Scalar> v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if constexpr (std::is_same_v<Scalar, double>) {
      v(i) = dist(rng);
    } else {
      const double re = dist(rng);
      v(i) = Scalar(re, dist(rng));
    }
  }
  return v / v.norm();
}

// Fix the global phase so the largest-magnitude component is real positive.
template <class Scalar>
void fix_phase(Vec<Scalar>& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  const Scalar pivot = v(arg);
  if (std::abs(pivot) == 0.0) return;
  if constexpr (std::is_same_v<Scalar, double>) {
    if (pivot < 0.0) v = -v;
  } else {
    v *= std::conj(pivot) / std::abs(pivot);
  }
}

}  // namespace

template <class Scalar>
EigenPair<Scalar> lanczos_lowest(std::size_t dimension, const LinearMap<Scalar>& apply,
                                 const LanczosOptions& options, const Scalar* initial) {
  if (dimension == 0) throw std::invalid_argument("empty operator");
  const Eigen::Index n = static_cast<Eigen::Index>(dimension);
  const Eigen::Index kmax = std::min<Eigen::Index>(options.krylov_dimension, n);

  EigenPair<Scalar> out;
  Vec<Scalar> start = random_start<Scalar>(dimension, options.seed);
  if (initial != nullptr) {
    const Vec<Scalar> guess = Eigen::Map<const Vec<Scalar>>(initial, n);
    // A small random admixture keeps the start from being orthogonal to the target.
    if (guess.norm() > 0.0) start = (guess / guess.norm() + 1e-3 * start).normalized();
  }
  Mat<Scalar> basis(n, kmax);
  Vec<Scalar> w(n);
  Vec<Scalar> ax(n);
  std::vector<double> alpha;
  std::vector<double> beta;

  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    alpha.clear();
    beta.clear();
    basis.col(0) = start;
    Eigen::Index used = 0;
    for (Eigen::Index j = 0; j < kmax; ++j) {
      used = j + 1;
      apply(basis.col(j).data(), w.data());
      ++out.matvecs;
      alpha.push_back(std::real(basis.col(j).dot(w)));
      // Full reorthogonalisation, applied twice.
      for (int pass = 0; pass < 2; ++pass) {
        const Vec<Scalar> coeff = basis.leftCols(j + 1).adjoint() * w;
        w.noalias() -= basis.leftCols(j + 1) * coeff;
      }
      const double b = w.norm();
      if (j + 1 == kmax || b < 1e-13 * (1.0 + std::abs(alpha.back()))) break;
      // Early exit once the Ritz residual estimate beta_j |y_j| is far below target.
      if (j >= 4 && j % 4 == 0) {
        Eigen::VectorXd d(j + 1);
        Eigen::VectorXd e(j);
        for (Eigen::Index i = 0; i <= j; ++i) d(i) = alpha[i];
        for (Eigen::Index i = 0; i < j; ++i) e(i) = beta[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> probe;
        probe.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
        if (b * std::abs(probe.eigenvectors()(j, 0)) < 1e-2 * options.tolerance) break;
      }
      beta.push_back(b);
      basis.col(j + 1) = w / b;
    }

    Eigen::VectorXd diag(used);
    Eigen::VectorXd sub(std::max<Eigen::Index>(used - 1, 0));
    for (Eigen::Index i = 0; i < used; ++i) diag(i) = alpha[i];
    for (Eigen::Index i = 0; i + 1 < used; ++i) sub(i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    if (used == 1) {
      out.value = diag(0);
      start = basis.col(0);
    } else {
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      out.value = tri.eigenvalues()(0);
      const Eigen::VectorXd y = tri.eigenvectors().col(0);
      start = basis.leftCols(used) * y.cast<Scalar>();
    }
    start /= start.norm();

    apply(start.data(), ax.data());
    ++out.matvecs;
    out.value = std::real(start.dot(ax));
    out.residual = (ax - out.value * start).norm();
    if (out.residual < options.tolerance) {
      fix_phase(start);
      out.vector.assign(start.data(), start.data() + n);
      return out;
    }
  }
  throw NumericalError("Lanczos did not converge: residual " + std::to_string(out.residual) + " after " +
                       std::to_string(options.max_restarts) + " restarts");
}

template <class Scalar>
EigenPair<Scalar> dense_lowest(const Mat<Scalar>& matrix) {
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> eig(matrix);
  if (eig.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  EigenPair<Scalar> out;
  out.value = eig.eigenvalues()(0);
  Vec<Scalar> v = eig.eigenvectors().col(0);
  fix_phase(v);
  out.residual = (matrix * v - out.value * v).norm();
  out.vector.assign(v.data(), v.data() + v.size());
  return out;
}

template EigenPair<double> lanczos_lowest<double>(std::size_t, const LinearMap<double>&, const LanczosOptions&,
                                                  const double*);
template EigenPair<std::complex<double>> lanczos_lowest<std::complex<double>>(
    std::size_t, const LinearMap<std::complex<double>>&, const LanczosOptions&, const std::complex<double>*);
template EigenPair<double> dense_lowest<double>(const Eigen::MatrixXd&);
template EigenPair<std::complex<double>> dense_lowest<std::complex<double>>(const Eigen::MatrixXcd&);

namespace {

GroundState to_ground_state(const EigenPair<double>& pair, std::shared_ptr<const FockBasis> basis) {
  GroundState gs;
  gs.energy = pair.value;
  gs.residual = pair.residual;
  gs.state.basis = std::move(basis);
  gs.state.amplitudes.assign(pair.vector.begin(), pair.vector.end());
  return gs;
}

void check_dimensions(const SparseHamiltonian& h, const FockBasis& basis) {
  if (h.dimension != basis.dimension()) throw std::invalid_argument("Hamiltonian and basis dimensions differ");
}

}  // namespace

GroundState ground_state(const SparseHamiltonian& hamiltonian, std::shared_ptr<const FockBasis> basis,
                         const LanczosOptions& options) {
  check_dimensions(hamiltonian, *basis);
  if (!hamiltonian.hermitian) throw std::invalid_argument("ground_state needs a Hermitian Hamiltonian");
  const LinearMap<double> apply = [&](const double* x, double* y) { hamiltonian.multiply(x, y); };
  return to_ground_state(lanczos_lowest<double>(hamiltonian.dimension, apply, options), std::move(basis));
}

GroundState dense_ground_state(const SparseHamiltonian& hamiltonian, std::shared_ptr<const FockBasis> basis) {
  check_dimensions(hamiltonian, *basis);
  if (hamiltonian.dimension > kDenseLimit) throw std::invalid_argument("dense fallback limited to 2000 states");
  return to_ground_state(dense_lowest<double>(hamiltonian.to_dense()), std::move(basis));
}

EigenPair<std::complex<double>> lowest_eigenpair(const CsrMatrix<std::complex<double>>& matrix,
                                                 const LanczosOptions& options, std::size_t dense_limit,
                                                 const std::complex<double>* initial) {
  if (matrix.dimension <= dense_limit) return dense_lowest<std::complex<double>>(matrix.to_dense());
  const LinearMap<std::complex<double>> apply = [&](const std::complex<double>* x, std::complex<double>* y) {
    matrix.multiply(x, y);
  };
  return lanczos_lowest<std::complex<double>>(matrix.dimension, apply, options, initial);
}

}  // namespace varbh
