#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "varbh/eigensolver.hpp"
#include "varbh/hubbard.hpp"

using namespace varbh;

namespace {

const BHParams& params() {
  static const BHParams p = compute_bh_params({10.0, 4, 16}, 4, 1.0, 1024);
  return p;
}

CsrMatrix<cplx> random_hermitian(std::size_t n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = 4.0 * u(rng);
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(u(rng)) > density) continue;
      m(i, j) = cplx(u(rng), u(rng));
      m(j, i) = std::conj(m(i, j));
    }
  }
  CsrMatrix<cplx> out;
  out.dimension = n;
  out.row_ptr.push_back(0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (m(r, c) == cplx{}) continue;
      out.cols.push_back(static_cast<std::uint32_t>(c));
      out.values.push_back(m(r, c));
    }
    out.row_ptr.push_back(out.cols.size());
  }
  return out;
}

}  // namespace

TEST_CASE("Lanczos agrees with dense diagonalisation on every small MBH space") {
  struct Shape {
    int sites, bands, particles;
    bool periodic;
  };
  const Shape shapes[] = {{4, 1, 6, true}, {4, 2, 6, true}, {4, 3, 3, true}, {3, 3, 4, true},
                          {3, 4, 3, false}, {2, 4, 4, false}, {1, 4, 2, false}, {4, 4, 2, true}};
  for (const auto& s : shapes) {
    auto basis = std::make_shared<const FockBasis>(s.sites, s.bands, s.particles);
    REQUIRE(basis->dimension() <= kDenseLimit);
    for (double g : {0.2, 4.0}) {
      const BHParams p = params().truncated(s.bands).with_coupling(g);
      const auto h = build_mbh_hamiltonian(p, *basis, s.periodic);
      const GroundState dense = dense_ground_state(h, basis);
      const GroundState iter = ground_state(h, basis);
      CAPTURE(basis->dimension());
      CHECK(std::abs(dense.energy - iter.energy) < 1e-10);
      CHECK(iter.residual < 1e-9);
      CHECK(std::abs(iter.state.norm() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("complex Hermitian matrices: Lanczos, dense and warm start agree") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const CsrMatrix<cplx> m = random_hermitian(300, 0.05, seed);
    const auto dense = lowest_eigenpair(m, {}, 1000);
    const auto iter = lowest_eigenpair(m, {}, 0);
    CHECK(std::abs(dense.value - iter.value) < 1e-10);
    const auto warm = lowest_eigenpair(m, {}, 0, dense.vector.data());
    CHECK(std::abs(warm.value - dense.value) < 1e-10);
    CHECK(warm.matvecs <= iter.matvecs);
  }
}

TEST_CASE("degenerate ground states converge in energy") {
  // Free bosons on a ring: single-particle levels come in +-q pairs.
  const BHParams p = params().truncated(1).with_coupling(0.0);
  auto basis = std::make_shared<const FockBasis>(6, 1, 1);
  const auto h = build_mbh_hamiltonian(p, *basis, true);
  const auto dense = dense_lowest<double>(h.to_dense());
  const auto iter = ground_state(h, basis);
  CHECK(std::abs(dense.value - iter.energy) < 1e-10);
  CHECK(dense.value == doctest::Approx(p.E[0] - 2.0 * p.J[0]).epsilon(1e-12));
}

TEST_CASE("one-dimensional spaces") {
  auto basis = std::make_shared<const FockBasis>(1, 1, 3);
  const auto h = build_mbh_hamiltonian(params().truncated(1).with_coupling(1.0), *basis, false);
  const auto gs = ground_state(h, basis);
  CHECK(gs.energy == doctest::Approx(h.values[0]));
}

TEST_CASE("dense fallback refuses large spaces") {
  auto basis = std::make_shared<const FockBasis>(4, 3, 6);
  const auto h = build_mbh_hamiltonian(params().truncated(3), *basis, true);
  CHECK_THROWS_AS(dense_ground_state(h, basis), std::invalid_argument);
}
