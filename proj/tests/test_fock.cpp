#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "varbh/fock.hpp"

using namespace varbh;

namespace {

using Occ = std::vector<std::uint8_t>;

// Brute-force reference: every occupation array by explicit search.
std::map<Occ, std::size_t> enumerate(int modes, int particles) {
  std::map<Occ, std::size_t> out;
  Occ cur(static_cast<std::size_t>(modes), 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == modes - 1) {
      cur[pos] = static_cast<std::uint8_t>(left);
      out.emplace(cur, out.size());
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[pos] = static_cast<std::uint8_t>(v);
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, particles);
  return out;
}

// Dense annihilator of `mode` from the N-particle space to the (N-1)-particle
// space, both enumerated by brute force.
Eigen::MatrixXcd annihilator(const std::map<Occ, std::size_t>& from, const std::map<Occ, std::size_t>& to, int mode) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(to.size()), static_cast<Eigen::Index>(from.size()));
  for (const auto& [occ, col] : from) {
    if (occ[mode] == 0) continue;
    Occ next = occ;
    --next[mode];
    a(static_cast<Eigen::Index>(to.at(next)), static_cast<Eigen::Index>(col)) = std::sqrt(double(occ[mode]));
  }
  return a;
}

BHParams random_params(int bands, std::mt19937_64& rng, double g) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  BHParams p;
  p.num_bands = bands;
  p.g = g;
  p.U = Tensor4(bands);
  for (int b = 0; b < bands; ++b) {
    p.J.push_back(u(rng));
    p.E.push_back(3.0 * b + u(rng));
  }
  for (int a = 0; a < bands; ++a)
    for (int b = 0; b < bands; ++b)
      for (int c = 0; c < bands; ++c)
        for (int d = 0; d < bands; ++d) {
          // Symmetric under all permutations, like a genuine overlap integral.
          std::array<int, 4> idx{a, b, c, d};
          std::sort(idx.begin(), idx.end());
          const double seed = idx[0] * 1000 + idx[1] * 100 + idx[2] * 10 + idx[3];
          p.U(a, b, c, d) = (a + b + c + d) % 2 ? 0.0 : 0.5 + 0.3 * std::sin(seed);
        }
  return p;
}

}  // namespace

TEST_CASE("dimension is the stars-and-bars count") {
  for (int m = 1; m <= 6; ++m)
    for (int n = 1; n <= 5; ++n) {
      const FockBasis b(m, 1, n);
      CHECK(b.dimension() == enumerate(m, n).size());
    }
  CHECK(FockBasis(4, 5, 6).dimension() == 177100);
  CHECK(FockBasis::count(0, 0) == 1);
}

TEST_CASE("ranks invert the enumeration in lexicographic order") {
  const FockBasis b(3, 2, 4);
  const auto ref = enumerate(6, 4);
  REQUIRE(b.dimension() == ref.size());
  for (std::size_t i = 0; i < b.dimension(); ++i) {
    const Occ occ(b.state(i).begin(), b.state(i).end());
    CHECK(b.index(occ) == i);
    CHECK(ref.at(occ) == i);
  }
}

TEST_CASE("site rank deltas agree with full re-ranking") {
  const FockBasis b(3, 3, 4);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t i = rng() % b.dimension();
    Occ occ(b.state(i).begin(), b.state(i).end());
    const int site = static_cast<int>(rng() % 3);
    int before = 0;
    for (int k = 0; k < site; ++k)
      for (int a = 0; a < 3; ++a) before += occ[k * 3 + a];
    int total = 0;
    for (int a = 0; a < 3; ++a) total += occ[site * 3 + a];
    Occ after = occ;
    // Random redistribution of the site's particles over its bands.
    for (int a = 0; a < 3; ++a) after[site * 3 + a] = 0;
    for (int n = 0; n < total; ++n) ++after[site * 3 + rng() % 3];
    const auto delta = b.site_rank_delta(site, before, occ.data() + site * 3, after.data() + site * 3);
    CHECK(static_cast<std::int64_t>(b.index(after)) - static_cast<std::int64_t>(i) == delta);
  }
}

TEST_CASE("ladder operators carry sqrt(n) amplitudes") {
  const FockBasis b(2, 2, 3);
  const FockBasis down(2, 2, 2);
  for (std::size_t i = 0; i < b.dimension(); ++i) {
    for (int mode = 0; mode < 4; ++mode) {
      const auto r = apply_ladder(b, i, mode / 2, mode % 2, Ladder::annihilate);
      const int n = b.state(i)[mode];
      CHECK(r.valid == (n > 0));
      if (!r.valid) continue;
      CHECK(r.amplitude == doctest::Approx(std::sqrt(double(n))));
      CHECK(down.state(r.index)[mode] == n - 1);
    }
  }
}

TEST_CASE("assembled operators match dense second quantisation") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  const int sites = 2, bands = 2, N = 3, M = sites * bands;
  const FockBasis basis(sites, bands, N);
  const auto s3 = enumerate(M, N), s2 = enumerate(M, N - 1), s1 = enumerate(M, N - 2);

  Eigen::MatrixXcd h1(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j <= i; ++j) {
      const cplx z(nd(rng), i == j ? 0.0 : nd(rng));
      h1(i, j) = z;
      h1(j, i) = std::conj(z);
    }
  std::vector<std::vector<cplx>> v(sites, std::vector<cplx>(16));
  for (auto& site : v)
    for (auto& x : site) x = cplx(nd(rng), nd(rng));

  const auto op = assemble_operator<cplx>(basis, h1, v);
  const Eigen::MatrixXcd got = op.evaluate(1.0).to_dense();

  std::vector<Eigen::MatrixXcd> A, B;
  for (int m = 0; m < M; ++m) {
    A.push_back(annihilator(s3, s2, m));
    B.push_back(annihilator(s2, s1, m));
  }
  Eigen::MatrixXcd want = Eigen::MatrixXcd::Zero(got.rows(), got.cols());
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) want += h1(i, j) * A[i].adjoint() * A[j];
  for (int k = 0; k < sites; ++k)
    for (int a = 0; a < bands; ++a)
      for (int b = 0; b < bands; ++b)
        for (int c = 0; c < bands; ++c)
          for (int d = 0; d < bands; ++d) {
            const cplx x = v[k][((a * bands + b) * bands + c) * bands + d];
            const int ma = k * bands + a, mb = k * bands + b, mc = k * bands + c, md = k * bands + d;
            want += x * A[ma].adjoint() * B[mb].adjoint() * B[mc] * A[md];
          }
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("MBH Hamiltonians are Hermitian") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const BHParams p = random_params(3, rng, 1.7);
    const FockBasis b(3, 3, 3);
    const auto h = build_mbh_hamiltonian(p, b, true);
    CHECK(h.hermitian);
    CHECK(h.hermiticity_error() < 1e-12);
  }
}

TEST_CASE("single site, single band: E N + g U N (N - 1) / 2") {
  std::mt19937_64 rng(9);
  const BHParams p = random_params(1, rng, 2.3);
  for (int n = 1; n <= 6; ++n) {
    const FockBasis b(1, 1, n);
    const auto h = build_mbh_hamiltonian(p, b, false).to_dense();
    CHECK(h(0, 0) == doctest::Approx(p.E[0] * n + 0.5 * p.g * p.U(0, 0, 0, 0) * n * (n - 1)));
  }
}

TEST_CASE("non-interacting ground state fills the lowest Bloch level") {
  std::mt19937_64 rng(21);
  const BHParams p = random_params(2, rng, 0.0);
  const int L = 4, N = 3;
  const FockBasis b(L, 2, N);
  const Eigen::MatrixXd h = build_mbh_hamiltonian(p, b, true).to_dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  double single = 1e300;
  for (int band = 0; band < 2; ++band)
    for (int j = 0; j < L; ++j) single = std::min(single, p.E[band] - 2.0 * p.J[band] * std::cos(2.0 * kPi * j / L));
  CHECK(eig.eigenvalues()(0) == doctest::Approx(N * single).epsilon(1e-12));
}

TEST_CASE("parametric split reproduces H at any coupling") {
  std::mt19937_64 rng(2);
  BHParams p = random_params(2, rng, 0.0);
  const FockBasis b(3, 2, 3);
  const auto parts = build_mbh_parts(p, b, true);
  for (double g : {0.0, 0.4, 3.0}) {
    p.g = g;
    const auto direct = build_mbh_hamiltonian(p, b, true).to_dense();
    CHECK((parts.evaluate(g).to_dense() - direct).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("bonds of open and periodic chains") {
  CHECK(lattice_bonds(1, true).empty());
  CHECK(lattice_bonds(2, true).size() == 1);
  CHECK(lattice_bonds(4, true).size() == 4);
  CHECK(lattice_bonds(4, false).size() == 3);
}

TEST_CASE("Fock states and limits") {
  auto b = std::make_shared<const FockBasis>(2, 2, 2);
  const Occ occ{1, 0, 0, 1};
  const MbhState s = MbhState::fock(b, occ);
  CHECK(s.norm() == doctest::Approx(1.0));
  CHECK(s.amplitudes[b->index(occ)] == cplx(1.0, 0.0));
  CHECK_THROWS_AS(MbhState::fock(b, Occ{1, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(FockBasis(10, 10, 10, 1000), std::invalid_argument);
  CHECK_THROWS_AS(FockBasis(0, 1, 1), std::invalid_argument);
}

TEST_CASE("COO export writes one line per stored entry") {
  const FockBasis b(1, 1, 2);
  std::mt19937_64 rng(1);
  const auto h = build_mbh_hamiltonian(random_params(1, rng, 1.0), b, false);
  std::ostringstream out;
  write_coo(out, h);
  CHECK(out.str().find("0 0 ") == 0);
}
