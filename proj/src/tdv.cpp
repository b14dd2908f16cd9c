#include "varbh/tdv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "varbh/errors.hpp"

namespace varbh {

namespace {

void check_compatible(const TdvState& state, const BHParams& params) {
  if (state.frames.empty()) throw std::invalid_argument("TDV state has no sites");
  if (!state.reduced) throw std::invalid_argument("TDV state has no reduced basis");
  if (state.reduced->sites() != state.sites() || state.reduced->bands() != state.variational_bands()) {
    throw std::invalid_argument("reduced basis does not match the mode frames");
  }
  if (static_cast<std::size_t>(state.C.size()) != state.reduced->dimension()) {
    throw std::invalid_argument("C has the wrong length");
  }
  if (state.fixed_bands() > params.num_bands) throw std::invalid_argument("frames use more bands than the parameters");
}

void require_single_mode(const TdvState& state) {
  if (state.variational_bands() != 1) throw std::invalid_argument("only D = 1 states can be evolved");
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

TdvState tdv_fock_state(int fixed_bands, const std::vector<int>& occupation, const std::vector<int>& band) {
  if (occupation.empty() || occupation.size() != band.size()) {
    throw std::invalid_argument("occupation and band lists must be non-empty and of equal length");
  }
  const int L = static_cast<int>(occupation.size());
  TdvState s;
  std::vector<std::uint8_t> occ(L);
  int total = 0;
  for (int k = 0; k < L; ++k) {
    if (band[k] < 0 || band[k] >= fixed_bands) throw std::invalid_argument("band index out of range");
    if (occupation[k] < 0 || occupation[k] > 255) throw std::invalid_argument("occupation out of range");
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(fixed_bands, 1);
    x(band[k], 0) = 1.0;
    s.frames.push_back(x);
    occ[k] = static_cast<std::uint8_t>(occupation[k]);
    total += occupation[k];
  }
  if (total < 1) throw std::invalid_argument("state needs at least one particle");
  s.reduced = std::make_shared<FockBasis>(L, 1, total);
  s.C = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(s.reduced->dimension()));
  s.C(static_cast<Eigen::Index>(s.reduced->index(occ))) = 1.0;
  return s;
}

double frame_orthonormality_error(const TdvState& state) {
  double err = 0.0;
  for (const auto& x : state.frames) {
    const Eigen::MatrixXcd gram = x.adjoint() * x;
    err = std::max(err, (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff());
  }
  return err;
}

TdvParameters tdv_parameters(const TdvState& state, const BHParams& params, bool periodic) {
  check_compatible(state, params);
  require_single_mode(state);
  const int L = state.sites();
  const int nv = state.fixed_bands();
  TdvParameters out;
  out.bonds = lattice_bonds(L, periodic);
  for (const auto& [k, l] : out.bonds) {
    cplx j{0.0, 0.0};
    for (int a = 0; a < nv; ++a) j += std::conj(state.frames[k](a, 0)) * params.J[a] * state.frames[l](a, 0);
    out.J_bond.push_back(j);
  }
  for (int k = 0; k < L; ++k) {
    const auto& d = state.frames[k];
    double e = 0.0;
    for (int a = 0; a < nv; ++a) e += std::norm(d(a, 0)) * params.E[a];
    cplx u{0.0, 0.0};
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b)
        for (int c = 0; c < nv; ++c)
          for (int dd = 0; dd < nv; ++dd) {
            const double t = params.U(a, b, c, dd);
            if (t == 0.0) continue;
            u += t * std::conj(d(a, 0)) * std::conj(d(b, 0)) * d(c, 0) * d(dd, 0);
          }
    out.E_site.push_back(e);
    out.U_site.push_back(params.g * u.real());
  }
  return out;
}

TdvDensities tdv_densities(const FockBasis& reduced, const Eigen::VectorXcd& C) {
  if (static_cast<std::size_t>(C.size()) != reduced.dimension()) throw std::invalid_argument("C has the wrong length");
  const int M = reduced.modes();
  const int D = reduced.bands();
  const int L = reduced.sites();
  TdvDensities out;
  out.rho1 = Eigen::MatrixXcd::Zero(M, M);
  const std::size_t d4 = static_cast<std::size_t>(D) * D * D * D;
  out.rho2.assign(L, std::vector<cplx>(d4, cplx{0.0, 0.0}));

  std::vector<std::uint8_t> occ(M);
  for (std::size_t i = 0; i < reduced.dimension(); ++i) {
    const cplx ci = C(static_cast<Eigen::Index>(i));
    if (ci == cplx{0.0, 0.0}) continue;
    const auto s = reduced.state(i);
    std::copy(s.begin(), s.end(), occ.begin());
    for (int n = 0; n < M; ++n) {
      if (occ[n] == 0) continue;
      const double an = std::sqrt(static_cast<double>(occ[n]));
      --occ[n];
      for (int m = 0; m < M; ++m) {
        const double am = std::sqrt(static_cast<double>(occ[m] + 1));
        ++occ[m];
        const std::size_t j = reduced.index(occ);
        out.rho1(m, n) += std::conj(C(static_cast<Eigen::Index>(j))) * ci * (an * am);
        --occ[m];
      }
      ++occ[n];
    }
    for (int k = 0; k < L; ++k) {
      std::uint8_t* o = occ.data() + k * D;
      for (int nu = 0; nu < D; ++nu) {
        if (o[nu] == 0) continue;
        const double a1 = std::sqrt(static_cast<double>(o[nu]));
        --o[nu];
        for (int mu = 0; mu < D; ++mu) {
          if (o[mu] == 0) continue;
          const double a2 = a1 * std::sqrt(static_cast<double>(o[mu]));
          --o[mu];
          for (int la = 0; la < D; ++la) {
            const double a3 = a2 * std::sqrt(static_cast<double>(o[la] + 1));
            ++o[la];
            for (int ka = 0; ka < D; ++ka) {
              const double a4 = a3 * std::sqrt(static_cast<double>(o[ka] + 1));
              ++o[ka];
              const std::size_t j = reduced.index(occ);
              out.rho2[k][((static_cast<std::size_t>(ka) * D + la) * D + mu) * D + nu] +=
                  std::conj(C(static_cast<Eigen::Index>(j))) * ci * a4;
              --o[ka];
            }
            --o[la];
          }
          ++o[mu];
        }
        ++o[nu];
      }
    }
  }
  if (D == 1) {
    for (int k = 0; k < L; ++k) out.rho2_diag.push_back(out.rho2[k][0].real());
  }
  return out;
}

namespace {

// (1/2) sum U^{abcd} conj(X_ak) conj(X_bl) X_cm X_dn for one site, (k,l,m,n) row-major.
std::vector<cplx> projected_interaction(const Eigen::MatrixXcd& x, const BHParams& params) {
  const int nv = static_cast<int>(x.rows());
  const int D = static_cast<int>(x.cols());
  // t1[a b c][n] = sum_d U^{abcd} X_dn, then contract remaining indices one at a time.
  std::vector<cplx> cur(static_cast<std::size_t>(nv) * nv * nv * nv);
  for (int a = 0; a < nv; ++a)
    for (int b = 0; b < nv; ++b)
      for (int c = 0; c < nv; ++c)
        for (int d = 0; d < nv; ++d) cur[((a * nv + b) * nv + c) * nv + d] = params.U(a, b, c, d);

  // Replace the last index by a mode index (contract with X), then rotate it to the front.
  auto contract_last = [&](const std::vector<cplx>& in, int lead, bool conjugate) {
    // in: [lead][nv]; out: [D][lead] (mode index moved to the front)
    std::vector<cplx> out(static_cast<std::size_t>(D) * lead, cplx{0.0, 0.0});
    for (int r = 0; r < lead; ++r)
      for (int mu = 0; mu < D; ++mu) {
        cplx acc{0.0, 0.0};
        for (int a = 0; a < nv; ++a) {
          const cplx xv = conjugate ? std::conj(x(a, mu)) : x(a, mu);
          acc += in[static_cast<std::size_t>(r) * nv + a] * xv;
        }
        out[static_cast<std::size_t>(mu) * lead + r] = acc;
      }
    return out;
  };
  // Index layout evolves (a b c d) -> (n a b c) -> (m n a b) -> (l m n a) -> (k l m n).
  cur = contract_last(cur, nv * nv * nv, false);
  cur = contract_last(cur, D * nv * nv, false);
  cur = contract_last(cur, D * D * nv, true);
  cur = contract_last(cur, D * D * D, true);
  for (auto& v : cur) v *= 0.5;
  return cur;
}

Eigen::MatrixXcd projected_one_body(const TdvState& state, const BHParams& params, bool periodic) {
  const int L = state.sites();
  const int D = state.variational_bands();
  const int nv = state.fixed_bands();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(L * D, L * D);
  const Eigen::VectorXd E = Eigen::Map<const Eigen::VectorXd>(params.E.data(), nv);
  const Eigen::VectorXd J = Eigen::Map<const Eigen::VectorXd>(params.J.data(), nv);
  for (int k = 0; k < L; ++k) {
    const auto& x = state.frames[k];
    h.block(k * D, k * D, D, D) = x.adjoint() * E.asDiagonal() * x;
  }
  for (const auto& [k, l] : lattice_bonds(L, periodic)) {
    const Eigen::MatrixXcd t = -(state.frames[k].adjoint() * J.asDiagonal() * state.frames[l]);
    h.block(k * D, l * D, D, D) += t;
    h.block(l * D, k * D, D, D) += t.adjoint();
  }
  return h;
}

}  // namespace

ParametricOperator<cplx> reduced_hamiltonian(const TdvState& state, const BHParams& params, bool periodic) {
  check_compatible(state, params);
  std::vector<std::vector<cplx>> two_body;
  two_body.reserve(state.frames.size());
  for (const auto& x : state.frames) two_body.push_back(projected_interaction(x, params));
  return assemble_operator<cplx>(*state.reduced, projected_one_body(state, params, periodic), two_body);
}

double tdv_energy(const TdvState& state, const BHParams& params, double g, bool periodic) {
  const auto h = reduced_hamiltonian(state, params, periodic);
  Eigen::VectorXcd y(state.C.size());
  h.multiply(g, state.C.data(), y.data());
  return state.C.dot(y).real();
}

std::vector<Eigen::MatrixXcd> frame_gradient(const TdvState& state, const TdvDensities& densities,
                                             const BHParams& params, double g, bool periodic) {
  check_compatible(state, params);
  const int L = state.sites();
  const int D = state.variational_bands();
  const int nv = state.fixed_bands();
  std::vector<Eigen::MatrixXcd> grad(L, Eigen::MatrixXcd::Zero(nv, D));

  // One-body part: sum_{l,nu} rho(k m, l nu) h^a_{kl} X_l(a, nu).
  for (int k = 0; k < L; ++k) {
    const Eigen::MatrixXcd rho = densities.rho1.block(k * D, k * D, D, D);
    for (int a = 0; a < nv; ++a) grad[k].row(a) += params.E[a] * (state.frames[k].row(a) * rho.transpose());
  }
  for (const auto& [k, l] : lattice_bonds(L, periodic)) {
    const Eigen::MatrixXcd rkl = densities.rho1.block(k * D, l * D, D, D);
    const Eigen::MatrixXcd rlk = densities.rho1.block(l * D, k * D, D, D);
    for (int a = 0; a < nv; ++a) {
      grad[k].row(a) -= params.J[a] * (state.frames[l].row(a) * rkl.transpose());
      grad[l].row(a) -= params.J[a] * (state.frames[k].row(a) * rlk.transpose());
    }
  }

  // Interaction part: g sum_{l m n} rho2_k(m' l m n) sum_{bcd} U^{abcd} conj(X_bl) X_cm X_dn.
  for (int k = 0; k < L; ++k) {
    const auto& x = state.frames[k];
    const auto& r2 = densities.rho2[k];
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b)
        for (int c = 0; c < nv; ++c)
          for (int d = 0; d < nv; ++d) {
            const double u = params.U(a, b, c, d);
            if (u == 0.0) continue;
            for (int kp = 0; kp < D; ++kp) {
              cplx acc{0.0, 0.0};
              for (int la = 0; la < D; ++la)
                for (int mu = 0; mu < D; ++mu)
                  for (int nu = 0; nu < D; ++nu) {
                    acc += r2[((static_cast<std::size_t>(kp) * D + la) * D + mu) * D + nu] * std::conj(x(b, la)) *
                           x(c, mu) * x(d, nu);
                  }
              grad[k](a, kp) += g * u * acc;
            }
          }
  }
  return grad;
}

namespace {

// Precomputed single-mode (D = 1) structure: number operators and hopping
// matrix elements of the reduced basis, so the evolution equations can be
// evaluated without reassembling the reduced Hamiltonian.
class SingleModeSystem {
 public:
  SingleModeSystem(const FockBasis& reduced, const BHParams& params, int fixed_bands, bool periodic)
      : L_(reduced.sites()), nv_(fixed_bands), dim_(reduced.dimension()), bonds_(lattice_bonds(L_, periodic)) {
    E_.assign(params.E.begin(), params.E.begin() + nv_);
    J_.assign(params.J.begin(), params.J.begin() + nv_);
    U_.resize(static_cast<std::size_t>(nv_) * nv_ * nv_ * nv_);
    for (int a = 0; a < nv_; ++a)
      for (int b = 0; b < nv_; ++b)
        for (int c = 0; c < nv_; ++c)
          for (int d = 0; d < nv_; ++d) U_[((a * nv_ + b) * nv_ + c) * nv_ + d] = params.U(a, b, c, d);

    n_.assign(L_, std::vector<double>(dim_));
    hops_.resize(bonds_.size());
    std::vector<std::uint8_t> occ(L_);
    for (std::size_t i = 0; i < dim_; ++i) {
      const auto st = reduced.state(i);
      for (int k = 0; k < L_; ++k) n_[k][i] = st[k];
      for (std::size_t b = 0; b < bonds_.size(); ++b) {
        const auto [k, l] = bonds_[b];
        if (st[l] == 0) continue;
        std::copy(st.begin(), st.end(), occ.begin());
        const double amp = std::sqrt(static_cast<double>(occ[l]) * (occ[k] + 1));
        --occ[l];
        ++occ[k];
        hops_[b].push_back({static_cast<std::uint32_t>(reduced.index(occ)), static_cast<std::uint32_t>(i), amp});
      }
    }
  }

  [[nodiscard]] std::size_t packed_size() const { return static_cast<std::size_t>(L_) * nv_ + dim_; }

  // y = [d_0, ..., d_{L-1}, C]; dy = time derivative with C shifted by `shift`.
  void rhs(const cplx* y, double g, double shift, cplx* dy) const {
    const cplx* C = y + static_cast<std::size_t>(L_) * nv_;
    cplx* dC = dy + static_cast<std::size_t>(L_) * nv_;
    thread_local std::vector<cplx> cubic;
    thread_local std::vector<cplx> scratch;
    cubic.assign(static_cast<std::size_t>(L_) * nv_, cplx{0.0, 0.0});
    scratch.resize(static_cast<std::size_t>(nv_) * nv_ * nv_);

    std::vector<double> e_site(L_), u_site(L_);
    for (int k = 0; k < L_; ++k) {
      const cplx* d = y + k * nv_;
      // cubic^a = sum_{bcd} U^{abcd} conj(d^b) d^c d^d, contracted one index at a time.
      for (int abc = 0; abc < nv_ * nv_ * nv_; ++abc) {
        cplx acc{0.0, 0.0};
        const double* u = U_.data() + static_cast<std::size_t>(abc) * nv_;
        for (int dd = 0; dd < nv_; ++dd) acc += u[dd] * d[dd];
        scratch[abc] = acc;
      }
      double e = 0.0;
      cplx uk{0.0, 0.0};
      for (int a = 0; a < nv_; ++a) {
        cplx acc{0.0, 0.0};
        for (int b = 0; b < nv_; ++b) {
          cplx inner{0.0, 0.0};
          for (int c = 0; c < nv_; ++c) inner += scratch[(a * nv_ + b) * nv_ + c] * d[c];
          acc += std::conj(d[b]) * inner;
        }
        cubic[k * nv_ + a] = acc;
        uk += std::conj(d[a]) * acc;
        e += std::norm(d[a]) * E_[a];
      }
      e_site[k] = e;
      u_site[k] = g * uk.real();
    }
    std::vector<cplx> j_bond(bonds_.size());
    for (std::size_t b = 0; b < bonds_.size(); ++b) {
      const cplx* dk = y + bonds_[b].first * nv_;
      const cplx* dl = y + bonds_[b].second * nv_;
      cplx acc{0.0, 0.0};
      for (int a = 0; a < nv_; ++a) acc += std::conj(dk[a]) * J_[a] * dl[a];
      j_bond[b] = acc;
    }

    // Reduced Bose-Hubbard action on C, and the densities.
    std::vector<double> rho(L_, 0.0), rho2(L_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
      double diag = -shift;
      const double w = std::norm(C[i]);
      for (int k = 0; k < L_; ++k) {
        const double n = n_[k][i];
        diag += e_site[k] * n + 0.5 * u_site[k] * n * (n - 1.0);
        rho[k] += w * n;
        rho2[k] += w * n * (n - 1.0);
      }
      dC[i] = diag * C[i];
    }
    std::vector<cplx> rho_bond(bonds_.size(), cplx{0.0, 0.0});
    for (std::size_t b = 0; b < bonds_.size(); ++b) {
      const cplx jb = j_bond[b];
      cplx acc{0.0, 0.0};
      for (const Hop& h : hops_[b]) {
        dC[h.row] -= jb * h.amp * C[h.col];
        dC[h.col] -= std::conj(jb) * h.amp * C[h.row];
        acc += std::conj(C[h.row]) * h.amp * C[h.col];
      }
      rho_bond[b] = acc;
    }
    for (std::size_t i = 0; i < dim_; ++i) dC[i] *= cplx(0.0, -1.0);

    // Mode equations: i d_k' = P_k F_k with F_k = G_k / rho_kk.
    for (int k = 0; k < L_; ++k) {
      if (rho[k] < kMinSiteDensity) {
        throw NumericalError("site " + std::to_string(k) + " density " + std::to_string(rho[k]) +
                             " is too small for the mode equation");
      }
    }
    std::vector<cplx> f(static_cast<std::size_t>(L_) * nv_);
    for (int k = 0; k < L_; ++k) {
      const cplx* d = y + k * nv_;
      for (int a = 0; a < nv_; ++a) f[k * nv_ + a] = rho[k] * E_[a] * d[a] + rho2[k] * g * cubic[k * nv_ + a];
    }
    for (std::size_t b = 0; b < bonds_.size(); ++b) {
      const auto [k, l] = bonds_[b];
      for (int a = 0; a < nv_; ++a) {
        f[k * nv_ + a] -= J_[a] * rho_bond[b] * y[l * nv_ + a];
        f[l * nv_ + a] -= J_[a] * std::conj(rho_bond[b]) * y[k * nv_ + a];
      }
    }
    for (int k = 0; k < L_; ++k) {
      const cplx* d = y + k * nv_;
      cplx* fk = f.data() + k * nv_;
      cplx overlap{0.0, 0.0};
      for (int a = 0; a < nv_; ++a) {
        fk[a] /= rho[k];
        overlap += std::conj(d[a]) * fk[a];
      }
      for (int a = 0; a < nv_; ++a) dy[k * nv_ + a] = cplx(0.0, -1.0) * (fk[a] - d[a] * overlap);
    }
  }

 private:
  struct Hop {
    std::uint32_t row;
    std::uint32_t col;
    double amp;  ///< <row| a_k^+ a_l |col>
  };
  int L_;
  int nv_;
  std::size_t dim_;
  std::vector<std::pair<int, int>> bonds_;
  std::vector<double> E_, J_, U_;
  std::vector<std::vector<double>> n_;
  std::vector<std::vector<Hop>> hops_;
};

using Packed = Eigen::VectorXcd;

Packed pack(const TdvState& s) {
  const int nv = s.fixed_bands();
  Packed y(static_cast<Eigen::Index>(s.sites()) * nv + s.C.size());
  for (int k = 0; k < s.sites(); ++k) y.segment(k * nv, nv) = s.frames[k].col(0);
  y.tail(s.C.size()) = s.C;
  return y;
}

void unpack(const Packed& y, TdvState& s) {
  const int nv = s.fixed_bands();
  for (int k = 0; k < s.sites(); ++k) s.frames[k].col(0) = y.segment(k * nv, nv);
  s.C = y.tail(s.C.size());
}

}  // namespace

TdvDerivative tdv_rhs(const TdvState& state, const BHParams& params, double g, bool periodic) {
  check_compatible(state, params);
  require_single_mode(state);
  const SingleModeSystem system(*state.reduced, params, state.fixed_bands(), periodic);
  const Packed y = pack(state);
  Packed dy(y.size());
  system.rhs(y.data(), g, 0.0, dy.data());
  TdvDerivative out;
  const int nv = state.fixed_bands();
  for (int k = 0; k < state.sites(); ++k) out.d_dot.push_back(dy.segment(k * nv, nv));
  out.C_dot = dy.tail(state.C.size());
  return out;
}

cplx tdv_overlap(const TdvState& a, const TdvState& b) {
  require_single_mode(a);
  require_single_mode(b);
  if (a.sites() != b.sites() || !a.reduced->same_shape(*b.reduced) || a.fixed_bands() != b.fixed_bands()) {
    throw std::invalid_argument("TDV states have different shapes");
  }
  std::vector<cplx> mode(a.sites());
  for (int k = 0; k < a.sites(); ++k) mode[k] = a.frames[k].col(0).dot(b.frames[k].col(0));
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.reduced->dimension(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    cplx term = std::conj(a.C(idx)) * b.C(idx);
    if (term == cplx{0.0, 0.0}) continue;
    const auto occ = a.reduced->state(i);
    for (int k = 0; k < a.sites(); ++k)
      for (int n = 0; n < occ[k]; ++n) term *= mode[k];
    acc += term;
  }
  return acc;
}

std::vector<double> tdv_site_populations(const TdvState& state) {
  const TdvDensities rho = tdv_densities(*state.reduced, state.C);
  const int D = state.variational_bands();
  std::vector<double> pop(state.sites(), 0.0);
  for (int k = 0; k < state.sites(); ++k)
    for (int mu = 0; mu < D; ++mu) pop[k] += rho.rho1(k * D + mu, k * D + mu).real();
  return pop;
}

std::vector<double> tdv_band_populations(const TdvState& state) {
  const TdvDensities rho = tdv_densities(*state.reduced, state.C);
  const int D = state.variational_bands();
  std::vector<double> pop(state.fixed_bands(), 0.0);
  for (int k = 0; k < state.sites(); ++k) {
    const auto& x = state.frames[k];
    const Eigen::MatrixXcd r = rho.rho1.block(k * D, k * D, D, D);
    const Eigen::MatrixXcd occ = x.conjugate() * r * x.transpose();
    for (int a = 0; a < state.fixed_bands(); ++a) pop[a] += occ(a, a).real();
  }
  return pop;
}


TdvTrajectory evolve_tdv(const TdvState& initial, const BHParams& params, const Schedule& g, double duration,
                         bool periodic, const TdvEvolveOptions& options) {
  check_compatible(initial, params);
  require_single_mode(initial);
  if (options.output_stride < 1) throw std::invalid_argument("output stride must be >= 1");
  const int steps = step_count(duration, options.dt);
  const double dt = steps > 0 ? duration / steps : 0.0;
  const int nv = initial.fixed_bands();
  const double shift = tdv_energy(initial, params, g(0.0), periodic);

  TdvState work = initial;
  const SingleModeSystem system(*initial.reduced, params, nv, periodic);
  auto rhs = [&](const Packed& y, double t) {
    Packed out(y.size());
    system.rhs(y.data(), g(t), shift, out.data());
    return out;
  };

  TdvTrajectory traj;
  traj.steps = steps;
  Packed y = pack(initial);
  auto physical = [&](double t) {
    unpack(y, work);
    work.C *= std::polar(1.0, -shift * t);
    return work;
  };
  auto record = [&](int step) {
    const double t = step * dt;
    const TdvState s = physical(t);
    traj.times.push_back(t);
    traj.fidelity.push_back(std::abs(tdv_overlap(initial, s)));
    if (options.record_populations) {
      traj.site_populations.push_back(tdv_site_populations(s));
      traj.band_populations.push_back(tdv_band_populations(s));
    }
    if (options.record_energy) traj.energy.push_back(tdv_energy(s, params, g(t), periodic));
  };

  record(0);
  for (int step = 1; step <= steps; ++step) {
    const double t = (step - 1) * dt;
    const Packed k1 = rhs(y, t);
    const Packed k2 = rhs(y + (0.5 * dt) * k1, t + 0.5 * dt);
    const Packed k3 = rhs(y + (0.5 * dt) * k2, t + 0.5 * dt);
    const Packed k4 = rhs(y + dt * k3, t + dt);
    y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    unpack(y, work);
    const double frame_drift = frame_orthonormality_error(work);
    const double norm_drift = std::abs(work.C.norm() - 1.0);
    traj.max_frame_drift = std::max(traj.max_frame_drift, frame_drift);
    traj.max_norm_drift = std::max(traj.max_norm_drift, norm_drift);
    if (!(frame_drift <= options.drift_tolerance) || !(norm_drift <= options.drift_tolerance)) {
      throw NumericalError("TDV drift (modes " + std::to_string(frame_drift) + ", amplitudes " +
                           std::to_string(norm_drift) + ") at t = " + std::to_string(step * dt) +
                           " exceeds tolerance; reduce dt");
    }
    traj.min_fidelity = std::min(traj.min_fidelity, std::abs(tdv_overlap(initial, work)));
    if (step % options.output_stride == 0 || step == steps) record(step);
  }
  traj.final_state = physical(steps * dt);
  return traj;
}

double tdv_halving_infidelity(const TdvState& initial, const BHParams& params, const Schedule& g,
                              double duration, bool periodic, double dt) {
  TdvEvolveOptions coarse;
  coarse.dt = dt;
  coarse.record_populations = false;
  coarse.output_stride = std::numeric_limits<int>::max();
  TdvEvolveOptions fine = coarse;
  fine.dt = 0.5 * dt;
  const auto a = evolve_tdv(initial, params, g, duration, periodic, coarse);
  const auto b = evolve_tdv(initial, params, g, duration, periodic, fine);
  return 1.0 - std::abs(tdv_overlap(a.final_state, b.final_state));
}

namespace {

using LocalExpansion = std::vector<std::pair<std::vector<std::uint8_t>, cplx>>;

// prod_mu (sum_a X(a, mu) b_a^+)^{n_mu} / sqrt(n_mu!) |0>, over `bands` local bands.
LocalExpansion expand_site(const Eigen::MatrixXcd& x, const std::uint8_t* occ, int bands) {
  const int nv = static_cast<int>(x.rows());
  std::map<std::vector<std::uint8_t>, cplx> poly;
  poly[std::vector<std::uint8_t>(bands, 0)] = 1.0;
  double norm = 1.0;
  for (int mu = 0; mu < x.cols(); ++mu) {
    norm *= factorial(occ[mu]);
    for (int rep = 0; rep < occ[mu]; ++rep) {
      std::map<std::vector<std::uint8_t>, cplx> next;
      for (const auto& [mono, c] : poly)
        for (int a = 0; a < nv; ++a) {
          if (x(a, mu) == cplx{0.0, 0.0}) continue;
          auto m = mono;
          ++m[a];
          next[m] += c * x(a, mu);
        }
      poly = std::move(next);
    }
  }
  LocalExpansion out;
  for (const auto& [mono, c] : poly) {
    double f = 1.0;
    for (auto m : mono) f *= factorial(m);
    out.emplace_back(mono, c * std::sqrt(f / norm));
  }
  return out;
}

}  // namespace

MbhState embed_to_mbh(const TdvState& state, std::shared_ptr<const FockBasis> basis) {
  if (!basis) throw std::invalid_argument("no target basis");
  if (basis->sites() != state.sites() || basis->particles() != state.particles()) {
    throw std::invalid_argument("target basis has a different lattice or particle number");
  }
  if (basis->bands() < state.fixed_bands()) throw std::invalid_argument("target basis has too few bands");
  const int L = state.sites();
  const int D = state.variational_bands();
  const int B = basis->bands();

  MbhState out;
  out.amplitudes.assign(basis->dimension(), cplx{0.0, 0.0});
  std::map<std::pair<int, std::vector<std::uint8_t>>, LocalExpansion> cache;
  std::vector<const LocalExpansion*> local(L);
  std::vector<std::uint8_t> full(static_cast<std::size_t>(basis->modes()));

  for (std::size_t i = 0; i < state.reduced->dimension(); ++i) {
    const cplx c = state.C(static_cast<Eigen::Index>(i));
    if (c == cplx{0.0, 0.0}) continue;
    const auto occ = state.reduced->state(i);
    for (int k = 0; k < L; ++k) {
      std::vector<std::uint8_t> key(occ.begin() + k * D, occ.begin() + (k + 1) * D);
      auto it = cache.find({k, key});
      if (it == cache.end()) {
        it = cache.emplace(std::make_pair(k, key), expand_site(state.frames[k], key.data(), B)).first;
      }
      local[k] = &it->second;
    }
    // Cartesian product over sites.
    std::vector<std::size_t> pos(L, 0);
    while (true) {
      cplx amp = c;
      for (int k = 0; k < L; ++k) {
        const auto& [mono, a] = (*local[k])[pos[k]];
        std::copy(mono.begin(), mono.end(), full.begin() + k * B);
        amp *= a;
      }
      out.amplitudes[basis->index(full)] += amp;
      int k = L - 1;
      while (k >= 0 && ++pos[k] == local[k]->size()) pos[k--] = 0;
      if (k < 0) break;
    }
  }
  out.basis = std::move(basis);
  return out;
}

double psi13_overlap(double alpha, double beta) {
  auto mbh = std::make_shared<FockBasis>(1, 3, 2);
  const std::uint8_t target[3] = {1, 0, 1};
  const MbhState psi13 = MbhState::fock(mbh, target);
  TdvState pair;
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(3, 1);
  x(0, 0) = alpha;
  x(2, 0) = beta;
  pair.frames.push_back(x);
  pair.reduced = std::make_shared<FockBasis>(1, 1, 2);
  pair.C = Eigen::VectorXcd::Ones(1);
  return fidelity(psi13, embed_to_mbh(pair, mbh));
}

OverlapBound psi13_overlap_bound() {
  // Golden-section search over alpha = cos(theta), beta = sin(theta).
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0;
  double hi = 0.5 * kPi;
  auto f = [](double th) { return psi13_overlap(std::cos(th), std::sin(th)); };
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = f(x1);
    }
  }
  const double th = 0.5 * (lo + hi);
  return {std::cos(th), std::sin(th), f(th)};
}

}  // namespace varbh
