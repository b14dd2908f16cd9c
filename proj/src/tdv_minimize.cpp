#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "varbh/eigensolver.hpp"
#include "varbh/errors.hpp"
#include "varbh/tdv.hpp"

namespace varbh {

namespace {

using Frames = std::vector<Eigen::MatrixXcd>;

// Nearest matrix with orthonormal columns (polar factor).
Eigen::MatrixXcd polar_factor(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

Eigen::MatrixXcd project(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& z) {
  const Eigen::MatrixXcd xz = x.adjoint() * z;
  return z - x * (0.5 * (xz + xz.adjoint()));
}

struct Evaluation {
  double energy = 0.0;
  TdvState state;
};

class Problem {
 public:
  Problem(const BHParams& params, int sites, int particles, int D, bool periodic, const TdvMinimizeOptions& options)
      : params_(params),
        periodic_(periodic),
        options_(options),
        reduced_(std::make_shared<FockBasis>(sites, D, particles)) {}

  Evaluation evaluate(const Frames& frames, const Eigen::VectorXcd* guess = nullptr) const {
    Evaluation ev;
    ev.state.frames = frames;
    ev.state.reduced = reduced_;
    ev.state.C = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(reduced_->dimension()));
    const auto h = reduced_hamiltonian(ev.state, params_, periodic_).evaluate(params_.g);
    const auto pair = lowest_eigenpair(h, LanczosOptions{}, options_.dense_limit, guess ? guess->data() : nullptr);
    ev.energy = pair.value;
    ev.state.C = Eigen::Map<const Eigen::VectorXcd>(pair.vector.data(), static_cast<Eigen::Index>(pair.vector.size()));
    return ev;
  }

  // Riemannian gradient on the product of Stiefel manifolds, and the search
  // direction: the same gradient rescaled per site and band by
  // 1 / (n_k (E^a - E^1 + 1)) and projected back onto the tangent space.
  std::pair<Frames, Frames> gradient(const Evaluation& ev) const {
    const TdvDensities rho = tdv_densities(*reduced_, ev.state.C);
    Frames g = frame_gradient(ev.state, rho, params_, params_.g, periodic_);
    Frames dir(g.size());
    const int D = modes();
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto& x = ev.state.frames[k];
      g[k] = project(x, g[k]);
      double n = 0.0;
      for (int mu = 0; mu < D; ++mu) n += rho.rho1(k * D + mu, k * D + mu).real();
      n = std::max(n, 0.1);
      Eigen::MatrixXcd scaled = g[k];
      for (int a = 0; a < fixed_bands(); ++a) scaled.row(a) /= n * (params_.E[a] - params_.E[0] + 1.0);
      dir[k] = project(x, scaled);
    }
    return {g, dir};
  }

  [[nodiscard]] int fixed_bands() const { return params_.num_bands; }
  [[nodiscard]] int sites() const { return reduced_->sites(); }
  [[nodiscard]] int modes() const { return reduced_->bands(); }

 private:
  const BHParams& params_;
  bool periodic_;
  TdvMinimizeOptions options_;
  std::shared_ptr<const FockBasis> reduced_;
};

double dot(const Frames& a, const Frames& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k].cwiseProduct(b[k].conjugate()).sum().real();
  return acc;
}

double norm2(const Frames& f) {
  double acc = 0.0;
  for (const auto& m : f) acc += m.squaredNorm();
  return acc;
}

struct RunResult {
  Evaluation best;
  bool converged = false;
  std::vector<double> log;
};

RunResult descend(const Problem& problem, Frames frames, const TdvMinimizeOptions& options) {
  RunResult run;
  Evaluation cur = problem.evaluate(frames);
  auto [grad, dir] = problem.gradient(cur);
  run.log.push_back(cur.energy);
  double step = 1.0;
  int quiet = 0;

  for (int it = 0; it < options.max_iterations; ++it) {
    const double gnorm = std::sqrt(norm2(grad));
    if (gnorm < 1e-3 * options.gradient_tolerance) {
      run.converged = true;
      break;
    }
    // Armijo backtracking along the preconditioned descent direction.
    const double slope = 2.0 * dot(grad, dir);
    Evaluation next;
    Frames trial(frames.size());
    double tau = step;
    bool accepted = false;
    for (int back = 0; back < 40; ++back) {
      for (std::size_t k = 0; k < frames.size(); ++k) trial[k] = polar_factor(frames[k] - tau * dir[k]);
      next = problem.evaluate(trial, &cur.state.C);
      if (next.energy <= cur.energy - 1e-4 * tau * slope) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) {
      run.converged = gnorm < options.gradient_tolerance;
      break;
    }
    auto [next_grad, next_dir] = problem.gradient(next);

    // Barzilai-Borwein estimate for the next trial step.
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const Eigen::MatrixXcd s = trial[k] - frames[k];
      const Eigen::MatrixXcd y = next_dir[k] - dir[k];
      ss += s.squaredNorm();
      sy += s.cwiseProduct(y.conjugate()).sum().real();
    }
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-3, 100.0) : std::min(2.0 * tau, 100.0);

    const double decrease = cur.energy - next.energy;
    frames = std::move(trial);
    cur = std::move(next);
    grad = std::move(next_grad);
    dir = std::move(next_dir);
    run.log.push_back(cur.energy);

    quiet = decrease < options.energy_tolerance ? quiet + 1 : 0;
    if (quiet >= 3 && std::sqrt(norm2(grad)) < options.gradient_tolerance) {
      run.converged = true;
      break;
    }
  }
  if (!run.converged) run.converged = std::sqrt(norm2(grad)) < options.gradient_tolerance;
  run.best = std::move(cur);
  return run;
}

Frames band_start(const Problem& p) {
  Frames f;
  for (int k = 0; k < p.sites(); ++k) f.push_back(Eigen::MatrixXcd::Identity(p.fixed_bands(), p.modes()));
  return f;
}

Frames random_start(const Problem& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Frames f;
  for (int k = 0; k < p.sites(); ++k) {
    Eigen::MatrixXcd m(p.fixed_bands(), p.modes());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double re = dist(rng);
      m.data()[i] = cplx(re, dist(rng));
    }
    // Bias toward the lowest band so starts sample the physically relevant region.
    m.row(0) *= 3.0;
    f.push_back(polar_factor(m));
  }
  return f;
}

}  // namespace

TdvGroundState tdv_ground_state(const BHParams& params, int sites, int particles, int variational_bands,
                                bool periodic, const TdvMinimizeOptions& options) {
  if (variational_bands < 1 || variational_bands > 2) throw std::invalid_argument("D must be 1 or 2");
  if (variational_bands > params.num_bands) throw std::invalid_argument("D exceeds the number of fixed bands");
  if (sites < 1 || particles < 1) throw std::invalid_argument("need at least one site and one particle");
  if (options.starts < 1) throw std::invalid_argument("need at least one start");

  const Problem problem(params, sites, particles, variational_bands, periodic, options);

  std::vector<Frames> starts;
  starts.push_back(band_start(problem));
  if (variational_bands == 2) {
    // The single-mode optimum padded with an orthogonal second mode: the D = 2
    // minimum can then never lie above the D = 1 one.
    TdvMinimizeOptions inner = options;
    const TdvGroundState single = tdv_ground_state(params, sites, particles, 1, periodic, inner);
    Frames f;
    for (int k = 0; k < sites; ++k) {
      Eigen::MatrixXcd m(params.num_bands, 2);
      m.col(0) = single.state.frames[k].col(0);
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(params.num_bands);
      Eigen::Index pivot = 0;
      m.col(0).cwiseAbs().minCoeff(&pivot);
      e(pivot) = 1.0;
      m.col(1) = e - m.col(0) * m.col(0).dot(e);
      m.col(1).normalize();
      f.push_back(m);
    }
    starts.push_back(f);
  }
  for (int s = static_cast<int>(starts.size()); s < options.starts; ++s) {
    starts.push_back(random_start(problem, options.seed + static_cast<std::uint64_t>(s)));
  }

  TdvGroundState out;
  out.energy = std::numeric_limits<double>::infinity();
  for (int s = 0; s < static_cast<int>(starts.size()); ++s) {
    RunResult run = descend(problem, starts[s], options);
    out.log.push_back(run.log);
    if (run.best.energy < out.energy - 1e-12) {
      out.energy = run.best.energy;
      out.state = std::move(run.best.state);
      out.converged = run.converged;
      out.best_start = s;
    }
  }
  return out;
}

}  // namespace varbh
