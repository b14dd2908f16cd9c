#include "varbh/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "varbh/eigensolver.hpp"
#include "varbh/errors.hpp"

namespace varbh {

void parallel_for(int count, int threads, const std::function<void(int)>& job) {
  if (count <= 0) return;
  const int workers = std::clamp(threads, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

BHParams lattice_parameters(const LatticeSetup& lattice, int bands) {
  LatticeSpec spec;
  spec.depth = lattice.depth;
  spec.sites = lattice.param_sites > 0 ? lattice.param_sites : lattice.sites;
  spec.plane_wave_cutoff = lattice.plane_wave_cutoff;
  BHParams p = compute_bh_params(spec, bands, 1.0, lattice.points_per_site);
  p.sites = lattice.sites;
  return p;
}

namespace {

void require_bands(const BHParams& params, int bands, const char* what) {
  if (bands < 1) throw std::invalid_argument(std::string(what) + " must be at least 1");
  if (bands > params.num_bands) {
    throw std::invalid_argument(std::string(what) + " exceeds the number of computed bands");
  }
}

double mbh_ground_energy(const BHParams& params, int bands, int sites, int particles, bool periodic, double g) {
  const BHParams p = params.truncated(bands).with_coupling(g);
  auto basis = std::make_shared<const FockBasis>(sites, bands, particles);
  const SparseHamiltonian h = build_mbh_hamiltonian(p, *basis, periodic);
  return basis->dimension() <= kDenseLimit ? dense_ground_state(h, basis).energy : ground_state(h, basis).energy;
}

// D = 1 state occupying only the lowest band, with amplitudes C.
TdvState lowest_band_state(int fixed_bands, std::shared_ptr<const FockBasis> reduced, Eigen::VectorXcd C) {
  TdvState s;
  for (int k = 0; k < reduced->sites(); ++k) {
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(fixed_bands, 1);
    x(0, 0) = 1.0;
    s.frames.push_back(x);
  }
  s.reduced = std::move(reduced);
  s.C = std::move(C);
  return s;
}

double max_relative_drift(const std::vector<double>& energy) {
  double drift = 0.0;
  if (energy.empty()) return drift;
  const double scale = std::max(std::abs(energy.front()), 1e-300);
  for (double e : energy) drift = std::max(drift, std::abs(e - energy.front()) / scale);
  return drift;
}

}  // namespace

std::vector<GsSweepRow> gs_sweep(const BHParams& params, const LatticeSetup& lattice, const GsSweepConfig& config) {
  for (int nm : config.mbh_bands) require_bands(params, nm, "MBH band count");
  for (int nv : config.tdv_bands) require_bands(params, nv, "TDV band count");
  for (int d : config.variational_bands) {
    if (d < 1 || d > 2) throw std::invalid_argument("variational band count must be 1 or 2");
  }
  for (double g : config.g) {
    if (!std::isfinite(g)) throw std::invalid_argument("g grid must be finite");
  }

  std::vector<GsSweepRow> rows;
  for (double g : config.g) {
    for (int nm : config.mbh_bands) rows.push_back({g, "mbh", nm, 0, 0.0, 0.0, true});
    for (int nv : config.tdv_bands) {
      for (int d : config.variational_bands) {
        if (d <= nv) rows.push_back({g, "tdv", nv, d, 0.0, 0.0, true});
      }
    }
  }
  std::vector<double> baseline(config.g.size());

  // Jobs: every row plus one baseline per g.
  const int n_rows = static_cast<int>(rows.size());
  const int n_jobs = n_rows + static_cast<int>(config.g.size());
  parallel_for(n_jobs, config.threads, [&](int job) {
    if (job >= n_rows) {
      const auto i = static_cast<std::size_t>(job - n_rows);
      baseline[i] = mbh_ground_energy(params, 1, lattice.sites, config.particles, lattice.periodic, config.g[i]);
      return;
    }
    GsSweepRow& row = rows[static_cast<std::size_t>(job)];
    if (row.method == "mbh") {
      row.energy = mbh_ground_energy(params, row.bands, lattice.sites, config.particles, lattice.periodic, row.g);
    } else {
      const BHParams p = params.truncated(row.bands).with_coupling(row.g);
      const TdvGroundState gs =
          tdv_ground_state(p, lattice.sites, config.particles, row.variational_bands, lattice.periodic, config.minimize);
      row.energy = gs.energy;
      row.converged = gs.converged;
    }
  });

  for (auto& row : rows) {
    const auto i = static_cast<std::size_t>(std::find(config.g.begin(), config.g.end(), row.g) - config.g.begin());
    row.relative = row.energy - baseline[i];
  }
  return rows;
}

FockEvolutionResult fock_evolution(const BHParams& params, const LatticeSetup& lattice,
                                   const FockEvolutionConfig& config) {
  require_bands(params, config.mbh_bands, "MBH band count");
  require_bands(params, config.tdv_bands, "TDV band count");
  const int L = lattice.sites;
  if (static_cast<int>(config.occupation.size()) != L || static_cast<int>(config.band.size()) != L) {
    throw std::invalid_argument("initial occupation and band lists need one entry per site");
  }
  int particles = 0;
  for (int k = 0; k < L; ++k) {
    if (config.occupation[k] < 0) throw std::invalid_argument("occupations must be non-negative");
    if (config.band[k] < 0 || config.band[k] >= std::min(config.mbh_bands, config.tdv_bands)) {
      throw std::invalid_argument("initial band outside the band truncation");
    }
    particles += config.occupation[k];
  }
  if (particles < 1) throw std::invalid_argument("initial state holds no particles");

  const BHParams pm = params.truncated(config.mbh_bands);
  auto basis = std::make_shared<const FockBasis>(L, config.mbh_bands, particles);
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(basis->modes()), 0);
  for (int k = 0; k < L; ++k) occ[static_cast<std::size_t>(k * config.mbh_bands + config.band[k])] =
      static_cast<std::uint8_t>(config.occupation[k]);
  const ParametricHamiltonian h = build_mbh_parts(pm, *basis, lattice.periodic);

  EvolveOptions mo;
  mo.dt = config.dt;
  mo.output_stride = config.output_stride;
  mo.snapshot_stride = 0;
  mo.record_energy = true;
  const Trajectory mt = evolve(h, constant_schedule(config.g), MbhState::fock(basis, occ), config.duration, mo);

  TdvEvolveOptions to;
  to.dt = config.dt;
  to.output_stride = config.output_stride;
  to.record_energy = true;
  const TdvState s0 = tdv_fock_state(config.tdv_bands, config.occupation, config.band);
  const TdvTrajectory tt = evolve_tdv(s0, params.truncated(config.tdv_bands), constant_schedule(config.g),
                                      config.duration, lattice.periodic, to);

  FockEvolutionResult out;
  out.times = mt.times;
  out.mbh_sites = mt.site_populations;
  out.mbh_bands = mt.band_populations;
  out.tdv_sites = tt.site_populations;
  out.tdv_bands = tt.band_populations;
  out.mbh_energy_drift = max_relative_drift(mt.energy);
  out.tdv_energy_drift = max_relative_drift(tt.energy);
  out.mbh_norm_drift = mt.max_norm_drift;
  out.tdv_frame_drift = tt.max_frame_drift;
  return out;
}

QuenchResult linear_quench(const BHParams& params, const LatticeSetup& lattice, const QuenchConfig& config) {
  require_bands(params, config.mbh_bands, "MBH band count");
  require_bands(params, config.tdv_bands, "TDV band count");
  for (double tau : config.tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("quench durations must be positive");
  }
  const int L = lattice.sites;
  const int N = config.particles;

  // Single-band ground state at g_ini.
  auto reduced = std::make_shared<const FockBasis>(L, 1, N);
  const SparseHamiltonian h1 =
      build_mbh_hamiltonian(params.truncated(1).with_coupling(config.g_ini), *reduced, lattice.periodic);
  const GroundState bh = reduced->dimension() <= kDenseLimit ? dense_ground_state(h1, reduced)
                                                             : ground_state(h1, reduced);
  const Eigen::VectorXcd c0 = Eigen::Map<const Eigen::VectorXcd>(
      bh.state.amplitudes.data(), static_cast<Eigen::Index>(bh.state.amplitudes.size()));

  const BHParams pm = params.truncated(config.mbh_bands);
  const BHParams pv = params.truncated(config.tdv_bands);
  auto basis = std::make_shared<const FockBasis>(L, config.mbh_bands, N);
  const ParametricHamiltonian hm = build_mbh_parts(pm, *basis, lattice.periodic);
  const MbhState psi0 = embed_to_mbh(lowest_band_state(config.mbh_bands, reduced, c0), basis);
  const TdvState v0 = lowest_band_state(config.tdv_bands, reduced, c0);

  QuenchResult out;
  out.rows.resize(config.tau.size());
  out.mbh_sudden = expectation(hm, config.g_fin, psi0);
  out.tdv_sudden = tdv_energy(v0, pv, config.g_fin, lattice.periodic);

  const int n_tau = static_cast<int>(config.tau.size());
  parallel_for(n_tau + 2, config.threads, [&](int job) {
    if (job == n_tau) {
      out.mbh_ground = mbh_ground_energy(params, config.mbh_bands, L, N, lattice.periodic, config.g_fin);
      return;
    }
    if (job == n_tau + 1) {
      out.tdv_ground =
          tdv_ground_state(pv.with_coupling(config.g_fin), L, N, 1, lattice.periodic, config.minimize).energy;
      return;
    }
    const double tau = config.tau[static_cast<std::size_t>(job)];
    const Schedule ramp = linear_schedule(config.g_ini, config.g_fin, tau);

    EvolveOptions mo;
    mo.dt = config.dt;
    mo.output_stride = std::numeric_limits<int>::max();
    mo.snapshot_stride = 0;
    mo.record_populations = false;
    const Trajectory mt = evolve(hm, ramp, psi0, tau, mo);

    TdvEvolveOptions to;
    to.dt = config.dt;
    to.output_stride = std::numeric_limits<int>::max();
    to.record_populations = false;
    const TdvTrajectory tt = evolve_tdv(v0, pv, ramp, tau, lattice.periodic, to);

    QuenchRow& row = out.rows[static_cast<std::size_t>(job)];
    row.tau = tau;
    row.mbh = expectation(hm, config.g_fin, mt.final_state);
    row.tdv = tdv_energy(tt.final_state, pv, config.g_fin, lattice.periodic);
  });
  return out;
}

std::vector<double> omega_grid(double omega_min, double omega_max, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("omega step must be positive");
  if (!(omega_max >= omega_min)) throw std::invalid_argument("omega_max must not be below omega_min");
  const auto n = static_cast<int>(std::floor((omega_max - omega_min) / step + 1e-9));
  std::vector<double> grid;
  for (int i = 0; i <= n; ++i) grid.push_back(omega_min + i * step);
  return grid;
}

ModulationResult modulation_sweep(const BHParams& params, const ModulationConfig& config) {
  require_bands(params, config.mbh_bands, "MBH band count");
  require_bands(params, config.tdv_bands, "TDV band count");
  if (params.sites != 1) throw std::invalid_argument("modulation spectroscopy runs on a single site");
  if (config.particles < 1) throw std::invalid_argument("need at least one particle");
  if (!(config.duration > 0.0)) throw std::invalid_argument("duration must be positive");

  const BHParams pm = params.truncated(config.mbh_bands);
  auto basis = std::make_shared<const FockBasis>(1, config.mbh_bands, config.particles);
  const ParametricHamiltonian h = build_mbh_parts(pm, *basis, false);
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(config.mbh_bands), 0);
  occ[0] = static_cast<std::uint8_t>(config.particles);
  const MbhState psi0 = MbhState::fock(basis, occ);
  const TdvState v0 = tdv_fock_state(config.tdv_bands, {config.particles}, {0});
  const BHParams pv = params.truncated(config.tdv_bands);

  ModulationResult out;
  {
    const SparseHamiltonian h0 = build_mbh_hamiltonian(pm.with_coupling(config.g0), *basis, false);
    const GroundState gs = basis->dimension() <= kDenseLimit ? dense_ground_state(h0, basis) : ground_state(h0, basis);
    out.initial_overlap = fidelity(psi0, gs.state);
  }

  out.rows.resize(config.omega.size());
  parallel_for(static_cast<int>(config.omega.size()), config.threads, [&](int job) {
    const double omega = config.omega[static_cast<std::size_t>(job)];
    const Schedule drive = sinusoidal_schedule(config.g0, config.g_mod, omega);

    EvolveOptions mo;
    mo.dt = config.dt;
    mo.output_stride = std::numeric_limits<int>::max();
    mo.snapshot_stride = 0;
    mo.record_populations = false;
    const Trajectory mt = evolve(h, drive, psi0, config.duration, mo);

    TdvEvolveOptions to;
    to.dt = config.dt;
    to.output_stride = std::numeric_limits<int>::max();
    to.record_populations = false;
    const TdvTrajectory tt = evolve_tdv(v0, pv, drive, config.duration, false, to);

    out.rows[static_cast<std::size_t>(job)] = {omega, 1.0 - mt.min_fidelity, 1.0 - tt.min_fidelity};
  });
  return out;
}

std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y, double min_height) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  std::vector<Peak> peaks;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > min_height)) continue;
    // Vertex of the parabola through the three points.
    const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double d = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d;
    Peak p{x1, y1};
    if (a < 0.0) {
      const double v = -b / (2.0 * a);
      if (v >= x0 && v <= x2) p.position = v;
    }
    peaks.push_back(p);
  }
  return peaks;
}

}  // namespace varbh
