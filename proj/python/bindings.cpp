// Python interface to the core library: lattice parameters, ground states,
// the scenario drivers and the cache/CSV helpers.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "varbh/eigensolver.hpp"
#include "varbh/errors.hpp"
#include "varbh/hubbard.hpp"
#include "varbh/io.hpp"
#include "varbh/scenarios.hpp"
#include "varbh/tdv.hpp"

namespace py = pybind11;
using namespace varbh;

namespace {

py::array_t<double> u_array(const BHParams& p) {
  const auto n = static_cast<py::ssize_t>(p.num_bands);
  py::array_t<double> out({n, n, n, n});
  std::copy(p.U.data().begin(), p.U.data().end(), out.mutable_data());
  return out;
}

double mbh_ground_energy(const BHParams& params, int sites, int particles, bool periodic) {
  auto basis = std::make_shared<const FockBasis>(sites, params.num_bands, particles);
  const SparseHamiltonian h = build_mbh_hamiltonian(params, *basis, periodic);
  return basis->dimension() <= kDenseLimit ? dense_ground_state(h, basis).energy : ground_state(h, basis).energy;
}

TdvMinimizeOptions minimize_options(int starts, std::uint64_t seed) {
  TdvMinimizeOptions o;
  o.starts = starts;
  o.seed = seed;
  return o;
}

}  // namespace

PYBIND11_MODULE(_varbh, m) {
  m.doc() = "Multiband and variational Bose-Hubbard models";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<OutputError>(m, "OutputError", PyExc_OSError);

  py::class_<LatticeSetup>(m, "LatticeSetup")
      .def(py::init([](double depth, int sites, bool periodic, int plane_wave_cutoff, int points_per_site,
                       int param_sites) {
             return LatticeSetup{depth, sites, periodic, plane_wave_cutoff, points_per_site, param_sites};
           }),
           py::arg("depth") = 10.0, py::arg("sites") = 4, py::arg("periodic") = true,
           py::arg("plane_wave_cutoff") = 16, py::arg("points_per_site") = kDefaultPointsPerSite,
           py::arg("param_sites") = 0)
      .def_readwrite("depth", &LatticeSetup::depth)
      .def_readwrite("sites", &LatticeSetup::sites)
      .def_readwrite("periodic", &LatticeSetup::periodic)
      .def_readwrite("plane_wave_cutoff", &LatticeSetup::plane_wave_cutoff)
      .def_readwrite("points_per_site", &LatticeSetup::points_per_site)
      .def_readwrite("param_sites", &LatticeSetup::param_sites);

  py::class_<BHParams>(m, "BHParams")
      .def_readonly("num_bands", &BHParams::num_bands)
      .def_readonly("sites", &BHParams::sites)
      .def_readonly("depth", &BHParams::depth)
      .def_readonly("g", &BHParams::g)
      .def_readonly("J", &BHParams::J)
      .def_readonly("E", &BHParams::E)
      .def_property_readonly("U", &u_array)
      .def("truncated", &BHParams::truncated, py::arg("bands"))
      .def("with_coupling", &BHParams::with_coupling, py::arg("g"));

  m.def("lattice_parameters", &lattice_parameters, py::arg("lattice"), py::arg("bands"),
        "Hubbard parameters J, E, U at unit coupling.");

  m.def("band_energies", [](double depth, int sites, int bands, int plane_wave_cutoff) {
        const BlochSpectrum s = solve_bloch({depth, sites, plane_wave_cutoff}, bands);
        return std::make_pair(s.quasimomenta, s.energies);
      },
      py::arg("depth"), py::arg("sites"), py::arg("bands"), py::arg("plane_wave_cutoff") = 16,
      "Quasimomenta and band energies E[band][q].");

  m.def("mbh_ground_energy", &mbh_ground_energy, py::arg("params"), py::arg("sites"), py::arg("particles"),
        py::arg("periodic") = true, "Lowest MBH eigenvalue at coupling params.g.");

  m.def("tdv_ground_energy",
        [](const BHParams& params, int sites, int particles, int variational_bands, bool periodic, int starts,
           std::uint64_t seed) {
          const TdvGroundState gs = tdv_ground_state(params, sites, particles, variational_bands, periodic,
                                                     minimize_options(starts, seed));
          return std::make_pair(gs.energy, gs.converged);
        },
        py::arg("params"), py::arg("sites"), py::arg("particles"), py::arg("variational_bands") = 1,
        py::arg("periodic") = true, py::arg("starts") = 16, py::arg("seed") = 0x7d5eed,
        "Variational ground-state energy and convergence flag.");

  m.def("gs_sweep",
        [](const BHParams& params, const LatticeSetup& lattice, int particles, std::vector<double> g,
           std::vector<int> mbh_bands, std::vector<int> tdv_bands, std::vector<int> variational_bands, int starts,
           int threads) {
          GsSweepConfig cfg;
          cfg.particles = particles;
          cfg.g = std::move(g);
          cfg.mbh_bands = std::move(mbh_bands);
          cfg.tdv_bands = std::move(tdv_bands);
          cfg.variational_bands = std::move(variational_bands);
          cfg.minimize.starts = starts;
          cfg.threads = threads;
          py::list rows;
          for (const auto& r : gs_sweep(params, lattice, cfg)) {
            py::dict d;
            d["g"] = r.g;
            d["method"] = r.method;
            d["bands"] = r.bands;
            d["variational_bands"] = r.variational_bands;
            d["energy"] = r.energy;
            d["relative"] = r.relative;
            d["converged"] = r.converged;
            rows.append(d);
          }
          return rows;
        },
        py::arg("params"), py::arg("lattice"), py::arg("particles"), py::arg("g"), py::arg("mbh_bands"),
        py::arg("tdv_bands"), py::arg("variational_bands") = std::vector<int>{1}, py::arg("starts") = 16,
        py::arg("threads") = 1);

  m.def("omega_grid", &omega_grid, py::arg("omega_min"), py::arg("omega_max"), py::arg("step"));

  m.def("modulation_sweep",
        [](const BHParams& params, std::vector<double> omega, int particles, double g0, double g_mod,
           double duration, double dt, int mbh_bands, int tdv_bands, int threads) {
          ModulationConfig cfg;
          cfg.omega = std::move(omega);
          cfg.particles = particles;
          cfg.g0 = g0;
          cfg.g_mod = g_mod;
          cfg.duration = duration;
          cfg.dt = dt;
          cfg.mbh_bands = mbh_bands;
          cfg.tdv_bands = tdv_bands;
          cfg.threads = threads;
          const ModulationResult r = modulation_sweep(params, cfg);
          std::vector<double> w, dm, dv;
          for (const auto& row : r.rows) {
            w.push_back(row.omega);
            dm.push_back(row.mbh);
            dv.push_back(row.tdv);
          }
          py::dict d;
          d["omega"] = w;
          d["mbh"] = dm;
          d["tdv"] = dv;
          d["initial_overlap"] = r.initial_overlap;
          return d;
        },
        py::arg("params"), py::arg("omega"), py::arg("particles") = 2, py::arg("g0") = 1.0, py::arg("g_mod") = 0.1,
        py::arg("duration") = 400.0, py::arg("dt") = 1e-3, py::arg("mbh_bands") = 5, py::arg("tdv_bands") = 5,
        py::arg("threads") = 1);

  m.def("find_peaks",
        [](const std::vector<double>& x, const std::vector<double>& y, double min_height) {
          std::vector<std::pair<double, double>> out;
          for (const auto& p : find_peaks(x, y, min_height)) out.emplace_back(p.position, p.height);
          return out;
        },
        py::arg("x"), py::arg("y"), py::arg("min_height") = 0.0, "(position, height) of each local maximum.");

  m.def("psi13_overlap", &psi13_overlap, py::arg("alpha"), py::arg("beta"));
  m.def("psi13_overlap_bound", [] {
    const OverlapBound b = psi13_overlap_bound();
    return py::make_tuple(b.alpha, b.beta, b.value);
  });

  m.def("format_double", &format_double, py::arg("value"));
  m.def("cached_parameters",
        [](const std::string& cache_dir, const LatticeSetup& lattice, int bands) {
          bool hit = false;
          BHParams p = cached_parameters(cache_dir, lattice, bands, &hit);
          return std::make_pair(p, hit);
        },
        py::arg("cache_dir"), py::arg("lattice"), py::arg("bands"),
        "Parameters through the on-disk cache, and whether the cache was hit.");
}
