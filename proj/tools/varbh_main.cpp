// varbh: command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 output could not be written.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "varbh/config.hpp"
#include "varbh/errors.hpp"
#include "varbh/io.hpp"
#include "varbh/scenarios.hpp"

namespace {

using namespace varbh;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitOutput = 4;

struct Options {
  std::string config_path;
  std::optional<std::string> s, sites, particles, bands_mbh, bands_tdv, variational_bands, g, dt, seed, out, threads;
  std::vector<std::string> set;
};

void add_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "Configuration file");
  cmd->add_option("--s", o.s, "Lattice depth s [E_R]");
  cmd->add_option("--sites", o.sites, "Number of lattice sites L");
  cmd->add_option("--particles", o.particles, "Number of bosons N");
  cmd->add_option("--bands-mbh", o.bands_mbh, "MBH band counts N_M (comma-separated)");
  cmd->add_option("--bands-tdv", o.bands_tdv, "TDV fixed band counts N_V (comma-separated)");
  cmd->add_option("--variational-bands", o.variational_bands, "Variational band counts D (1, 2)");
  cmd->add_option("--g", o.g, "Coupling g [E_R/k] (comma-separated list)");
  cmd->add_option("--dt", o.dt, "Time step [hbar/E_R]");
  cmd->add_option("--seed", o.seed, "Seed of the multistart minimiser");
  cmd->add_option("--out", o.out, "Output directory (overrides $VARBH_OUTPUT_DIR)");
  cmd->add_option("--threads", o.threads, "Worker threads for sweeps");
  cmd->add_option("--set", o.set, "Any config key: section.key=value (repeatable)");
}

class Timer {
 public:
  void stage(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    if (!current_.empty()) timings_.push_back({current_, std::chrono::duration<double>(now - start_).count()});
    current_ = name;
    start_ = now;
  }
  std::vector<StageTiming> finish() {
    stage({});
    return timings_;
  }

 private:
  std::string current_;
  std::chrono::steady_clock::time_point start_;
  std::vector<StageTiming> timings_;
};

RunConfig resolve(Command command, const Options& o, std::string& input_bytes) {
  RunConfig c = default_config(command);
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path, std::ios::binary);
    if (!in) throw ConfigError(o.config_path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    input_bytes = buf.str();
    c = parse_config(input_bytes, command, o.config_path);
  }
  const std::pair<const std::optional<std::string>*, const char*> overrides[] = {
      {&o.s, "lattice.depth"},
      {&o.sites, "lattice.sites"},
      {&o.particles, "system.particles"},
      {&o.bands_mbh, "system.bands_mbh"},
      {&o.bands_tdv, "system.bands_tdv"},
      {&o.variational_bands, "system.variational_bands"},
      {&o.g, "system.g"},
      {&o.dt, "time.dt"},
      {&o.seed, "minimizer.seed"},
      {&o.out, "run.out"},
      {&o.threads, "run.threads"},
  };
  for (const auto& [value, key] : overrides) {
    if (*value) set_config_value(c, key, **value, std::string("--") + key);
  }
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set: expected section.key=value, got '" + kv + "'");
    set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1), "--set");
  }
  // Sites given on the command line without a matching initial state: spread
  // the particles as evenly as possible, all in the lowest band.
  if (command == Command::evolve && static_cast<int>(c.occupation.size()) != c.sites && (o.sites || o.particles)) {
    c.occupation.assign(static_cast<std::size_t>(c.sites), 0);
    for (int n = 0; n < c.particles; ++n) ++c.occupation[static_cast<std::size_t>(n % c.sites)];
    c.initial_band.assign(static_cast<std::size_t>(c.sites), 1);
  }
  validate_config(c);
  return c;
}

using Columns = std::vector<std::pair<std::string, std::string>>;

void emit(OutputSink& sink, const RunConfig& c, const std::string& name, const CsvTable& table, const Columns& cols,
          const nlohmann::json& extra = nlohmann::json::object()) {
  sink.write(name + ".csv", table.str());
  nlohmann::json side = make_sidecar(c, cols);
  for (auto it = extra.begin(); it != extra.end(); ++it) side[it.key()] = it.value();
  sink.write_json(name + ".csv.json", side);
}

std::filesystem::path cache_dir(const OutputSink& sink) { return sink.directory() / "cache"; }

int run_bands(const RunConfig& c, OutputSink& sink, Timer& timer, bool with_interaction) {
  timer.stage("bands");
  LatticeSpec spec;
  spec.depth = c.depth;
  spec.sites = c.param_sites > 0 ? c.param_sites : c.sites;
  spec.plane_wave_cutoff = c.plane_wave_cutoff;
  bool hit = false;
  const BandData d = cached_band_data(cache_dir(sink), spec, c.max_bands(), c.points_per_site, &hit);
  const auto cache_name = "cache/" + cache_file({}, spec, c.max_bands(), c.points_per_site).filename().string();

  timer.stage("write");
  CsvTable bands({"band", "E", "J", "E_min", "E_max"});
  bands.comment("band energies and nearest-neighbour tunnelling, s = " + format_double(c.depth) +
                ", ring of " + std::to_string(spec.sites) + " sites");
  std::printf("%4s  %22s  %22s\n", "band", "E [E_R]", "J [E_R]");
  for (int b = 0; b < d.params.num_bands; ++b) {
    const auto& e = d.spectrum.energies[static_cast<std::size_t>(b)];
    bands.add_row({cell(b + 1), cell(d.params.E[b]), cell(d.params.J[b]), cell(*std::min_element(e.begin(), e.end())),
                   cell(*std::max_element(e.begin(), e.end()))});
    std::printf("%4d  %22.15g  %22.15g\n", b + 1, d.params.E[b], d.params.J[b]);
  }
  emit(sink, c, "bands", bands,
       {{"band", "band index, 1 = lowest"},
        {"E", "band-averaged on-site energy [E_R]"},
        {"J", "nearest-neighbour tunnelling, H term -J (b_i^+ b_j + h.c.) [E_R]"},
        {"E_min", "lowest Bloch energy of the band on the ring [E_R]"},
        {"E_max", "highest Bloch energy of the band on the ring [E_R]"}},
       {{"cache", cache_name}, {"cache_hit", hit}});
  if (with_interaction) {
    CsvTable u({"a", "b", "c", "d", "U"});
    u.comment("on-site interaction per unit g, U = (1/pi) int w^a w^b w^c w^d dx");
    const int n = d.params.num_bands;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int cc = 0; cc < n; ++cc)
          for (int dd = 0; dd < n; ++dd) {
            u.add_row({cell(a + 1), cell(b + 1), cell(cc + 1), cell(dd + 1), cell(d.params.U(a, b, cc, dd))});
          }
    emit(sink, c, "interaction", u,
         {{"a", "band"}, {"b", "band"}, {"c", "band"}, {"d", "band"}, {"U", "U^{abcd} per unit g [E_R]"}});
    std::printf("U^{1111} = %.15g E_R per unit g\n", d.params.U(0, 0, 0, 0));
  }
  std::printf("cache: %s (%s)\n", (sink.directory() / cache_name).c_str(), hit ? "hit" : "written");
  return 0;
}

BHParams scenario_params(const RunConfig& c, OutputSink& sink, Timer& timer) {
  timer.stage("parameters");
  return cached_parameters(cache_dir(sink), c.lattice(), c.max_bands());
}

int run_ground_state(const RunConfig& c, OutputSink& sink, Timer& timer) {
  const BHParams params = scenario_params(c, sink, timer);
  timer.stage("ground states");
  GsSweepConfig cfg;
  cfg.particles = c.particles;
  cfg.g = c.g;
  cfg.mbh_bands = c.bands_mbh;
  cfg.tdv_bands = c.bands_tdv;
  cfg.variational_bands = c.variational_bands;
  cfg.minimize = c.minimize();
  cfg.threads = c.threads;
  const auto rows = gs_sweep(params, c.lattice(), cfg);

  timer.stage("write");
  CsvTable t({"g", "method", "bands", "D", "energy", "relative", "converged"});
  t.comment(std::to_string(c.sites) + " sites, " + std::to_string(c.particles) + " particles, s = " +
            format_double(c.depth) + (c.periodic ? ", periodic" : ", open"));
  bool all_converged = true;
  for (const auto& r : rows) {
    t.add_row({cell(r.g), cell(r.method), cell(r.bands), cell(r.variational_bands), cell(r.energy), cell(r.relative),
               cell(r.converged ? 1 : 0)});
    std::printf("g = %-6g %-3s bands %d D %d  E = %.12f  E - E_BH = %+.3e%s\n", r.g, r.method.c_str(), r.bands,
                r.variational_bands, r.energy, r.relative, r.converged ? "" : "  (not converged)");
    all_converged = all_converged && r.converged;
  }
  emit(sink, c, c.command == Command::gs_sweep ? "gs_sweep" : "ground_state", t,
       {{"g", "coupling [E_R/k]"},
        {"method", "mbh (multiband exact diagonalisation) or tdv (variational)"},
        {"bands", "N_M for mbh, N_V for tdv"},
        {"D", "variational modes per site (0 for mbh)"},
        {"energy", "ground-state energy [E_R]"},
        {"relative", "energy minus the single-band ground-state energy at the same g [E_R]"},
        {"converged", "1 if the minimiser met its gradient tolerance"}});
  if (!all_converged) {
    std::fprintf(stderr, "varbh: variational minimisation did not converge for some rows (see column 'converged')\n");
    return kExitNumerical;
  }
  return 0;
}

int run_evolve(const RunConfig& c, OutputSink& sink, Timer& timer) {
  const BHParams params = scenario_params(c, sink, timer);
  timer.stage("evolution");
  FockEvolutionConfig cfg;
  cfg.g = c.g.front();
  cfg.occupation = c.occupation;
  cfg.band.clear();
  for (int b : c.initial_band) cfg.band.push_back(b - 1);
  cfg.duration = c.duration;
  cfg.dt = c.dt;
  cfg.output_stride = c.output_stride;
  cfg.mbh_bands = c.bands_mbh.front();
  cfg.tdv_bands = c.bands_tdv.front();
  const FockEvolutionResult r = fock_evolution(params, c.lattice(), cfg);

  timer.stage("write");
  std::vector<std::string> names{"t"};
  Columns cols{{"t", "time [hbar/E_R]"}};
  for (int k = 1; k <= c.sites; ++k) {
    names.push_back("mbh_site_" + std::to_string(k));
    cols.push_back({names.back(), "MBH population of site " + std::to_string(k)});
  }
  for (int k = 1; k <= c.sites; ++k) {
    names.push_back("tdv_site_" + std::to_string(k));
    cols.push_back({names.back(), "TDV population of site " + std::to_string(k)});
  }
  for (int b = 1; b <= cfg.mbh_bands; ++b) {
    names.push_back("mbh_band_" + std::to_string(b));
    cols.push_back({names.back(), "MBH population of band " + std::to_string(b)});
  }
  for (int b = 1; b <= cfg.tdv_bands; ++b) {
    names.push_back("tdv_band_" + std::to_string(b));
    cols.push_back({names.back(), "TDV population of band " + std::to_string(b)});
  }
  CsvTable t(names);
  t.comment("g = " + format_double(cfg.g) + ", N_M = " + std::to_string(cfg.mbh_bands) +
            ", N_V = " + std::to_string(cfg.tdv_bands));
  t.comment("max relative energy drift: mbh " + format_double(r.mbh_energy_drift) + ", tdv " +
            format_double(r.tdv_energy_drift));
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    std::vector<std::string> row{cell(r.times[i])};
    for (double v : r.mbh_sites[i]) row.push_back(cell(v));
    for (double v : r.tdv_sites[i]) row.push_back(cell(v));
    for (double v : r.mbh_bands[i]) row.push_back(cell(v));
    for (double v : r.tdv_bands[i]) row.push_back(cell(v));
    t.add_row(std::move(row));
  }
  emit(sink, c, "evolution", t, cols,
       {{"diagnostics",
         {{"mbh_energy_drift", r.mbh_energy_drift},
          {"tdv_energy_drift", r.tdv_energy_drift},
          {"mbh_norm_drift", r.mbh_norm_drift},
          {"tdv_frame_drift", r.tdv_frame_drift}}}});
  std::printf("%zu samples over %g hbar/E_R; energy drift mbh %.2e tdv %.2e\n", r.times.size(), c.duration,
              r.mbh_energy_drift, r.tdv_energy_drift);
  return 0;
}

int run_quench(const RunConfig& c, OutputSink& sink, Timer& timer) {
  const BHParams params = scenario_params(c, sink, timer);
  timer.stage("quench");
  QuenchConfig cfg;
  cfg.particles = c.particles;
  cfg.g_ini = c.g_ini;
  cfg.g_fin = c.g_fin;
  cfg.tau = c.tau;
  cfg.dt = c.dt;
  cfg.mbh_bands = c.bands_mbh.front();
  cfg.tdv_bands = c.bands_tdv.front();
  cfg.minimize = c.minimize();
  cfg.threads = c.threads;
  const QuenchResult r = linear_quench(params, c.lattice(), cfg);

  timer.stage("write");
  CsvTable t({"tau", "E_mbh", "E_tdv"});
  t.comment("linear ramp g: " + format_double(c.g_ini) + " -> " + format_double(c.g_fin));
  t.comment("ground state at g_fin: mbh " + format_double(r.mbh_ground) + ", tdv " + format_double(r.tdv_ground));
  t.comment("sudden limit <psi0|H(g_fin)|psi0>: mbh " + format_double(r.mbh_sudden) + ", tdv " +
            format_double(r.tdv_sudden));
  for (const auto& row : r.rows) {
    t.add_row({cell(row.tau), cell(row.mbh), cell(row.tdv)});
    std::printf("tau = %-6g E_mbh = %.10f  E_tdv = %.10f\n", row.tau, row.mbh, row.tdv);
  }
  emit(sink, c, "quench", t,
       {{"tau", "ramp duration [hbar/E_R]"},
        {"E_mbh", "MBH energy <H(g_fin)> at t = tau [E_R]"},
        {"E_tdv", "TDV energy at t = tau [E_R]"}},
       {{"references",
         {{"mbh_ground", r.mbh_ground},
          {"tdv_ground", r.tdv_ground},
          {"mbh_sudden", r.mbh_sudden},
          {"tdv_sudden", r.tdv_sudden}}}});
  return 0;
}

int run_modulate(const RunConfig& c, OutputSink& sink, Timer& timer) {
  const BHParams params = scenario_params(c, sink, timer);
  timer.stage("modulation");
  ModulationConfig cfg;
  cfg.particles = c.particles;
  cfg.g0 = c.g0;
  cfg.g_mod = c.g_mod;
  cfg.duration = c.duration;
  cfg.omega = omega_grid(c.omega_min, c.omega_max, c.omega_step);
  cfg.dt = c.dt;
  cfg.mbh_bands = c.bands_mbh.front();
  cfg.tdv_bands = c.bands_tdv.front();
  cfg.threads = c.threads;
  const ModulationResult r = modulation_sweep(params, cfg);

  timer.stage("write");
  CsvTable t({"omega", "D_mbh", "D_tdv"});
  t.comment("g(t) = " + format_double(c.g0) + " + " + format_double(c.g_mod) + " sin(omega t), T = " +
            format_double(c.duration));
  t.comment("overlap of the initial state on the MBH ground state: " + format_double(r.initial_overlap));
  std::vector<double> x, ym, yt;
  for (const auto& row : r.rows) {
    t.add_row({cell(row.omega), cell(row.mbh), cell(row.tdv)});
    x.push_back(row.omega);
    ym.push_back(row.mbh);
    yt.push_back(row.tdv);
  }
  auto peaks_json = [](const std::vector<Peak>& peaks) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : peaks) a.push_back({{"omega", p.position}, {"D", p.height}});
    return a;
  };
  const auto pm = find_peaks(x, ym, 0.05);
  const auto pt = find_peaks(x, yt, 0.05);
  for (const auto& p : pm) std::printf("mbh peak: omega = %.4f  D = %.4f\n", p.position, p.height);
  for (const auto& p : pt) std::printf("tdv peak: omega = %.4f  D = %.4f\n", p.position, p.height);
  emit(sink, c, "modulation", t,
       {{"omega", "drive frequency [E_R/hbar]"},
        {"D_mbh", "MBH transfer efficiency 1 - min_t |<psi(0)|psi(t)>|"},
        {"D_tdv", "TDV transfer efficiency 1 - min_t |<psi(0)|psi(t)>|"}},
       {{"initial_overlap", r.initial_overlap}, {"peaks", {{"mbh", peaks_json(pm)}, {"tdv", peaks_json(pt)}}}});
  return 0;
}

int run(Command command, const Options& o) {
  std::string input_bytes;
  const RunConfig c = resolve(command, o, input_bytes);
  OutputSink sink(resolve_output_dir(o.out, c.out));
  Timer timer;
  int code = 0;
  switch (command) {
    case Command::bands:
      code = run_bands(c, sink, timer, false);
      break;
    case Command::params:
      code = run_bands(c, sink, timer, true);
      break;
    case Command::ground_state:
    case Command::gs_sweep:
      code = run_ground_state(c, sink, timer);
      break;
    case Command::evolve:
      code = run_evolve(c, sink, timer);
      break;
    case Command::quench:
      code = run_quench(c, sink, timer);
      break;
    case Command::modulate:
      code = run_modulate(c, sink, timer);
      break;
  }
  sink.write("config.resolved.ini", serialize_config(c));
  std::vector<std::string> files = sink.files();
  files.push_back("manifest.json");
  sink.write_json("manifest.json", make_manifest(c, content_hash(input_bytes), files, timer.finish()));
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiband and variational Bose-Hubbard calculations"};
  app.set_version_flag("--version", std::string(varbh::kVersion));
  app.require_subcommand(1);

  Options options;
  const std::pair<Command, const char*> commands[] = {
      {Command::bands, "Bloch bands, Wannier functions and tunnelling"},
      {Command::params, "Hubbard parameters J, E and the interaction tensor U"},
      {Command::ground_state, "Ground-state energies (MBH and TDV)"},
      {Command::evolve, "Evolution of a Fock initial state (MBH and TDV)"},
      {Command::quench, "Linear interaction quench (MBH and TDV)"},
      {Command::modulate, "Interaction-modulation spectroscopy on one site"},
      {Command::gs_sweep, "Ground-state energies over a g grid and band counts"},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [command, help] : commands) {
    CLI::App* sub = app.add_subcommand(command_name(command), help);
    add_options(sub, options);
    subs.emplace_back(sub, command);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  Command command = Command::gs_sweep;
  for (const auto& [sub, cmd] : subs) {
    if (sub->parsed()) command = cmd;
  }
  try {
    return run(command, options);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "varbh: config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "varbh: invalid parameters: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "varbh: numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const OutputError& e) {
    std::fprintf(stderr, "varbh: output error: %s\n", e.what());
    return kExitOutput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "varbh: output error: %s\n", e.what());
    return kExitOutput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "varbh: error: %s\n", e.what());
    return kExitNumerical;
  }
}
