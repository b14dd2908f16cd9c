#pragma once

// Run configuration: a flat, typed key-value text file with optional
// [section] headers. Keys are addressed as section.key; unknown keys and
// type mismatches raise ConfigError naming the file, line and key.
//
//   # comment
//   [lattice]
//   depth = 10
//   sites = 4
//   [system]
//   g = 0.2, 1, 2, 4

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "varbh/scenarios.hpp"

namespace varbh {

enum class Command { bands, params, ground_state, evolve, quench, modulate, gs_sweep };

/// "ground-state" -> Command::ground_state etc. Throws ConfigError.
Command parse_command(std::string_view name);
std::string command_name(Command command);

struct RunConfig {
  Command command = Command::gs_sweep;

  // [lattice]
  double depth = 10.0;
  int sites = 4;
  bool periodic = true;
  int plane_wave_cutoff = 16;
  int points_per_site = 2048;
  int param_sites = 0;  ///< ring used for J, E, U; 0 = sites

  // [system]
  int particles = 6;
  std::vector<int> bands_mbh{1, 2, 3, 4, 5};
  std::vector<int> bands_tdv{5};
  std::vector<int> variational_bands{1, 2};
  std::vector<double> g{0.2, 1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<int> occupation{2, 2, 1, 1};
  std::vector<int> initial_band{1, 1, 1, 1};  ///< 1-based band per site

  // [time]
  double dt = 1e-3;
  double duration = 20.0;
  int output_stride = 100;

  // [quench]
  double g_ini = 0.2;
  double g_fin = 1.0;
  std::vector<double> tau{1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0};

  // [modulation]
  double g0 = 1.0;
  double g_mod = 0.1;
  double omega_min = 14.0;
  double omega_max = 19.0;
  double omega_step = 0.05;

  // [minimizer]
  std::uint64_t seed = 0x7d5eed;
  int starts = 16;
  int max_iterations = 4000;

  // [run]
  std::string out = "varbh-out";
  int threads = 1;

  [[nodiscard]] LatticeSetup lattice() const;
  [[nodiscard]] TdvMinimizeOptions minimize() const;
  [[nodiscard]] int max_bands() const;
};

/// Defaults for one subcommand.
RunConfig default_config(Command command);

/// Parses `text` over the defaults of `command`. `source` names the input in diagnostics.
RunConfig parse_config(std::string_view text, Command command, std::string_view source = "<config>");

/// Reads and parses a file. Throws ConfigError if it cannot be read.
RunConfig load_config(const std::string& path, Command command);

/// Sets one key ("section.key") from its textual value.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value,
                      std::string_view source = "<override>");

/// Throws ConfigError for any out-of-range or inconsistent value.
void validate_config(const RunConfig& config);

/// Text form that parses back to an identical configuration.
std::string serialize_config(const RunConfig& config);

nlohmann::json config_to_json(const RunConfig& config);

/// Every key path the parser accepts, in serialisation order.
std::vector<std::string> config_keys();

}  // namespace varbh
