#include "varbh/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

#include "varbh/errors.hpp"
#include "varbh/io.hpp"
#include "varbh/lattice.hpp"

namespace varbh {

namespace {

struct CommandName {
  Command command;
  const char* name;
};

constexpr CommandName kCommands[] = {
    {Command::bands, "bands"},       {Command::params, "params"},     {Command::ground_state, "ground-state"},
    {Command::evolve, "evolve"},     {Command::quench, "quench"},     {Command::modulate, "modulate"},
    {Command::gs_sweep, "gs-sweep"},
};

using Member = std::variant<double RunConfig::*, int RunConfig::*, bool RunConfig::*, std::uint64_t RunConfig::*,
                            std::string RunConfig::*, std::vector<int> RunConfig::*,
                            std::vector<double> RunConfig::*>;

struct Field {
  const char* key;
  Member member;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      {"lattice.depth", &RunConfig::depth},
      {"lattice.sites", &RunConfig::sites},
      {"lattice.periodic", &RunConfig::periodic},
      {"lattice.plane_wave_cutoff", &RunConfig::plane_wave_cutoff},
      {"lattice.points_per_site", &RunConfig::points_per_site},
      {"lattice.param_sites", &RunConfig::param_sites},
      {"system.particles", &RunConfig::particles},
      {"system.bands_mbh", &RunConfig::bands_mbh},
      {"system.bands_tdv", &RunConfig::bands_tdv},
      {"system.variational_bands", &RunConfig::variational_bands},
      {"system.g", &RunConfig::g},
      {"system.occupation", &RunConfig::occupation},
      {"system.initial_band", &RunConfig::initial_band},
      {"time.dt", &RunConfig::dt},
      {"time.duration", &RunConfig::duration},
      {"time.output_stride", &RunConfig::output_stride},
      {"quench.g_ini", &RunConfig::g_ini},
      {"quench.g_fin", &RunConfig::g_fin},
      {"quench.tau", &RunConfig::tau},
      {"modulation.g0", &RunConfig::g0},
      {"modulation.g_mod", &RunConfig::g_mod},
      {"modulation.omega_min", &RunConfig::omega_min},
      {"modulation.omega_max", &RunConfig::omega_max},
      {"modulation.omega_step", &RunConfig::omega_step},
      {"minimizer.seed", &RunConfig::seed},
      {"minimizer.starts", &RunConfig::starts},
      {"minimizer.max_iterations", &RunConfig::max_iterations},
      {"run.out", &RunConfig::out},
      {"run.threads", &RunConfig::threads},
  };
  return table;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(std::string_view where, std::string_view key, const std::string& message) {
  std::string text(where);
  text += ": ";
  if (!key.empty()) {
    text += "key '";
    text += key;
    text += "': ";
  }
  text += message;
  throw ConfigError(text);
}

bool parse_scalar(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_scalar(std::string_view s, int& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_scalar(std::string_view s, std::uint64_t& out) {
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
    base = 16;
  }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
  return !s.empty() && ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_scalar(std::string_view s, bool& out) {
  if (s == "true") {
    out = true;
    return true;
  }
  if (s == "false") {
    out = false;
    return true;
  }
  return false;
}

template <class T>
bool parse_list(std::string_view s, std::vector<T>& out) {
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = trim(s.substr(1, s.size() - 2));
  out.clear();
  if (s.empty()) return true;
  while (true) {
    const auto comma = s.find(',');
    T value{};
    if (!parse_scalar(trim(s.substr(0, comma)), value)) return false;
    out.push_back(value);
    if (comma == std::string_view::npos) return true;
    s.remove_prefix(comma + 1);
  }
}

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, double>) return "a number";
  if constexpr (std::is_same_v<T, int>) return "an integer";
  if constexpr (std::is_same_v<T, bool>) return "true or false";
  if constexpr (std::is_same_v<T, std::uint64_t>) return "a non-negative integer";
  if constexpr (std::is_same_v<T, std::string>) return "a string";
  if constexpr (std::is_same_v<T, std::vector<int>>) return "a comma-separated list of integers";
  if constexpr (std::is_same_v<T, std::vector<double>>) return "a comma-separated list of numbers";
  return "a value";
}

void assign(RunConfig& config, const Field& field, std::string_view value, std::string_view where) {
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(config.*member)>;
        T parsed{};
        bool ok = false;
        if constexpr (std::is_same_v<T, std::string>) {
          std::string_view v = value;
          if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
          parsed = std::string(v);
          ok = true;
        } else if constexpr (std::is_same_v<T, std::vector<int>> || std::is_same_v<T, std::vector<double>>) {
          ok = parse_list(value, parsed);
        } else {
          ok = parse_scalar(value, parsed);
        }
        if (!ok) fail(where, field.key, std::string("expected ") + type_name<T>() + ", got '" + std::string(value) + "'");
        config.*member = std::move(parsed);
      },
      field.member);
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (key == f.key) return &f;
  }
  return nullptr;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_same_v<T, double>) {
      s += format_double(values[i]);
    } else {
      s += std::to_string(values[i]);
    }
  }
  return s;
}

std::string format_value(const RunConfig& config, const Field& field) {
  return std::visit(
      [&](auto member) -> std::string {
        const auto& v = config.*member;
        using T = std::remove_cvref_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return format_double(v);
        if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) return std::to_string(v);
        if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        if constexpr (std::is_same_v<T, std::string>) return "\"" + v + "\"";
        if constexpr (std::is_same_v<T, std::vector<int>> || std::is_same_v<T, std::vector<double>>) return join(v);
        return {};
      },
      field.member);
}

}  // namespace

Command parse_command(std::string_view name) {
  for (const auto& c : kCommands) {
    if (name == c.name) return c.command;
  }
  throw ConfigError("unknown subcommand '" + std::string(name) + "'");
}

std::string command_name(Command command) {
  for (const auto& c : kCommands) {
    if (c.command == command) return c.name;
  }
  return "unknown";
}

LatticeSetup RunConfig::lattice() const {
  LatticeSetup l;
  l.depth = depth;
  l.sites = sites;
  l.periodic = periodic;
  l.plane_wave_cutoff = plane_wave_cutoff;
  l.points_per_site = points_per_site;
  l.param_sites = param_sites;
  return l;
}

TdvMinimizeOptions RunConfig::minimize() const {
  TdvMinimizeOptions o;
  o.seed = seed;
  o.starts = starts;
  o.max_iterations = max_iterations;
  return o;
}

int RunConfig::max_bands() const {
  int m = 1;
  for (int b : bands_mbh) m = std::max(m, b);
  for (int b : bands_tdv) m = std::max(m, b);
  return m;
}

RunConfig default_config(Command command) {
  RunConfig c;
  c.command = command;
  switch (command) {
    case Command::bands:
    case Command::params:
      c.bands_mbh = {5};
      c.bands_tdv = {5};
      c.g = {1.0};
      break;
    case Command::ground_state:
      c.bands_mbh = {3};
      c.bands_tdv = {5};
      c.variational_bands = {1};
      c.g = {1.0};
      break;
    case Command::evolve:
      c.bands_mbh = {3};
      c.bands_tdv = {5};
      c.variational_bands = {1};
      c.g = {0.2};
      break;
    case Command::quench:
      c.bands_mbh = {3};
      c.bands_tdv = {5};
      c.variational_bands = {1};
      break;
    case Command::modulate:
      c.depth = 25.0;
      c.sites = 1;
      c.periodic = false;
      c.param_sites = 16;
      c.particles = 2;
      c.bands_mbh = {5};
      c.bands_tdv = {5};
      c.variational_bands = {1};
      c.g = {1.0};
      c.occupation = {2};
      c.initial_band = {1};
      c.duration = 400.0;
      break;
    case Command::gs_sweep:
      break;
  }
  return c;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value, std::string_view source) {
  const Field* field = find_field(key);
  if (!field) fail(source, key, "unknown key");
  assign(config, *field, trim(value), source);
}

RunConfig parse_config(std::string_view text, Command command, std::string_view source) {
  RunConfig config = default_config(command);
  std::string section;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(where, {}, "malformed section header '" + std::string(line) + "'");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const auto& f : fields()) known = known || std::string_view(f.key).starts_with(section + ".");
      if (!known) fail(where, {}, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(where, {}, "expected 'key = value', got '" + std::string(line) + "'");
    const std::string_view name = trim(line.substr(0, eq));
    if (name.empty()) fail(where, {}, "missing key before '='");
    std::string key = section.empty() || name.find('.') != std::string_view::npos
                          ? std::string(name)
                          : section + "." + std::string(name);
    if (!seen.insert(key).second) fail(where, key, "duplicate key");
    set_config_value(config, key, line.substr(eq + 1), where);
  }
  return config;
}

RunConfig load_config(const std::string& path, Command command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), command, path);
}

void validate_config(const RunConfig& c) {
  auto check = [](bool ok, const char* key, const std::string& message) {
    if (!ok) fail("config", key, message);
  };
  const int max_band = 2 * c.plane_wave_cutoff - 1;
  check(c.depth >= kMinWannierDepth, "lattice.depth", "must be at least " + format_double(kMinWannierDepth));
  check(c.sites >= 1, "lattice.sites", "must be at least 1");
  check(c.plane_wave_cutoff >= 4, "lattice.plane_wave_cutoff", "must be at least 4");
  check(c.points_per_site >= 16 && c.points_per_site % 4 == 0, "lattice.points_per_site",
        "must be a multiple of 4 and at least 16");
  check(c.param_sites >= 0, "lattice.param_sites", "must be non-negative");
  check(c.particles >= 1 && c.particles <= 250, "system.particles", "must lie in [1, 250]");

  auto check_bands = [&](const std::vector<int>& list, const char* key) {
    check(!list.empty(), key, "must not be empty");
    for (int b : list) check(b >= 1 && b <= max_band, key, "band counts must lie in [1, " + std::to_string(max_band) + "]");
  };
  check_bands(c.bands_mbh, "system.bands_mbh");
  check_bands(c.bands_tdv, "system.bands_tdv");
  check(!c.variational_bands.empty(), "system.variational_bands", "must not be empty");
  for (int d : c.variational_bands) check(d == 1 || d == 2, "system.variational_bands", "entries must be 1 or 2");
  check(!c.g.empty(), "system.g", "must not be empty");

  check(c.dt > 0.0, "time.dt", "must be positive");
  check(c.duration > 0.0, "time.duration", "must be positive");
  check(c.output_stride >= 1, "time.output_stride", "must be at least 1");
  check(!c.tau.empty(), "quench.tau", "must not be empty");
  for (double t : c.tau) check(t > 0.0, "quench.tau", "durations must be positive");
  check(c.omega_step > 0.0, "modulation.omega_step", "must be positive");
  check(c.omega_max >= c.omega_min, "modulation.omega_max", "must not be below omega_min");
  check(c.starts >= 1, "minimizer.starts", "must be at least 1");
  check(c.max_iterations >= 1, "minimizer.max_iterations", "must be at least 1");
  check(!c.out.empty(), "run.out", "must not be empty");
  check(c.threads >= 1, "run.threads", "must be at least 1");

  if (c.command == Command::evolve) {
    check(c.g.size() == 1, "system.g", "evolve takes a single coupling");
    check(c.bands_mbh.size() == 1, "system.bands_mbh", "evolve takes a single band count");
    check(c.bands_tdv.size() == 1, "system.bands_tdv", "evolve takes a single band count");
    check(static_cast<int>(c.occupation.size()) == c.sites, "system.occupation", "needs one entry per site");
    check(static_cast<int>(c.initial_band.size()) == c.sites, "system.initial_band", "needs one entry per site");
    int total = 0;
    for (int n : c.occupation) {
      check(n >= 0, "system.occupation", "entries must be non-negative");
      total += n;
    }
    check(total == c.particles, "system.occupation", "must sum to system.particles");
    const int limit = std::min(c.bands_mbh.front(), c.bands_tdv.front());
    for (int b : c.initial_band) {
      check(b >= 1 && b <= limit, "system.initial_band", "entries must lie in [1, " + std::to_string(limit) + "]");
    }
  }
  if (c.command == Command::quench) {
    check(c.bands_mbh.size() == 1, "system.bands_mbh", "quench takes a single band count");
    check(c.bands_tdv.size() == 1, "system.bands_tdv", "quench takes a single band count");
  }
  if (c.command == Command::modulate) {
    check(c.sites == 1, "lattice.sites", "modulate runs on a single site");
    check(c.bands_mbh.size() == 1, "system.bands_mbh", "modulate takes a single band count");
    check(c.bands_tdv.size() == 1, "system.bands_tdv", "modulate takes a single band count");
  }
}

std::string serialize_config(const RunConfig& config) {
  std::string out = "# varbh " + command_name(config.command) + " configuration\n";
  std::string section;
  for (const auto& f : fields()) {
    const std::string_view key(f.key);
    const auto dot = key.find('.');
    const std::string sec(key.substr(0, dot));
    if (sec != section) {
      out += (section.empty() ? "[" : "\n[") + sec + "]\n";
      section = sec;
    }
    out += std::string(key.substr(dot + 1)) + " = " + format_value(config, f) + "\n";
  }
  return out;
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json j;
  j["command"] = command_name(config.command);
  for (const auto& f : fields()) {
    const std::string_view key(f.key);
    const auto dot = key.find('.');
    nlohmann::json& slot = j[std::string(key.substr(0, dot))][std::string(key.substr(dot + 1))];
    std::visit([&](auto member) { slot = config.*member; }, f.member);
  }
  return j;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace varbh
