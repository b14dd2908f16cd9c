#include "varbh/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <Eigen/Core>

#include "varbh/errors.hpp"

namespace varbh {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::comment(const std::string& line) { comments_.push_back(line); }

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) throw std::invalid_argument("row width differs from the column count");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  for (const auto& c : comments_) out += "# " + c + "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  out += "# ";
  line(columns_);
  for (const auto& r : rows_) line(r);
  return out;
}

fs::path resolve_output_dir(const std::optional<std::string>& cli_out, const std::string& config_out) {
  if (cli_out) return *cli_out;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return config_out;
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

OutputSink::OutputSink(fs::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(directory_, ec);
  if (ec || !fs::is_directory(directory_)) {
    throw OutputError("cannot create output directory " + directory_.string() + ": " + ec.message());
  }
}

fs::path OutputSink::write(const std::string& name, std::string_view content) {
  const std::lock_guard lock(mutex_);
  const fs::path target = directory_ / name;
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw OutputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) throw OutputError("cannot move " + tmp.string() + " to " + target.string() + ": " + ec.message());
  files_.push_back(name);
  return target;
}

fs::path OutputSink::write_json(const std::string& name, const json& value) {
  return write(name, value.dump(2) + "\n");
}

std::vector<std::string> OutputSink::files() const {
  const std::lock_guard lock(mutex_);
  return files_;
}

namespace {

json units() {
  return {{"energy", "E_R"}, {"time", "hbar/E_R"}, {"length", "lattice constant a"}, {"g", "E_R/k, k = pi/a"}};
}

}  // namespace

json make_sidecar(const RunConfig& config, const std::vector<std::pair<std::string, std::string>>& columns) {
  json cols = json::array();
  for (const auto& [name, description] : columns) cols.push_back({{"name", name}, {"description", description}});
  return {{"tool", "varbh"},  {"version", kVersion}, {"command", command_name(config.command)},
          {"units", units()}, {"columns", cols},     {"config", config_to_json(config)}};
}

json make_manifest(const RunConfig& config, const std::string& input_hash, const std::vector<std::string>& files,
                   const std::vector<StageTiming>& timings) {
  json t = json::array();
  for (const auto& s : timings) t.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
  json platform = {
      {"compiler", __VERSION__},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"note", "results are bit-identical for a fixed binary and thread count; other compilers, flags or "
               "CPUs may differ in the last digits"},
  };
  return {{"tool", "varbh"},
          {"version", kVersion},
          {"command", command_name(config.command)},
          {"config", config_to_json(config)},
          {"config_text", serialize_config(config)},
          {"input_hash", input_hash},
          {"files", files},
          {"timings", t},
          {"units", units()},
          {"platform", platform}};
}

// ------------------------------------------------------------------ cache

BandData compute_band_data(const LatticeSpec& spec, int num_bands, int points_per_site) {
  BandData d;
  d.spectrum = solve_bloch(spec, num_bands);
  d.wannier = build_wannier(d.spectrum);
  d.params = bh_params_from(d.spectrum, d.wannier, 1.0, points_per_site);
  return d;
}

namespace {

json complex_array(const std::vector<cplx>& v) {
  json a = json::array();
  for (const auto& z : v) a.push_back({z.real(), z.imag()});
  return a;
}

std::vector<cplx> complex_vector(const json& a) {
  std::vector<cplx> v;
  v.reserve(a.size());
  for (const auto& z : a) v.emplace_back(z.at(0).get<double>(), z.at(1).get<double>());
  return v;
}

json spec_json(const LatticeSpec& spec, int num_bands, int points_per_site) {
  return {{"depth", spec.depth},
          {"sites", spec.sites},
          {"plane_wave_cutoff", spec.plane_wave_cutoff},
          {"num_bands", num_bands},
          {"points_per_site", points_per_site}};
}

}  // namespace

json band_data_to_json(const BandData& d) {
  const auto& s = d.spectrum;
  json eig = json::array();
  for (const auto& band : s.eigenvectors) {
    json per_q = json::array();
    for (const auto& v : band) per_q.push_back(complex_array(v));
    eig.push_back(per_q);
  }
  json wc = json::array();
  for (const auto& c : d.wannier.coefficients) wc.push_back(complex_array(c));
  const auto& p = d.params;
  return {
      {"format", "varbh-band-cache"},
      {"version", kCacheVersion},
      {"key", spec_json(s.lattice, s.num_bands, p.points_per_site)},
      {"spectrum",
       {{"quasimomenta", s.quasimomenta},
        {"energies", s.energies},
        {"eigenvectors", eig},
        {"max_residual", s.max_residual}}},
      {"wannier", {{"wavevectors", d.wannier.wavevectors}, {"coefficients", wc}}},
      {"params",
       {{"J", p.J}, {"E", p.E}, {"U", p.U.data()}, {"g", p.g}, {"sites", p.sites}, {"depth", p.depth}}},
  };
}

BandData band_data_from_json(const json& j) {
  try {
    if (j.at("format") != "varbh-band-cache") throw NumericalError("not a band cache file");
    if (j.at("version").get<int>() != kCacheVersion) {
      throw NumericalError("band cache version " + j.at("version").dump() + " is not " + std::to_string(kCacheVersion));
    }
    const json& key = j.at("key");
    LatticeSpec spec;
    spec.depth = key.at("depth").get<double>();
    spec.sites = key.at("sites").get<int>();
    spec.plane_wave_cutoff = key.at("plane_wave_cutoff").get<int>();
    const int bands = key.at("num_bands").get<int>();
    const int points = key.at("points_per_site").get<int>();

    BandData d;
    auto& s = d.spectrum;
    s.lattice = spec;
    s.num_bands = bands;
    const json& js = j.at("spectrum");
    s.quasimomenta = js.at("quasimomenta").get<std::vector<double>>();
    s.energies = js.at("energies").get<std::vector<std::vector<double>>>();
    s.max_residual = js.at("max_residual").get<double>();
    for (const auto& band : js.at("eigenvectors")) {
      std::vector<std::vector<cplx>> per_q;
      for (const auto& v : band) per_q.push_back(complex_vector(v));
      s.eigenvectors.push_back(std::move(per_q));
    }

    d.wannier.lattice = spec;
    d.wannier.num_bands = bands;
    d.wannier.wavevectors = j.at("wannier").at("wavevectors").get<std::vector<double>>();
    for (const auto& c : j.at("wannier").at("coefficients")) d.wannier.coefficients.push_back(complex_vector(c));

    const json& jp = j.at("params");
    BHParams& p = d.params;
    p.num_bands = bands;
    p.J = jp.at("J").get<std::vector<double>>();
    p.E = jp.at("E").get<std::vector<double>>();
    p.U = Tensor4(bands);
    p.U.data() = jp.at("U").get<std::vector<double>>();
    p.g = jp.at("g").get<double>();
    p.depth = jp.at("depth").get<double>();
    p.sites = jp.at("sites").get<int>();
    p.plane_wave_cutoff = spec.plane_wave_cutoff;
    p.points_per_site = points;

    const auto nb = static_cast<std::size_t>(bands);
    const auto side = static_cast<std::size_t>(bands);
    if (s.energies.size() != nb || s.eigenvectors.size() != nb || d.wannier.coefficients.size() != nb ||
        p.J.size() != nb || p.E.size() != nb || p.U.data().size() != side * side * side * side) {
      throw NumericalError("band cache arrays have inconsistent sizes");
    }
    return d;
  } catch (const json::exception& e) {
    throw NumericalError(std::string("malformed band cache: ") + e.what());
  }
}

fs::path cache_file(const fs::path& cache_dir, const LatticeSpec& spec, int num_bands, int points_per_site) {
  return cache_dir / ("bands_s" + format_double(spec.depth) + "_L" + std::to_string(spec.sites) + "_n" +
                      std::to_string(spec.plane_wave_cutoff) + "_b" + std::to_string(num_bands) + "_p" +
                      std::to_string(points_per_site) + ".json");
}

BandData cached_band_data(const fs::path& cache_dir, const LatticeSpec& spec, int num_bands, int points_per_site,
                          bool* hit) {
  const fs::path file = cache_file(cache_dir, spec, num_bands, points_per_site);
  if (hit) *hit = false;
  if (fs::exists(file)) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      const json j = json::parse(buf.str());
      if (j.at("key") == spec_json(spec, num_bands, points_per_site)) {
        BandData d = band_data_from_json(j);
        if (hit) *hit = true;
        return d;
      }
    } catch (const std::exception&) {
      // Unreadable or stale entry: recompute and overwrite below.
    }
  }
  BandData d = compute_band_data(spec, num_bands, points_per_site);
  OutputSink sink(cache_dir);
  sink.write(file.filename().string(), band_data_to_json(d).dump() + "\n");
  return d;
}

BHParams cached_parameters(const fs::path& cache_dir, const LatticeSetup& lattice, int num_bands, bool* hit) {
  LatticeSpec spec;
  spec.depth = lattice.depth;
  spec.sites = lattice.param_sites > 0 ? lattice.param_sites : lattice.sites;
  spec.plane_wave_cutoff = lattice.plane_wave_cutoff;
  BHParams p = cached_band_data(cache_dir, spec, num_bands, lattice.points_per_site, hit).params;
  p.sites = lattice.sites;
  return p;
}

}  // namespace varbh
