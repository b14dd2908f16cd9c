#pragma once

// Result persistence: CSV tables, JSON sidecars and manifests, and the
// versioned band/Wannier/parameter cache.
//
// The output directory is --out when given, else $VARBH_OUTPUT_DIR when set,
// else the config value run.out.

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "varbh/config.hpp"
#include "varbh/hubbard.hpp"
#include "varbh/lattice.hpp"

namespace varbh {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "VARBH_OUTPUT_DIR";
inline constexpr int kCacheVersion = 1;

/// 17 significant digits, shortest exponent form ("%.17g").
std::string format_double(double value);

/// Comma-delimited table with '#'-prefixed header rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void comment(const std::string& line);
  /// Cells are pre-formatted; see cell().
  void add_row(std::vector<std::string> cells);

  [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }
  [[nodiscard]] std::size_t rows() const { return rows_.size(); }
  [[nodiscard]] std::string str() const;

 private:
  std::vector<std::string> comments_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(std::string_view v) { return std::string(v); }

/// --out if given, else $VARBH_OUTPUT_DIR if set and non-empty, else `config_out`.
std::filesystem::path resolve_output_dir(const std::optional<std::string>& cli_out, const std::string& config_out);

/// 64-bit FNV-1a digest as 16 hex digits.
std::string content_hash(std::string_view bytes);

/// Serialised writer for one run's output directory. Records every file written.
class OutputSink {
 public:
  /// Creates the directory; throws OutputError if that fails.
  explicit OutputSink(std::filesystem::path directory);

  [[nodiscard]] const std::filesystem::path& directory() const { return directory_; }

  /// Writes atomically (temporary file + rename). Throws OutputError.
  std::filesystem::path write(const std::string& name, std::string_view content);
  std::filesystem::path write_json(const std::string& name, const nlohmann::json& value);

  [[nodiscard]] std::vector<std::string> files() const;

 private:
  std::filesystem::path directory_;
  mutable std::mutex mutex_;
  std::vector<std::string> files_;
};

/// Sidecar describing one CSV: resolved config, version and column meanings.
nlohmann::json make_sidecar(const RunConfig& config, const std::vector<std::pair<std::string, std::string>>& columns);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

nlohmann::json make_manifest(const RunConfig& config, const std::string& input_hash,
                             const std::vector<std::string>& files, const std::vector<StageTiming>& timings);

// ------------------------------------------------------------------ cache

/// Everything derived from one lattice: spectrum, Wannier basis, parameters (g = 1).
struct BandData {
  BlochSpectrum spectrum;
  WannierBasis wannier;
  BHParams params;
};

BandData compute_band_data(const LatticeSpec& spec, int num_bands, int points_per_site);

nlohmann::json band_data_to_json(const BandData& data);
/// Throws NumericalError on a format or version mismatch.
BandData band_data_from_json(const nlohmann::json& j);

/// <cache_dir>/bands_s<depth>_L<sites>_n<cutoff>_b<bands>_p<points>.json
std::filesystem::path cache_file(const std::filesystem::path& cache_dir, const LatticeSpec& spec, int num_bands,
                                 int points_per_site);

/// Reads the cache entry when present and matching, otherwise computes and
/// stores it. `hit` reports which happened.
BandData cached_band_data(const std::filesystem::path& cache_dir, const LatticeSpec& spec, int num_bands,
                          int points_per_site, bool* hit = nullptr);

/// Parameters for a scenario lattice (param_sites honoured), through the cache.
BHParams cached_parameters(const std::filesystem::path& cache_dir, const LatticeSetup& lattice, int num_bands,
                           bool* hit = nullptr);

}  // namespace varbh
