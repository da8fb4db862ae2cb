#pragma once

// Batch driver: configuration, stage commands and run manifests.
//
// Every stage reads its inputs from the output directory (or from files
// named in the config), writes its artifacts atomically and then a
// manifest.<command>.json carrying the config hash, SHA-256 digests of
// inputs and outputs, row counts and wall time.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ise/corpus.hpp"
#include "ise/scoring.hpp"
#include "ise/stats.hpp"
#include "ise/validation.hpp"

namespace ise::pipeline {

inline constexpr std::string_view kVersion = "1.0.0";

struct ExternalReportSpec {
  std::filesystem::path path;
  /// Internal goal a rank-only report is compared with. Reports with a
  /// metric map are compared per mapped goal instead.
  std::optional<std::string> goal;
};

struct StocksSpec {
  std::filesystem::path path;  // CSV: company_id, growth
  std::size_t bins = 5;
};

struct PipelineConfig {
  std::filesystem::path config_path;
  std::filesystem::path reviews;
  corpus::Format reviews_format = corpus::Format::kJsonl;
  /// Absent: use the stub-embed artifact in the output directory.
  std::optional<std::filesystem::path> embeddings;
  std::filesystem::path goals_path;
  std::filesystem::path out_dir;
  scoring::GoalConfig goals;
  corpus::CorpusFilter filter;
  scoring::ScoreVariant variant = scoring::ScoreVariant::kLinear;
  stats::PcaMode pca_mode = stats::PcaMode::kCorrelation;
  stats::StepDirection step_direction = stats::StepDirection::kBoth;
  bool regress_minmax_scale = false;
  validation::RboConfig rbo;
  std::uint64_t seed = 0;
  std::uint32_t stub_dim = 64;
  std::size_t top_k_reviews = 5;
  std::size_t keyword_top_k = 10;
  std::size_t ngram_min = 1;
  std::size_t ngram_max = 4;
  std::optional<StocksSpec> stocks;
  std::optional<std::filesystem::path> sectors;  // CSV: company_id, sector
  std::vector<ExternalReportSpec> external_reports;
  int threads = 0;  // 0: OpenMP default
  bool strict = false;

  /// Effective settings that determine artifact content (no output
  /// directory, no thread count).
  nlohmann::json canonical;
  std::string config_hash;
};

struct Overrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> dim;
  bool strict = false;
};

/// Reads a JSON config. Relative paths resolve against the config file's
/// directory. Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

/// Stage names in pipeline order.
const std::vector<std::string>& commands();

/// Runs one stage. Throws DataError / ConfigError.
void run_command(const std::string& command, const PipelineConfig& cfg, std::ostream& log);

/// Full CLI entry point (argv[0] included); returns the process exit code:
/// 0 success, 1 data error, 2 configuration error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(std::string_view bytes);

}  // namespace ise::pipeline
