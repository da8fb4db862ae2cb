#pragma once

// Agreement between internal company rankings and external reports:
// rank-biased overlap (RBO), a shuffled-ranking baseline, and Spearman
// correlation on the shared entities.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ise::validation {

enum class RboMode { kExtrapolated, kFiniteDepth };
std::string_view to_string(RboMode m);
RboMode parse_rbo_mode(std::string_view s);

struct RboConfig {
  double persistence_p = 0.9;
  RboMode mode = RboMode::kExtrapolated;
  std::size_t baseline_runs = 1000;
  std::uint64_t seed = 0;
};

struct RboResult {
  double value = 0.0;
  std::size_t depth = 0;  // min(|a|, |b|)
  /// Weight not covered by depths 1..depth, i.e. p^depth. In finite-depth
  /// mode the evaluated weights sum to 1 - residual.
  double residual = 1.0;
};

/// RBO over integer ids. Extrapolated mode (Webber et al. 2010):
///   (X_k / k) p^k + (1-p)/p * sum_{d=1..k} (X_d / d) p^d
/// Finite-depth mode: (1-p) * sum_{d=1..k} p^(d-1) X_d / d.
/// X_d is the overlap of the two depth-d prefixes and k = min(|a|,|b|).
/// Throws DataError when a list repeats an id.
RboResult rbo_ids(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b, double p,
                  RboMode mode);

/// String-keyed front end of `rbo_ids`.
RboResult rbo_detailed(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       const RboConfig& cfg);
double rbo(const std::vector<std::string>& a, const std::vector<std::string>& b, const RboConfig& cfg);

/// Mean RBO between `reference` and cfg.baseline_runs uniform shuffles of
/// `universe`. Requires reference to be a subset of universe.
double rbo_random_baseline(const std::vector<std::string>& universe,
                           const std::vector<std::string>& reference, const RboConfig& cfg);

/// Same estimate without the subset precondition: the reference may name
/// entities the universe lacks (an external report covering companies the
/// corpus does not).
double mean_shuffled_rbo(const std::vector<std::string>& universe,
                         const std::vector<std::string>& reference, const RboConfig& cfg);

struct ExternalEntry {
  std::string entity_id;
  double rank = 0.0;
  std::optional<double> score;
};

struct ExternalRanking {
  std::string report_id;
  std::vector<ExternalEntry> entries;
  /// entity -> metric -> raw score
  std::map<std::string, std::map<std::string, double>> raw_metrics;
  /// external metric -> goal ids it informs
  std::map<std::string, std::vector<std::string>> metric_map;

  /// Entity ids ordered by rank ascending (ties by id).
  std::vector<std::string> ordered_entities() const;
};

ExternalRanking load_external_ranking(const std::filesystem::path& path);

/// fr(u, i): mean of u's raw scores over the metrics mapped to goal i.
/// Returns goal -> entity -> score. Entities with none of a goal's mapped
/// metrics are left out for that goal.
std::map<std::string, std::map<std::string, double>> external_goal_scores(const ExternalRanking& report);

struct RankedEntity {
  std::string entity_id;
  double score = 0.0;
};

struct SpearmanOnCommon {
  double rho = 0.0;
  double p_value = 1.0;
};

struct ComparisonReport {
  double rbo = 0.0;
  double rbo_baseline = 0.0;
  std::optional<SpearmanOnCommon> spearman_on_common;
  std::size_t n_common = 0;
};

/// Orders by score descending, ties by entity id ascending.
std::vector<std::string> ranked_order(const std::vector<RankedEntity>& scored);

/// Compares two scored rankings (higher score ranks first). RBO runs on the
/// full orderings; Spearman uses the scores of the shared entities only
/// (ties get average ranks) and is absent when fewer than three are shared.
/// The baseline shuffles the internal entities.
ComparisonReport compare_rankings(const std::vector<RankedEntity>& internal,
                                  const std::vector<RankedEntity>& external, const RboConfig& cfg);

/// External scores for a rank-only report: score = -rank.
std::vector<RankedEntity> entries_as_scores(const ExternalRanking& report);

}  // namespace ise::validation
