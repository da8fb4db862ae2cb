#pragma once

// Review-to-goal relevance: max-sentence similarity, the dual threshold
// (fixed value and per-goal nearest-rank percentile), goal consolidation
// and company-level aggregation.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ise/corpus.hpp"
#include "ise/embedding.hpp"

namespace ise::scoring {

struct GoalDefinition {
  std::string goal_id;
  std::string name;
  std::string definition;
  bool selected = true;
};

struct ThresholdConfig {
  double fixed_threshold = 0.31;
  double percentile = 95.0;
  /// Replace fixed_threshold by the mean of the per-goal cutoffs.
  bool derive = false;
};

/// `from` is absorbed into `into`.
struct Merge {
  std::string from;
  std::string into;
};

struct GoalConfig {
  std::vector<GoalDefinition> goals;
  std::vector<Merge> merges;
  ThresholdConfig threshold;

  std::vector<GoalDefinition> selected() const;
  /// Selected goals that are not absorbed by a merge, in config order.
  std::vector<std::string> surviving_ids() const;
};

/// JSON: {"goals": [{goal_id, name, definition, selected}], "merges":
/// [{from, into}], "threshold": {fixed_threshold, percentile, derive}}.
/// Throws ConfigError on malformed or inconsistent content.
GoalConfig load_goal_config(const std::filesystem::path& path);
GoalConfig parse_goal_config(std::string_view json_text, const std::string& origin);
void validate_goal_config(const GoalConfig& cfg);

struct ReviewGoalScore {
  std::string review_id;
  std::string goal_id;
  double sim = -1.0;
  double sim_t = 0.0;
  std::optional<std::size_t> best_sentence_ordinal;
};

struct SentenceMatch {
  double sim = -1.0;
  std::optional<std::size_t> ordinal;
};

/// Highest cosine between the goal definition and the sentences of one
/// review field; ties keep the lowest ordinal. No sentences gives sim -1.
SentenceMatch review_goal_sim(const corpus::Review& review, const GoalDefinition& goal,
                              const embedding::EmbeddingStore& store,
                              corpus::Source source = corpus::Source::kPros);

/// Nearest rank: the element at index ceil(p/100 * n) - 1 of the sorted sample.
double goal_percentile_cutoff(std::span<const double> sims, double percentile);

/// sim when sim > fixed_threshold and sim > cutoff, else 0.
double threshold_sim(double sim, double cutoff, const ThresholdConfig& cfg);

/// Mean over goals of their percentile cutoffs.
double derive_fixed_threshold(const std::map<std::string, std::vector<double>>& per_goal_sims, double percentile);

/// |R(j) & R(k)| / |R(j)|.
double goal_overlap(const std::set<std::string>& relevant_j, const std::set<std::string>& relevant_k);

/// Folds absorbed goals into their (transitive) survivors. Per review the
/// survivor takes the largest constituent sim_t; its sim is that value when
/// positive and otherwise the largest constituent sim. `goal_ids` lists every
/// goal the scores may mention.
std::vector<ReviewGoalScore> consolidate(const std::vector<ReviewGoalScore>& scores,
                                         const std::vector<Merge>& merges,
                                         const std::vector<std::string>& goal_ids);

enum class ScoreVariant { kLinear, kExp, kLog };
std::string_view to_string(ScoreVariant v);
ScoreVariant parse_score_variant(std::string_view s);

/// Contribution of one review: 0 when sim_t is 0, otherwise sim_t,
/// e^sim_t / e or log2(1 + sim_t).
double variant_contribution(double sim_t, ScoreVariant variant);

/// Sum of contributions over `review_ids` divided by their count.
double company_score(const std::vector<ReviewGoalScore>& scores, const std::string& goal_id,
                     const std::vector<std::string>& review_ids, ScoreVariant variant = ScoreVariant::kLinear);

/// The k highest sims for a goal, ties by review id.
std::vector<std::pair<std::string, double>> top_k_reviews(const std::vector<ReviewGoalScore>& scores,
                                                         const std::string& goal_id, std::size_t k);

struct ScoringRun {
  /// Sorted by review id, then goal order.
  std::vector<ReviewGoalScore> scores;
  /// Per goal; absent when no review has a sentence in the scored field.
  std::vector<std::pair<std::string, std::optional<double>>> cutoffs;
  std::optional<double> derived_threshold;
  /// The fixed threshold actually applied.
  double fixed_threshold = 0.0;
};

/// Scores every review against every goal. Sentence and definition vectors
/// are resolved up front (a missing key or zero vector is a DataError naming
/// it), similarities are computed in parallel, then cutoffs are taken over
/// the reviews that have at least one sentence and thresholds applied.
ScoringRun score_corpus(const std::vector<corpus::Review>& reviews, const std::vector<GoalDefinition>& goals,
                        const embedding::EmbeddingStore& store, const ThresholdConfig& cfg,
                        corpus::Source source = corpus::Source::kPros);

struct ProsConsRow {
  std::string goal_id;
  std::optional<double> avg_sim_pros;
  std::optional<double> avg_sim_cons;
  std::optional<double> prop_relevant_pros;
  std::optional<double> prop_relevant_cons;
};

/// Mean sim and share of relevant reviews per goal, each field scored on its
/// own (with its own cutoffs). Averages run over reviews whose field has at
/// least one sentence; a field with none anywhere is reported absent.
std::vector<ProsConsRow> pros_cons_report(const std::vector<corpus::Review>& reviews,
                                          const std::vector<GoalDefinition>& goals,
                                          const embedding::EmbeddingStore& store, const ThresholdConfig& cfg);

struct CompanyScores {
  std::string company_id;
  std::map<std::string, double> scores;
  std::size_t n_reviews = 0;
  std::map<std::string, std::size_t> n_relevant;
};

/// One row per company (ascending id) with a score per goal in `goal_ids`.
std::vector<CompanyScores> aggregate_companies(const std::vector<corpus::Review>& reviews,
                                               const std::vector<ReviewGoalScore>& scores,
                                               const std::vector<std::string>& goal_ids,
                                               ScoreVariant variant = ScoreVariant::kLinear);

/// O(j, k) over the corpus-wide relevant sets; absent when R(j) is empty.
std::vector<std::vector<std::optional<double>>> overlap_matrix(const std::vector<ReviewGoalScore>& scores,
                                                               const std::vector<std::string>& goal_ids);

}  // namespace ise::scoring
