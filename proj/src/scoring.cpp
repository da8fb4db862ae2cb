#include "ise/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ise/error.hpp"
#include "ise/io.hpp"
#include "ise/kernels.hpp"

namespace ise::scoring {

namespace {

using nlohmann::json;

// Follows merge edges from `id` to its survivor. Throws on a cycle.
std::string root_of(const std::map<std::string, std::string>& edges, const std::string& id) {
  std::string cur = id;
  std::set<std::string> visited{cur};
  for (auto it = edges.find(cur); it != edges.end(); it = edges.find(cur)) {
    cur = it->second;
    if (!visited.insert(cur).second) throw ConfigError("merge cycle through goal '" + cur + "'");
  }
  return cur;
}

std::map<std::string, std::string> merge_edges(const std::vector<Merge>& merges) {
  std::map<std::string, std::string> edges;
  for (const auto& m : merges) {
    if (m.from == m.into) throw ConfigError("goal '" + m.from + "' merged into itself");
    if (!edges.emplace(m.from, m.into).second) {
      throw ConfigError("goal '" + m.from + "' is absorbed by more than one merge");
    }
  }
  return edges;
}

}  // namespace

std::vector<GoalDefinition> GoalConfig::selected() const {
  std::vector<GoalDefinition> out;
  for (const auto& g : goals) {
    if (g.selected) out.push_back(g);
  }
  return out;
}

std::vector<std::string> GoalConfig::surviving_ids() const {
  std::set<std::string> absorbed;
  for (const auto& m : merges) absorbed.insert(m.from);
  std::vector<std::string> out;
  for (const auto& g : goals) {
    if (g.selected && !absorbed.contains(g.goal_id)) out.push_back(g.goal_id);
  }
  return out;
}

void validate_goal_config(const GoalConfig& cfg) {
  std::map<std::string, const GoalDefinition*> by_id;
  for (const auto& g : cfg.goals) {
    if (g.goal_id.empty()) throw ConfigError("goal with empty goal_id");
    if (trim(g.definition).empty()) throw ConfigError("goal '" + g.goal_id + "' has an empty definition");
    if (!by_id.emplace(g.goal_id, &g).second) throw ConfigError("duplicate goal_id '" + g.goal_id + "'");
  }
  if (cfg.selected().empty()) throw ConfigError("no goal is selected");
  const auto& t = cfg.threshold;
  if (!(t.fixed_threshold > -1.0 && t.fixed_threshold < 1.0)) {
    throw ConfigError("fixed_threshold must lie in (-1, 1)");
  }
  if (!(t.percentile > 0.0 && t.percentile < 100.0)) throw ConfigError("percentile must lie in (0, 100)");
  auto edges = merge_edges(cfg.merges);
  for (const auto& m : cfg.merges) {
    for (const auto* id : {&m.from, &m.into}) {
      auto it = by_id.find(*id);
      if (it == by_id.end()) throw ConfigError("merge references unknown goal '" + *id + "'");
      if (!it->second->selected) throw ConfigError("merge references unselected goal '" + *id + "'");
    }
    root_of(edges, m.from);
  }
}

GoalConfig parse_goal_config(std::string_view json_text, const std::string& origin) {
  GoalConfig cfg;
  try {
    json j = json::parse(json_text);
    for (const auto& g : j.at("goals")) {
      GoalDefinition d;
      d.goal_id = g.at("goal_id").get<std::string>();
      d.name = g.value("name", d.goal_id);
      d.definition = trim(g.at("definition").get<std::string>());
      d.selected = g.value("selected", true);
      cfg.goals.push_back(std::move(d));
    }
    for (const auto& m : j.value("merges", json::array())) {
      cfg.merges.push_back({m.at("from").get<std::string>(), m.at("into").get<std::string>()});
    }
    if (j.contains("threshold")) {
      const auto& t = j["threshold"];
      cfg.threshold.fixed_threshold = t.value("fixed_threshold", cfg.threshold.fixed_threshold);
      cfg.threshold.percentile = t.value("percentile", cfg.threshold.percentile);
      cfg.threshold.derive = t.value("derive", cfg.threshold.derive);
    }
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  validate_goal_config(cfg);
  return cfg;
}

GoalConfig load_goal_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_goal_config(text, path.string());
}

SentenceMatch review_goal_sim(const corpus::Review& review, const GoalDefinition& goal,
                              const embedding::EmbeddingStore& store, corpus::Source source) {
  const auto goal_vec = store.at(goal.definition);
  SentenceMatch best;
  for (const auto& s : corpus::review_sentences(review, source)) {
    auto v = store.find(s.text);
    if (!v) {
      throw DataError("missing embedding for sentence '" + s.text + "' of review " + review.review_id);
    }
    const double c = embedding::cosine(*v, goal_vec);
    if (!best.ordinal || c > best.sim) {
      best.sim = c;
      best.ordinal = s.ordinal;
    }
  }
  return best;
}

double goal_percentile_cutoff(std::span<const double> sims, double percentile) {
  if (sims.empty()) throw DataError("percentile cutoff of an empty sample");
  if (!(percentile > 0.0 && percentile <= 100.0)) throw ConfigError("percentile must lie in (0, 100]");
  std::vector<double> sorted(sims.begin(), sims.end());
  for (double v : sorted) {
    if (std::isnan(v)) throw DataError("percentile cutoff: NaN similarity");
  }
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // Multiply first: 95 * 100 / 100 is exactly 95, 0.95 * 100 is not.
  const double rank = std::ceil(percentile * n / 100.0);
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, n)) - 1;
  return sorted[idx];
}

double threshold_sim(double sim, double cutoff, const ThresholdConfig& cfg) {
  return (sim > cfg.fixed_threshold && sim > cutoff) ? sim : 0.0;
}

double derive_fixed_threshold(const std::map<std::string, std::vector<double>>& per_goal_sims, double percentile) {
  if (per_goal_sims.empty()) throw DataError("threshold derivation needs at least one goal");
  double sum = 0.0;
  for (const auto& [goal, sims] : per_goal_sims) {
    if (sims.empty()) throw DataError("goal '" + goal + "' has no similarities");
    sum += goal_percentile_cutoff(sims, percentile);
  }
  return sum / static_cast<double>(per_goal_sims.size());
}

double goal_overlap(const std::set<std::string>& relevant_j, const std::set<std::string>& relevant_k) {
  if (relevant_j.empty()) throw DataError("undefined overlap denominator");
  std::size_t common = 0;
  for (const auto& r : relevant_j) common += relevant_k.count(r);
  return static_cast<double>(common) / static_cast<double>(relevant_j.size());
}

std::vector<ReviewGoalScore> consolidate(const std::vector<ReviewGoalScore>& scores,
                                         const std::vector<Merge>& merges,
                                         const std::vector<std::string>& goal_ids) {
  const std::set<std::string> known(goal_ids.begin(), goal_ids.end());
  for (const auto& m : merges) {
    for (const auto* id : {&m.from, &m.into}) {
      if (!known.contains(*id)) throw ConfigError("merge references unknown goal '" + *id + "'");
    }
  }
  const auto edges = merge_edges(merges);
  std::map<std::string, std::string> root;
  for (const auto& g : goal_ids) root[g] = root_of(edges, g);

  struct Acc {
    ReviewGoalScore out;
    double best_sim_t = 0.0;
    std::optional<std::size_t> sim_t_ordinal;
    double best_sim = -std::numeric_limits<double>::infinity();
    std::optional<std::size_t> sim_ordinal;
  };
  std::vector<Acc> acc;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& s : scores) {
    auto it = root.find(s.goal_id);
    if (it == root.end()) throw DataError("score for unknown goal '" + s.goal_id + "'");
    auto [pos, inserted] = slot.emplace(std::make_pair(s.review_id, it->second), acc.size());
    if (inserted) {
      Acc a;
      a.out.review_id = s.review_id;
      a.out.goal_id = it->second;
      acc.push_back(std::move(a));
    }
    Acc& a = acc[pos->second];
    if (s.sim_t > a.best_sim_t) {
      a.best_sim_t = s.sim_t;
      a.sim_t_ordinal = s.best_sentence_ordinal;
    }
    if (s.sim > a.best_sim) {
      a.best_sim = s.sim;
      a.sim_ordinal = s.best_sentence_ordinal;
    }
  }
  std::vector<ReviewGoalScore> out;
  out.reserve(acc.size());
  for (auto& a : acc) {
    a.out.sim_t = a.best_sim_t;
    if (a.best_sim_t > 0.0) {
      a.out.sim = a.best_sim_t;
      a.out.best_sentence_ordinal = a.sim_t_ordinal;
    } else {
      a.out.sim = a.best_sim;
      a.out.best_sentence_ordinal = a.sim_ordinal;
    }
    out.push_back(std::move(a.out));
  }
  return out;
}

std::string_view to_string(ScoreVariant v) {
  switch (v) {
    case ScoreVariant::kLinear: return "linear";
    case ScoreVariant::kExp: return "exp";
    default: return "log";
  }
}

ScoreVariant parse_score_variant(std::string_view s) {
  if (s == "linear") return ScoreVariant::kLinear;
  if (s == "exp") return ScoreVariant::kExp;
  if (s == "log") return ScoreVariant::kLog;
  throw ConfigError("unknown score variant '" + std::string(s) + "'");
}

double variant_contribution(double sim_t, ScoreVariant variant) {
  if (!(sim_t > 0.0)) return 0.0;
  switch (variant) {
    case ScoreVariant::kLinear: return sim_t;
    case ScoreVariant::kExp: return std::exp(sim_t - 1.0);
    default: return std::log2(1.0 + sim_t);
  }
}

double company_score(const std::vector<ReviewGoalScore>& scores, const std::string& goal_id,
                     const std::vector<std::string>& review_ids, ScoreVariant variant) {
  if (review_ids.empty()) throw DataError("company score over an empty review list");
  std::unordered_map<std::string, double> sim_t;
  for (const auto& s : scores) {
    if (s.goal_id == goal_id) sim_t[s.review_id] = s.sim_t;
  }
  double sum = 0.0;
  for (const auto& r : review_ids) {
    auto it = sim_t.find(r);
    if (it == sim_t.end()) throw DataError("no score for review " + r + " and goal " + goal_id);
    sum += variant_contribution(it->second, variant);
  }
  return sum / static_cast<double>(review_ids.size());
}

std::vector<std::pair<std::string, double>> top_k_reviews(const std::vector<ReviewGoalScore>& scores,
                                                         const std::string& goal_id, std::size_t k) {
  if (k == 0) throw ConfigError("top-k needs k >= 1");
  std::vector<std::pair<std::string, double>> out;
  for (const auto& s : scores) {
    if (s.goal_id == goal_id) out.emplace_back(s.review_id, s.sim);
  }
  if (out.empty()) throw DataError("unknown goal '" + goal_id + "'");
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

ScoringRun score_corpus(const std::vector<corpus::Review>& reviews, const std::vector<GoalDefinition>& goals,
                        const embedding::EmbeddingStore& store, const ThresholdConfig& cfg,
                        corpus::Source source) {
  if (goals.empty()) throw ConfigError("no goals to score");
  std::vector<bool> checked(store.size(), false);
  auto resolve = [&](const std::string& key, const std::string& what) {
    auto idx = store.index_of(key);
    if (!idx) throw DataError("missing embedding for " + what);
    if (!checked[*idx]) {
      if (embedding::norm(store.row(*idx)) == 0.0) throw DataError("zero embedding vector for " + what);
      checked[*idx] = true;
    }
    return *idx;
  };

  std::vector<std::size_t> goal_rows;
  for (const auto& g : goals) goal_rows.push_back(resolve(g.definition, "definition of goal '" + g.goal_id + "'"));

  // Reviews are processed in id order so the output cannot depend on input order.
  std::vector<const corpus::Review*> order;
  for (const auto& r : reviews) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const corpus::Review* a, const corpus::Review* b) { return a->review_id < b->review_id; });

  kernels::SentenceBatch batch;
  for (const auto* r : order) {
    for (const auto& s : corpus::review_sentences(*r, source)) {
      batch.rows.push_back(resolve(s.text, "sentence '" + s.text + "' of review " + r->review_id));
    }
    batch.offsets.push_back(batch.rows.size());
  }

  const std::size_t n_goals = goals.size();
  std::vector<kernels::MaxSim> sims(order.size() * n_goals);
  kernels::max_similarity(store, batch, goal_rows, sims);

  ScoringRun run;
  std::map<std::string, std::vector<double>> populations;
  for (std::size_t g = 0; g < n_goals; ++g) {
    std::vector<double> pop;
    for (std::size_t r = 0; r < order.size(); ++r) {
      const auto& m = sims[r * n_goals + g];
      if (m.ordinal >= 0) pop.push_back(m.sim);
    }
    std::optional<double> cutoff;
    if (!pop.empty()) {
      cutoff = goal_percentile_cutoff(pop, cfg.percentile);
      populations[goals[g].goal_id] = std::move(pop);
    }
    run.cutoffs.emplace_back(goals[g].goal_id, cutoff);
  }
  if (!populations.empty()) run.derived_threshold = derive_fixed_threshold(populations, cfg.percentile);

  ThresholdConfig applied = cfg;
  if (cfg.derive) {
    if (!run.derived_threshold) throw DataError("cannot derive a threshold: no review has a sentence");
    applied.fixed_threshold = *run.derived_threshold;
  }
  run.fixed_threshold = applied.fixed_threshold;

  run.scores.reserve(sims.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    for (std::size_t g = 0; g < n_goals; ++g) {
      const auto& m = sims[r * n_goals + g];
      ReviewGoalScore s;
      s.review_id = order[r]->review_id;
      s.goal_id = goals[g].goal_id;
      s.sim = m.sim;
      if (m.ordinal >= 0) {
        s.best_sentence_ordinal = static_cast<std::size_t>(m.ordinal);
        s.sim_t = threshold_sim(m.sim, *run.cutoffs[g].second, applied);
      }
      run.scores.push_back(std::move(s));
    }
  }
  return run;
}

std::vector<ProsConsRow> pros_cons_report(const std::vector<corpus::Review>& reviews,
                                          const std::vector<GoalDefinition>& goals,
                                          const embedding::EmbeddingStore& store, const ThresholdConfig& cfg) {
  std::vector<ProsConsRow> rows(goals.size());
  for (std::size_t g = 0; g < goals.size(); ++g) rows[g].goal_id = goals[g].goal_id;
  for (auto source : {corpus::Source::kPros, corpus::Source::kCons}) {
    auto run = score_corpus(reviews, goals, store, cfg, source);
    std::vector<double> sim_sum(goals.size(), 0.0);
    std::vector<std::size_t> relevant(goals.size(), 0);
    std::vector<std::size_t> scored(goals.size(), 0);
    for (std::size_t i = 0; i < run.scores.size(); ++i) {
      const auto g = i % goals.size();
      const auto& s = run.scores[i];
      if (!s.best_sentence_ordinal) continue;
      sim_sum[g] += s.sim;
      ++scored[g];
      if (s.sim_t > 0.0) ++relevant[g];
    }
    for (std::size_t g = 0; g < goals.size(); ++g) {
      if (scored[g] == 0) continue;
      const double n = static_cast<double>(scored[g]);
      const double avg = sim_sum[g] / n;
      const double prop = static_cast<double>(relevant[g]) / n;
      if (source == corpus::Source::kPros) {
        rows[g].avg_sim_pros = avg;
        rows[g].prop_relevant_pros = prop;
      } else {
        rows[g].avg_sim_cons = avg;
        rows[g].prop_relevant_cons = prop;
      }
    }
  }
  return rows;
}

std::vector<CompanyScores> aggregate_companies(const std::vector<corpus::Review>& reviews,
                                               const std::vector<ReviewGoalScore>& scores,
                                               const std::vector<std::string>& goal_ids, ScoreVariant variant) {
  std::map<std::string, std::vector<std::string>> by_company;
  for (const auto& r : reviews) by_company[r.company_id].push_back(r.review_id);
  std::map<std::string, std::map<std::string, double>> sim_t;  // goal -> review -> sim_t
  for (const auto& s : scores) sim_t[s.goal_id][s.review_id] = s.sim_t;

  std::vector<CompanyScores> out;
  for (auto& [company, ids] : by_company) {
    std::sort(ids.begin(), ids.end());
    CompanyScores cs;
    cs.company_id = company;
    cs.n_reviews = ids.size();
    for (const auto& g : goal_ids) {
      auto git = sim_t.find(g);
      if (git == sim_t.end()) throw DataError("no scores for goal '" + g + "'");
      double sum = 0.0;
      std::size_t relevant = 0;
      for (const auto& r : ids) {
        auto it = git->second.find(r);
        if (it == git->second.end()) throw DataError("no score for review " + r + " and goal " + g);
        sum += variant_contribution(it->second, variant);
        if (it->second > 0.0) ++relevant;
      }
      cs.scores[g] = sum / static_cast<double>(ids.size());
      cs.n_relevant[g] = relevant;
    }
    out.push_back(std::move(cs));
  }
  return out;
}

std::vector<std::vector<std::optional<double>>> overlap_matrix(const std::vector<ReviewGoalScore>& scores,
                                                               const std::vector<std::string>& goal_ids) {
  std::map<std::string, std::set<std::string>> relevant;
  for (const auto& g : goal_ids) relevant[g];
  for (const auto& s : scores) {
    if (s.sim_t > 0.0) relevant[s.goal_id].insert(s.review_id);
  }
  std::vector<std::vector<std::optional<double>>> m(goal_ids.size(),
                                                    std::vector<std::optional<double>>(goal_ids.size()));
  for (std::size_t j = 0; j < goal_ids.size(); ++j) {
    const auto& rj = relevant[goal_ids[j]];
    if (rj.empty()) continue;
    for (std::size_t k = 0; k < goal_ids.size(); ++k) m[j][k] = goal_overlap(rj, relevant[goal_ids[k]]);
  }
  return m;
}

}  // namespace ise::scoring
