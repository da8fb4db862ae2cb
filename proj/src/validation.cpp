#include "ise/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "ise/error.hpp"
#include "ise/io.hpp"
#include "ise/kernels.hpp"
#include "ise/stats.hpp"

namespace ise::validation {

namespace {

// Maps entity names onto dense ids shared by both lists.
class Interner {
 public:
  std::uint32_t id(const std::string& s) {
    auto [it, inserted] = ids_.emplace(s, static_cast<std::uint32_t>(ids_.size()));
    return it->second;
  }
  std::vector<std::uint32_t> ids(const std::vector<std::string>& list) {
    std::vector<std::uint32_t> out;
    out.reserve(list.size());
    for (const auto& s : list) out.push_back(id(s));
    return out;
  }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
};

void require_unique(const std::vector<std::string>& list, const char* what) {
  std::set<std::string> seen;
  for (const auto& s : list) {
    if (!seen.insert(s).second) throw DataError(std::string("duplicate entity '") + s + "' in " + what);
  }
}

void check_p(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("RBO persistence must lie in (0, 1)");
}

}  // namespace

std::string_view to_string(RboMode m) {
  return m == RboMode::kExtrapolated ? "extrapolated" : "finite_depth";
}

RboMode parse_rbo_mode(std::string_view s) {
  if (s == "extrapolated") return RboMode::kExtrapolated;
  if (s == "finite_depth") return RboMode::kFiniteDepth;
  throw ConfigError("unknown RBO mode '" + std::string(s) + "'");
}

RboResult rbo_ids(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b, double p,
                  RboMode mode) {
  const std::size_t k = std::min(a.size(), b.size());
  std::uint32_t max_id = 0;
  for (auto x : a) max_id = std::max(max_id, x);
  for (auto x : b) max_id = std::max(max_id, x);
  // bit 0: seen in a's prefix, bit 1: seen in b's prefix
  std::vector<unsigned char> seen(a.empty() && b.empty() ? 0 : max_id + 1, 0);
  for (auto x : a) {
    if (seen[x] & 1) throw DataError("duplicate entity in ranked list");
    seen[x] |= 1;
  }
  for (auto y : b) {
    if (seen[y] & 2) throw DataError("duplicate entity in ranked list");
    seen[y] |= 2;
  }
  std::fill(seen.begin(), seen.end(), 0);

  RboResult res;
  res.depth = k;
  double overlap = 0.0;
  double weight = 1.0;  // p^(d-1)
  double sum = 0.0;
  for (std::size_t d = 1; d <= k; ++d) {
    const auto x = a[d - 1];
    const auto y = b[d - 1];
    seen[x] |= 1;
    seen[y] |= 2;
    if (x == y) {
      overlap += 1.0;
    } else {
      if (seen[x] & 2) overlap += 1.0;
      if (seen[y] & 1) overlap += 1.0;
    }
    const double agreement = overlap / static_cast<double>(d);
    sum += weight * agreement;
    weight *= p;
  }
  // weight == p^k here
  res.residual = weight;
  if (mode == RboMode::kFiniteDepth) {
    res.value = (1.0 - p) * sum;
  } else if (k == 0) {
    res.value = 0.0;
  } else {
    // (1-p)/p * sum_d A_d p^d == (1-p) * sum_d A_d p^(d-1)
    res.value = overlap / static_cast<double>(k) * weight + (1.0 - p) * sum;
  }
  res.value = std::clamp(res.value, 0.0, 1.0);
  return res;
}

RboResult rbo_detailed(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       const RboConfig& cfg) {
  check_p(cfg.persistence_p);
  require_unique(a, "first ranked list");
  require_unique(b, "second ranked list");
  Interner in;
  auto ia = in.ids(a);
  auto ib = in.ids(b);
  return rbo_ids(ia, ib, cfg.persistence_p, cfg.mode);
}

double rbo(const std::vector<std::string>& a, const std::vector<std::string>& b, const RboConfig& cfg) {
  return rbo_detailed(a, b, cfg).value;
}

double mean_shuffled_rbo(const std::vector<std::string>& universe,
                         const std::vector<std::string>& reference, const RboConfig& cfg) {
  check_p(cfg.persistence_p);
  if (universe.empty()) throw DataError("RBO baseline: empty universe");
  if (cfg.baseline_runs == 0) throw ConfigError("RBO baseline needs at least one run");
  require_unique(universe, "baseline universe");
  require_unique(reference, "reference ranking");
  Interner in;
  auto iu = in.ids(universe);
  auto ir = in.ids(reference);
  std::vector<double> runs(cfg.baseline_runs);
  kernels::shuffled_rbo(iu, ir, {cfg.persistence_p, cfg.mode == RboMode::kExtrapolated}, cfg.seed, runs);
  // Summed in run order so the result is independent of the thread count.
  double total = 0.0;
  for (double v : runs) total += v;
  return total / static_cast<double>(runs.size());
}

double rbo_random_baseline(const std::vector<std::string>& universe,
                           const std::vector<std::string>& reference, const RboConfig& cfg) {
  std::set<std::string> u(universe.begin(), universe.end());
  for (const auto& r : reference) {
    if (!u.contains(r)) throw DataError("RBO baseline: reference entity '" + r + "' not in universe");
  }
  return mean_shuffled_rbo(universe, reference, cfg);
}

std::vector<std::string> ExternalRanking::ordered_entities() const {
  std::vector<const ExternalEntry*> sorted;
  for (const auto& e : entries) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const ExternalEntry* x, const ExternalEntry* y) {
    if (x->rank != y->rank) return x->rank < y->rank;
    return x->entity_id < y->entity_id;
  });
  std::vector<std::string> out;
  for (const auto* e : sorted) out.push_back(e->entity_id);
  return out;
}

ExternalRanking load_external_ranking(const std::filesystem::path& path) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ExternalRanking r;
  try {
    r.report_id = j.at("report_id").get<std::string>();
    std::set<std::string> ids;
    for (const auto& e : j.value("entries", json::array())) {
      ExternalEntry entry;
      entry.entity_id = e.at("entity_id").get<std::string>();
      entry.rank = e.at("rank").get<double>();
      if (e.contains("score") && !e["score"].is_null()) entry.score = e["score"].get<double>();
      if (!ids.insert(entry.entity_id).second) {
        throw ConfigError(path.string() + ": duplicate entity '" + entry.entity_id + "'");
      }
      r.entries.push_back(std::move(entry));
    }
    if (j.contains("raw_metrics") && !j["raw_metrics"].is_null()) {
      for (const auto& [entity, metrics] : j["raw_metrics"].items()) {
        for (const auto& [metric, v] : metrics.items()) {
          if (!v.is_null()) r.raw_metrics[entity][metric] = v.get<double>();
        }
      }
    }
    if (j.contains("metric_map") && !j["metric_map"].is_null()) {
      for (const auto& [metric, goals] : j["metric_map"].items()) {
        r.metric_map[metric] = goals.get<std::vector<std::string>>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return r;
}

std::map<std::string, std::map<std::string, double>> external_goal_scores(const ExternalRanking& report) {
  std::set<std::string> scored_metrics;
  for (const auto& [entity, metrics] : report.raw_metrics) {
    for (const auto& [metric, v] : metrics) scored_metrics.insert(metric);
  }
  std::map<std::string, std::vector<std::string>> goal_metrics;
  for (const auto& [metric, goals] : report.metric_map) {
    if (!scored_metrics.contains(metric)) {
      throw ConfigError("report " + report.report_id + ": mapped metric '" + metric +
                        "' has no raw scores");
    }
    for (const auto& g : goals) goal_metrics[g].push_back(metric);
  }
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& [goal, metrics] : goal_metrics) {
    for (const auto& [entity, raw] : report.raw_metrics) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& m : metrics) {
        if (auto it = raw.find(m); it != raw.end()) {
          sum += it->second;
          ++n;
        }
      }
      if (n > 0) out[goal][entity] = sum / static_cast<double>(n);
    }
  }
  return out;
}

std::vector<std::string> ranked_order(const std::vector<RankedEntity>& scored) {
  std::vector<const RankedEntity*> sorted;
  for (const auto& e : scored) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const RankedEntity* x, const RankedEntity* y) {
    if (x->score != y->score) return x->score > y->score;
    return x->entity_id < y->entity_id;
  });
  std::vector<std::string> out;
  for (const auto* e : sorted) out.push_back(e->entity_id);
  return out;
}

std::vector<RankedEntity> entries_as_scores(const ExternalRanking& report) {
  std::vector<RankedEntity> out;
  for (const auto& e : report.entries) out.push_back({e.entity_id, -e.rank});
  return out;
}

ComparisonReport compare_rankings(const std::vector<RankedEntity>& internal,
                                  const std::vector<RankedEntity>& external, const RboConfig& cfg) {
  ComparisonReport rep;
  auto internal_order = ranked_order(internal);
  auto external_order = ranked_order(external);
  rep.rbo = rbo(internal_order, external_order, cfg);
  rep.rbo_baseline = mean_shuffled_rbo(internal_order, external_order, cfg);

  std::map<std::string, double> ext;
  for (const auto& e : external) ext[e.entity_id] = e.score;
  std::vector<double> a;
  std::vector<double> b;
  // Iterate in internal rank order for a stable pairing.
  std::map<std::string, double> in;
  for (const auto& e : internal) in[e.entity_id] = e.score;
  for (const auto& id : internal_order) {
    if (auto it = ext.find(id); it != ext.end()) {
      a.push_back(in[id]);
      b.push_back(it->second);
    }
  }
  rep.n_common = a.size();
  if (a.size() >= 3) {
    try {
      auto c = stats::spearman(a, b);
      rep.spearman_on_common = SpearmanOnCommon{c.r, c.p_value};
    } catch (const DataError&) {
      // constant scores on the shared entities: rank correlation undefined
    }
  }
  return rep;
}

}  // namespace ise::validation
