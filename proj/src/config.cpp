#include <algorithm>
#include <set>

#include <openssl/evp.h>

#include "ise/error.hpp"
#include "ise/io.hpp"
#include "ise/pipeline.hpp"

namespace ise::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::set<std::string> kKeys = {
    "reviews", "reviews_format", "embeddings", "goals", "out_dir", "filter", "score_variant", "pca_mode",
    "regress", "rbo", "seed", "stub_dim", "top_k_reviews", "keywords", "stocks", "sectors",
    "external_reports"};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw ConfigError(what + " not found: " + p.string());
}

template <typename T>
T positive(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<long long>();
  if (v < 1) throw ConfigError(std::string(key) + " must be >= 1");
  return static_cast<T>(v);
}

json goals_json(const scoring::GoalConfig& g) {
  json goals = json::array();
  for (const auto& d : g.goals) {
    goals.push_back({{"goal_id", d.goal_id}, {"name", d.name}, {"definition", d.definition}, {"selected", d.selected}});
  }
  json merges = json::array();
  for (const auto& m : g.merges) merges.push_back({{"from", m.from}, {"into", m.into}});
  return {{"goals", goals},
          {"merges", merges},
          {"threshold",
           {{"fixed_threshold", g.threshold.fixed_threshold},
            {"percentile", g.threshold.percentile},
            {"derive", g.threshold.derive}}}};
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw DataError("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

PipelineConfig load_config(const fs::path& path, const Overrides& overrides) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError(path.string() + ": unknown key '" + key + "'");
  }

  PipelineConfig cfg;
  cfg.config_path = path;
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  json canon;
  try {
    const auto reviews = j.at("reviews").get<std::string>();
    cfg.reviews = resolve(base, reviews);
    canon["reviews"] = reviews;
    const auto format = j.value("reviews_format", std::string("jsonl"));
    cfg.reviews_format = corpus::parse_format(format);
    canon["reviews_format"] = format;
    if (j.contains("embeddings") && !j["embeddings"].is_null()) {
      const auto e = j["embeddings"].get<std::string>();
      cfg.embeddings = resolve(base, e);
      canon["embeddings"] = e;
    } else {
      canon["embeddings"] = nullptr;
    }
    cfg.goals_path = resolve(base, j.at("goals").get<std::string>());
    if (overrides.out_dir) {
      cfg.out_dir = *overrides.out_dir;
    } else if (j.contains("out_dir")) {
      cfg.out_dir = resolve(base, j["out_dir"].get<std::string>());
    } else {
      throw ConfigError("no output directory: set out_dir or pass --out");
    }

    const json filter = j.value("filter", json::object());
    cfg.filter.min_reviews = positive<std::size_t>(filter, "min_reviews", cfg.filter.min_reviews);
    cfg.filter.min_states = positive<std::size_t>(filter, "min_states", cfg.filter.min_states);
    canon["filter"] = {{"min_reviews", cfg.filter.min_reviews}, {"min_states", cfg.filter.min_states}};

    cfg.variant = scoring::parse_score_variant(j.value("score_variant", std::string("linear")));
    canon["score_variant"] = std::string(scoring::to_string(cfg.variant));
    cfg.pca_mode = stats::parse_pca_mode(j.value("pca_mode", std::string("correlation")));
    canon["pca_mode"] = std::string(stats::to_string(cfg.pca_mode));

    const json regress = j.value("regress", json::object());
    cfg.step_direction = stats::parse_step_direction(regress.value("direction", std::string("both")));
    const auto scale = regress.value("scale", std::string("none"));
    if (scale != "none" && scale != "minmax100") throw ConfigError("regress.scale must be none or minmax100");
    cfg.regress_minmax_scale = scale == "minmax100";
    canon["regress"] = {{"direction", std::string(stats::to_string(cfg.step_direction))}, {"scale", scale}};

    cfg.seed = overrides.seed ? *overrides.seed : j.value("seed", std::uint64_t{0});
    canon["seed"] = cfg.seed;

    const json rbo = j.value("rbo", json::object());
    cfg.rbo.persistence_p = rbo.value("p", cfg.rbo.persistence_p);
    if (!(cfg.rbo.persistence_p > 0.0 && cfg.rbo.persistence_p < 1.0)) throw ConfigError("rbo.p must lie in (0, 1)");
    cfg.rbo.mode = validation::parse_rbo_mode(rbo.value("mode", std::string("extrapolated")));
    cfg.rbo.baseline_runs = positive<std::size_t>(rbo, "baseline_runs", cfg.rbo.baseline_runs);
    cfg.rbo.seed = cfg.seed;
    canon["rbo"] = {{"p", cfg.rbo.persistence_p},
                    {"mode", std::string(validation::to_string(cfg.rbo.mode))},
                    {"baseline_runs", cfg.rbo.baseline_runs}};

    cfg.stub_dim = overrides.dim ? *overrides.dim : j.value("stub_dim", cfg.stub_dim);
    if (cfg.stub_dim < 2) throw ConfigError("stub embedding dimension must be >= 2");
    canon["stub_dim"] = cfg.stub_dim;
    cfg.top_k_reviews = positive<std::size_t>(j, "top_k_reviews", cfg.top_k_reviews);
    canon["top_k_reviews"] = cfg.top_k_reviews;

    const json kw = j.value("keywords", json::object());
    cfg.keyword_top_k = positive<std::size_t>(kw, "top_k", cfg.keyword_top_k);
    cfg.ngram_min = positive<std::size_t>(kw, "n_min", cfg.ngram_min);
    cfg.ngram_max = positive<std::size_t>(kw, "n_max", cfg.ngram_max);
    if (cfg.ngram_min > cfg.ngram_max) throw ConfigError("keywords.n_min must not exceed keywords.n_max");
    canon["keywords"] = {{"top_k", cfg.keyword_top_k}, {"n_min", cfg.ngram_min}, {"n_max", cfg.ngram_max}};

    if (j.contains("stocks") && !j["stocks"].is_null()) {
      const auto& s = j["stocks"];
      StocksSpec spec;
      const auto p = s.at("path").get<std::string>();
      spec.path = resolve(base, p);
      spec.bins = positive<std::size_t>(s, "bins", spec.bins);
      require_file(spec.path, "stocks file");
      cfg.stocks = spec;
      canon["stocks"] = {{"path", p}, {"bins", spec.bins}};
    }
    if (j.contains("sectors") && !j["sectors"].is_null()) {
      const auto p = j["sectors"].get<std::string>();
      cfg.sectors = resolve(base, p);
      require_file(*cfg.sectors, "sectors file");
      canon["sectors"] = p;
    }
    canon["external_reports"] = json::array();
    for (const auto& r : j.value("external_reports", json::array())) {
      ExternalReportSpec spec;
      const auto p = r.at("path").get<std::string>();
      spec.path = resolve(base, p);
      require_file(spec.path, "external report");
      json c = {{"path", p}};
      if (r.contains("goal") && !r["goal"].is_null()) {
        spec.goal = r["goal"].get<std::string>();
        c["goal"] = *spec.goal;
      }
      cfg.external_reports.push_back(std::move(spec));
      canon["external_reports"].push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }

  require_file(cfg.reviews, "reviews file");
  require_file(cfg.goals_path, "goals config");
  if (cfg.embeddings) require_file(*cfg.embeddings, "embeddings file");
  cfg.goals = scoring::load_goal_config(cfg.goals_path);
  for (const auto& g : cfg.goals.goals) {
    if (g.definition.find('\n') != std::string::npos) {
      throw ConfigError("definition of goal '" + g.goal_id + "' spans several lines");
    }
  }
  const auto surviving = cfg.goals.surviving_ids();
  for (const auto& r : cfg.external_reports) {
    if (r.goal && std::find(surviving.begin(), surviving.end(), *r.goal) == surviving.end()) {
      throw ConfigError("external report " + r.path.string() + " names unknown goal '" + *r.goal + "'");
    }
  }
  canon["goals"] = goals_json(cfg.goals);
  canon["version"] = std::string(kVersion);

  cfg.threads = overrides.threads.value_or(0);
  if (cfg.threads < 0) throw ConfigError("--threads must be >= 0");
  cfg.strict = overrides.strict;
  cfg.canonical = std::move(canon);
  cfg.config_hash = sha256_hex(cfg.canonical.dump());
  return cfg;
}

}  // namespace ise::pipeline
