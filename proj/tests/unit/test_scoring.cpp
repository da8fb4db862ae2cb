#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ise/error.hpp"
#include "ise/scoring.hpp"
#include "oracles.hpp"

using namespace ise;
using namespace ise::scoring;

namespace {

corpus::Review review(const std::string& id, const std::string& company, const std::string& pros,
                      const std::string& cons = "") {
  corpus::Review r;
  r.review_id = id;
  r.company_id = company;
  r.date = "2020-01-01";
  r.pros = pros;
  r.cons = cons;
  return r;
}

ReviewGoalScore rg(const std::string& r, const std::string& g, double sim, double sim_t) {
  return {r, g, sim, sim_t, std::nullopt};
}

// Goal "g" along axis 0; sentence "sX" has cosine X/10 with it.
embedding::EmbeddingStore graded_store() {
  embedding::EmbeddingStore s(2);
  s.add("Goal definition.", std::vector<float>{1, 0});
  for (int x = 0; x <= 10; ++x) {
    const float c = static_cast<float>(x) / 10.0f;
    s.add("s" + std::to_string(x) + ".", std::vector<float>{c, std::sqrt(1.0f - c * c)});
  }
  return s;
}

}  // namespace

TEST_CASE("review goal similarity is the max over sentences") {
  auto store = graded_store();
  GoalDefinition g{"g", "g", "Goal definition."};
  auto m = review_goal_sim(review("1", "A", "s1. s6. s3."), g, store);
  CHECK(m.sim == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(m.ordinal == std::optional<std::size_t>(1));
  auto tie = review_goal_sim(review("1", "A", "s5. s5."), g, store);
  CHECK(tie.ordinal == std::optional<std::size_t>(0));
  auto empty = review_goal_sim(review("1", "A", ""), g, store);
  CHECK(empty.sim == -1.0);
  CHECK_FALSE(empty.ordinal.has_value());
  CHECK_THROWS_AS(review_goal_sim(review("1", "A", "unknown sentence."), g, store), DataError);
}

TEST_CASE("nearest-rank percentile cutoff") {
  std::vector<double> hundred(100);
  std::iota(hundred.begin(), hundred.end(), 1.0);
  CHECK(goal_percentile_cutoff(hundred, 95) == 95.0);
  CHECK(goal_percentile_cutoff(std::vector<double>{0.4}, 95) == 0.4);
  CHECK(goal_percentile_cutoff(std::vector<double>{0.1, 0.2, 0.3, 0.4}, 95) == 0.4);
  CHECK_THROWS_AS(goal_percentile_cutoff(std::vector<double>{}, 95), DataError);
  CHECK_THROWS_AS(goal_percentile_cutoff(hundred, 0), ConfigError);
}

TEST_CASE("percentile cutoff matches the nearest-rank oracle") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> v(1 + rng() % 80);
    for (auto& x : v) x = u(rng);
    const double p = 1 + static_cast<double>(rng() % 100);
    CHECK(goal_percentile_cutoff(v, p) == oracle::nearest_rank(v, p));
  }
}

TEST_CASE("dual threshold is strict on both sides") {
  ThresholdConfig cfg;
  CHECK(threshold_sim(0.5, 0.45, cfg) == 0.5);
  CHECK(threshold_sim(0.4, 0.45, cfg) == 0.0);
  CHECK(threshold_sim(0.31, 0.2, cfg) == 0.0);
  CHECK(threshold_sim(0.45, 0.45, cfg) == 0.0);
}

TEST_CASE("thresholded values lie in {0} or above the fixed threshold") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  ThresholdConfig cfg;
  for (int i = 0; i < 5000; ++i) {
    const double v = threshold_sim(u(rng), u(rng), cfg);
    CHECK((v == 0.0 || (v > cfg.fixed_threshold && v <= 1.0)));
  }
}

TEST_CASE("derived threshold is the mean of per-goal cutoffs") {
  std::map<std::string, std::vector<double>> two{{"a", {0.3}}, {"b", {0.5}}};
  CHECK(derive_fixed_threshold(two, 95) == doctest::Approx(0.4));
  std::map<std::string, std::vector<double>> one{{"a", {0.1, 0.2, 0.3, 0.4}}};
  CHECK(derive_fixed_threshold(one, 95) == 0.4);
}

TEST_CASE("goal overlap") {
  CHECK(goal_overlap({"1", "2", "3", "4"}, {"3", "4"}) == 0.5);
  CHECK(goal_overlap({"3", "4"}, {"1", "2", "3", "4"}) == 1.0);
  CHECK(goal_overlap({"1"}, {"2"}) == 0.0);
  CHECK(goal_overlap({"1", "2"}, {"1", "2"}) == 1.0);
  CHECK_THROWS_WITH_AS(goal_overlap({}, {"1"}), "undefined overlap denominator", DataError);
}

TEST_CASE("consolidation takes the max constituent") {
  std::vector<ReviewGoalScore> s = {rg("r", "a", 0.4, 0.4), rg("r", "b", 0.6, 0.6)};
  auto out = consolidate(s, {{"b", "a"}}, {"a", "b"});
  REQUIRE(out.size() == 1);
  CHECK(out[0].goal_id == "a");
  CHECK(out[0].sim_t == 0.6);
  CHECK(out[0].sim == 0.6);
  auto same = consolidate(s, {}, {"a", "b"});
  REQUIRE(same.size() == 2);
  CHECK(same[1].sim_t == 0.6);
}

TEST_CASE("chained merges fold transitively") {
  std::vector<ReviewGoalScore> s = {rg("r", "a", 0.1, 0), rg("r", "b", 0.2, 0), rg("r", "c", 0.9, 0.9)};
  auto out = consolidate(s, {{"c", "b"}, {"b", "a"}}, {"a", "b", "c"});
  REQUIRE(out.size() == 1);
  CHECK(out[0].goal_id == "a");
  CHECK(out[0].sim_t == 0.9);
}

TEST_CASE("consolidated sim_t is zero or the consolidated sim") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<ReviewGoalScore> s;
  for (int r = 0; r < 200; ++r) {
    for (const char* g : {"a", "b", "c", "d"}) {
      const double sim = u(rng);
      s.push_back(rg(std::to_string(r), g, sim, sim > 0.5 ? sim : 0.0));
    }
  }
  for (const auto& c : consolidate(s, {{"b", "a"}, {"d", "c"}}, {"a", "b", "c", "d"})) {
    CHECK((c.sim_t == 0.0 || c.sim_t == c.sim));
  }
}

TEST_CASE("goal config validation") {
  CHECK_THROWS_AS(parse_goal_config(R"({"goals": [{"goal_id": "a", "definition": ""}]})", "t"), ConfigError);
  CHECK_THROWS_AS(parse_goal_config(R"({"goals": [{"goal_id": "a", "definition": "x"},
                                                   {"goal_id": "a", "definition": "y"}]})", "t"),
                  ConfigError);
  CHECK_THROWS_AS(parse_goal_config(R"({"goals": [{"goal_id": "a", "definition": "x"},
                                                   {"goal_id": "b", "definition": "y"}],
                                        "merges": [{"from": "a", "into": "b"}, {"from": "b", "into": "a"}]})", "t"),
                  ConfigError);
  CHECK_THROWS_AS(parse_goal_config(R"({"goals": [{"goal_id": "a", "definition": "x"}],
                                        "threshold": {"fixed_threshold": 1.5}})", "t"),
                  ConfigError);
  auto ok = parse_goal_config(R"({"goals": [{"goal_id": "a", "definition": "x"},
                                            {"goal_id": "b", "definition": "y"},
                                            {"goal_id": "c", "definition": "z", "selected": false}],
                                  "merges": [{"from": "b", "into": "a"}]})", "t");
  CHECK(ok.selected().size() == 2);
  CHECK(ok.surviving_ids() == std::vector<std::string>{"a"});
}

TEST_CASE("company score variants") {
  std::vector<ReviewGoalScore> s = {rg("1", "g", 0.5, 0.5), rg("2", "g", 0.1, 0), rg("3", "g", 0.7, 0.7)};
  CHECK(company_score(s, "g", {"1", "2", "3"}) == doctest::Approx(0.4));
  std::vector<ReviewGoalScore> zeros = {rg("1", "g", 0.1, 0), rg("2", "g", 0.2, 0)};
  for (auto v : {ScoreVariant::kLinear, ScoreVariant::kExp, ScoreVariant::kLog}) {
    CHECK(company_score(zeros, "g", {"1", "2"}, v) == 0.0);
    CHECK(company_score({rg("1", "g", 1.0, 1.0)}, "g", {"1"}, v) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(company_score(s, "g", {}), DataError);
  CHECK_THROWS_AS(company_score(s, "g", {"9"}), DataError);
}

TEST_CASE("top-k reviews") {
  std::vector<ReviewGoalScore> s = {rg("r1", "g", 0.9, 0), rg("r2", "g", 0.7, 0), rg("r3", "g", 0.8, 0)};
  auto top = top_k_reviews(s, "g", 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].first == "r1");
  CHECK(top[1].first == "r3");
  CHECK(top_k_reviews(s, "g", 10).size() == 3);
  std::vector<ReviewGoalScore> tie = {rg("r9", "g", 0.8, 0), rg("r2", "g", 0.8, 0)};
  CHECK(top_k_reviews(tie, "g", 2)[0].first == "r2");
}

namespace {

struct Corpus {
  std::vector<corpus::Review> reviews;
  std::vector<GoalDefinition> goals;
  embedding::EmbeddingStore store{8};
};

Corpus random_corpus(std::uint64_t seed) {
  Corpus c;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> z;
  for (int g = 0; g < 3; ++g) {
    const std::string def = "goal " + std::to_string(g) + ".";
    c.goals.push_back({"g" + std::to_string(g), "g", def});
    std::vector<float> v(8, 0.0f);
    v[g] = 1.0f;
    c.store.add(def, v);
  }
  for (int s = 0; s < 60; ++s) {
    std::vector<float> v(8);
    for (auto& x : v) x = z(rng);
    v[s % 3] += 2.0f * static_cast<float>(s % 5) / 4.0f;
    c.store.add("sentence " + std::to_string(s) + ".", v);
  }
  for (int r = 0; r < 120; ++r) {
    std::string pros;
    const int n = static_cast<int>(rng() % 4);
    for (int k = 0; k < n; ++k) pros += "sentence " + std::to_string(rng() % 60) + ". ";
    c.reviews.push_back(review("r" + std::to_string(1000 + r), "c" + std::to_string(r % 5), pros,
                               "sentence " + std::to_string(rng() % 60) + "."));
  }
  return c;
}

}  // namespace

TEST_CASE("scoring is independent of review order") {
  auto c = random_corpus(1);
  ThresholdConfig cfg;
  cfg.fixed_threshold = 0.2;
  auto base = score_corpus(c.reviews, c.goals, c.store, cfg);
  std::mt19937 rng(8);
  for (int t = 0; t < 5; ++t) {
    auto shuffled = c.reviews;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto again = score_corpus(shuffled, c.goals, c.store, cfg);
    REQUIRE(again.scores.size() == base.scores.size());
    for (std::size_t i = 0; i < base.scores.size(); ++i) {
      CHECK(again.scores[i].review_id == base.scores[i].review_id);
      CHECK(again.scores[i].sim == base.scores[i].sim);
      CHECK(again.scores[i].sim_t == base.scores[i].sim_t);
      CHECK(again.scores[i].best_sentence_ordinal == base.scores[i].best_sentence_ordinal);
    }
    CHECK(again.cutoffs == base.cutoffs);
  }
}

TEST_CASE("raising the fixed threshold never raises a company score") {
  auto c = random_corpus(2);
  std::vector<std::string> ids{"g0", "g1", "g2"};
  for (auto variant : {ScoreVariant::kLinear, ScoreVariant::kExp, ScoreVariant::kLog}) {
    std::vector<std::vector<CompanyScores>> runs;
    for (double f : {-0.5, 0.0, 0.2, 0.4, 0.6}) {
      ThresholdConfig cfg;
      cfg.fixed_threshold = f;
      cfg.percentile = 60;
      runs.push_back(aggregate_companies(c.reviews, score_corpus(c.reviews, c.goals, c.store, cfg).scores, ids, variant));
    }
    for (std::size_t k = 1; k < runs.size(); ++k) {
      for (std::size_t u = 0; u < runs[k].size(); ++u) {
        for (const auto& g : ids) CHECK(runs[k][u].scores.at(g) <= runs[k - 1][u].scores.at(g));
      }
    }
  }
}

TEST_CASE("linear company score is bounded by the relevant share") {
  auto c = random_corpus(3);
  ThresholdConfig cfg;
  cfg.fixed_threshold = 0.0;
  cfg.percentile = 50;
  const std::vector<std::string> ids{"g0", "g1", "g2"};
  for (const auto& row : aggregate_companies(c.reviews, score_corpus(c.reviews, c.goals, c.store, cfg).scores, ids)) {
    for (const auto& g : ids) {
      CHECK(row.scores.at(g) <= static_cast<double>(row.n_relevant.at(g)) / static_cast<double>(row.n_reviews));
    }
  }
}

TEST_CASE("overlap of a goal with itself is one") {
  auto c = random_corpus(4);
  ThresholdConfig cfg;
  cfg.fixed_threshold = 0.0;
  cfg.percentile = 50;
  const std::vector<std::string> ids{"g0", "g1", "g2"};
  auto m = overlap_matrix(score_corpus(c.reviews, c.goals, c.store, cfg).scores, ids);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (m[j][j]) CHECK(*m[j][j] == 1.0);
  }
}

TEST_CASE("empty cons fields make the cons columns absent") {
  auto c = random_corpus(5);
  for (auto& r : c.reviews) r.cons.clear();
  for (const auto& row : pros_cons_report(c.reviews, c.goals, c.store, {})) {
    CHECK_FALSE(row.avg_sim_cons.has_value());
    CHECK_FALSE(row.prop_relevant_cons.has_value());
    CHECK(row.avg_sim_pros.has_value());
  }
}

TEST_CASE("missing embedding is fatal") {
  auto c = random_corpus(6);
  c.reviews[0].pros = "not in the store.";
  CHECK_THROWS_AS(score_corpus(c.reviews, c.goals, c.store, {}), DataError);
}
