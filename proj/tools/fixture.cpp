#include "fixture.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "ise/embedding.hpp"
#include "ise/hash.hpp"
#include "ise/io.hpp"

namespace ise::fixture {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  double uniform() { return static_cast<double>(hash::splitmix64_next(state_) >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  double normal() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform();
    return s - 6.0;
  }

 private:
  std::uint64_t state_;
};

constexpr const char* kStates[] = {"CA", "NY", "TX", "WA", "IL", "MA"};

std::string two_digits(std::size_t i) { return (i < 10 ? "0" : "") + std::to_string(i); }

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

ojson review_json(const std::string& id, const std::string& company, const std::string& state,
                  const std::string& pros, const std::string& cons, const std::vector<double>& ratings) {
  ojson r;
  r["review_id"] = id;
  r["company_id"] = company;
  r["state"] = state;
  r["date"] = "2021-0" + std::to_string(1 + (id.size() + id.back()) % 9) + "-15";
  r["title"] = "Review " + id;
  r["pros"] = pros;
  r["cons"] = cons;
  ojson rj;
  const char* names[] = {"balance", "career", "culture", "management", "overall"};
  for (std::size_t i = 0; i < 5; ++i) rj[names[i]] = ratings[i];
  r["ratings"] = rj;
  return r;
}

}  // namespace

PlantedTruth write_planted(const fs::path& dir) {
  fs::create_directories(dir);
  constexpr std::uint32_t kDim = 16;
  const std::vector<std::string> goals = {"balance", "benefits", "growth"};
  const std::vector<std::string> definitions = {
      "Employees can balance work with family and personal life.",
      "Employees receive fair pay, insurance and retirement benefits.",
      "Employees can learn new skills and advance their careers."};
  // Planted sentences: (company, review index, goal, cosine numerator pattern)
  struct Plant {
    std::size_t company;
    std::size_t review;
    std::size_t goal;
    bool strong;  // 7/8 rather than 3/4
    std::string text;
  };
  const std::vector<Plant> plants = {
      {0, 2, 0, true, "Flexible hours let me pick up my kids every afternoon."},
      {1, 5, 0, false, "Remote days make family time easy to protect."},
      {1, 3, 1, true, "The health plan and pension match are excellent."},
      {2, 9, 1, false, "Bonuses arrive on time and cover the rising rent."},
      {0, 2, 2, false, "Mentors pushed me toward a promotion within a year."},
      {2, 11, 2, true, "Tuition support helped me finish a certificate."}};

  embedding::EmbeddingStore store(kDim);
  auto axis = [&](std::size_t d, float v = 1.0f) {
    std::vector<float> x(kDim, 0.0f);
    x[d] = v;
    return x;
  };
  for (std::size_t g = 0; g < goals.size(); ++g) store.add(definitions[g], axis(g));

  PlantedTruth truth;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<const Plant*>> by_review;
  for (const auto& p : plants) by_review[{p.company, p.review}].push_back(&p);

  std::size_t filler = 0;
  auto filler_sentence = [&](const std::string& topic) {
    std::string text = "The " + topic + " note " + std::to_string(filler) + " is unremarkable.";
    store.add(text, axis(3 + filler % (kDim - 3), 1.0f + static_cast<float>(filler % 3)));
    ++filler;
    return text;
  };

  std::string jsonl;
  for (std::size_t c = 0; c < 3; ++c) {
    const std::string company = "c" + std::to_string(c + 1);
    truth.reviews_per_company[company] = 16;
    for (std::size_t i = 0; i < 16; ++i) {
      const std::string id = company + "-r" + two_digits(i);
      std::string pros;
      auto it = by_review.find({c, i});
      if (it != by_review.end()) {
        for (const auto* p : it->second) {
          std::vector<float> v(kDim, 0.0f);
          v[p->goal] = p->strong ? 7.0f : 3.0f;
          const std::vector<float> rest = p->strong ? std::vector<float>{3, 2, 1, 1} : std::vector<float>{2, 1, 1, 1};
          for (std::size_t k = 0; k < rest.size(); ++k) v[3 + (p->goal * 4 + k) % (kDim - 3)] = rest[k];
          store.add(p->text, v);
          pros += (pros.empty() ? "" : " ") + p->text;
          truth.relevant.insert({id, goals[p->goal]});
          truth.sim[id][goals[p->goal]] = p->strong ? 0.875 : 0.75;
        }
      }
      pros += (pros.empty() ? "" : " ") + filler_sentence("office");
      const std::string cons = filler_sentence("parking");
      const double base = 2.0 + static_cast<double>(c);
      std::vector<double> ratings = {base, base + (i % 2), 5.0 - static_cast<double>(c), 3.0, base};
      jsonl += review_json(id, company, kStates[(c + i) % 6], pros, cons, ratings).dump() + "\n";
    }
  }
  write_text(dir / "reviews.jsonl", jsonl);
  embedding::write_embeddings(store, dir / "embeddings.emb1");

  ojson gj;
  gj["goals"] = ojson::array();
  for (std::size_t g = 0; g < goals.size(); ++g) {
    gj["goals"].push_back({{"goal_id", goals[g]}, {"name", goals[g]}, {"definition", definitions[g]}});
  }
  gj["threshold"] = {{"fixed_threshold", 0.31}, {"percentile", 95}};
  write_text(dir / "goals.json", gj.dump(2) + "\n");

  ojson cfg;
  cfg["reviews"] = "reviews.jsonl";
  cfg["embeddings"] = "embeddings.emb1";
  cfg["goals"] = "goals.json";
  cfg["out_dir"] = "out";
  cfg["filter"] = {{"min_reviews", 1}, {"min_states", 1}};
  cfg["seed"] = 7;
  write_text(dir / "config.json", cfg.dump(2) + "\n");
  return truth;
}

void write_full(const fs::path& dir) {
  fs::create_directories(dir);
  constexpr std::uint32_t kDim = 32;
  constexpr std::size_t kCompanies = 12;
  struct Goal {
    std::string id;
    std::string definition;
    std::vector<std::string> subjects;
    std::vector<std::string> verbs;
    std::vector<std::string> objects;
  };
  const std::vector<Goal> goals = {
      {"balance", "Employees can balance work with family and personal life.",
       {"Flexible hours", "Remote days", "Sane schedules", "Generous leave", "Quiet weekends"},
       {"protect", "support", "preserve"},
       {"family time.", "personal life."}},
      {"wages", "Employees are paid fair and living wages.",
       {"Fair salaries", "Regular raises", "Overtime pay", "Annual bonuses", "Competitive wages"},
       {"cover", "beat", "match"},
       {"living costs.", "market rates."}},
      {"career", "Employees can advance their careers through promotion.",
       {"Clear promotion paths", "Internal transfers", "Strong mentors", "Leadership tracks", "Stretch projects"},
       {"accelerate", "open", "reward"},
       {"career growth.", "advancement."}},
      {"culture", "Employees enjoy a respectful and collaborative culture.",
       {"Friendly coworkers", "Team lunches", "Open managers", "Shared values", "Honest feedback"},
       {"build", "create", "sustain"},
       {"a warm culture.", "real trust."}},
      {"diversity", "Employees of every gender and background are treated equally.",
       {"Inclusive hiring", "Equal pay audits", "Women in leadership", "Employee networks", "Bias training"},
       {"promote", "ensure", "advance"},
       {"gender equality.", "equal treatment."}},
      {"safety", "Employees work in safe and healthy conditions.",
       {"Safety drills", "Protective gear", "Ergonomic desks", "Clean facilities", "Injury reporting"},
       {"keep", "make", "help"},
       {"workers safe.", "sites healthy."}},
      {"flexibility", "Employees choose where and when they work.",
       {"Hybrid work", "Compressed weeks", "Shift swaps", "Work from home", "Core hours"},
       {"give", "allow", "offer"},
       {"real flexibility.", "choice of place."}},
      {"training", "Employees receive training to learn new skills.",
       {"Paid courses", "Tuition support", "Skill workshops", "Certification budgets", "Learning days"},
       {"teach", "build", "grow"},
       {"new skills.", "expertise."}}};
  const std::vector<std::string> filler_subjects = {"The cafeteria", "The parking lot", "The elevator",
                                                    "The lobby", "The printer", "The badge system"};
  const std::vector<std::string> filler_tails = {"is fine.", "works most days.", "was renovated.",
                                                 "is nearby.", "gets crowded."};

  Rng rng(20240611);
  embedding::EmbeddingStore store(kDim);
  auto noise_vector = [&](double scale) {
    std::vector<float> v(kDim, 0.0f);
    for (std::size_t d = goals.size(); d < kDim; ++d) v[d] = static_cast<float>(scale * rng.normal());
    for (std::size_t d = 0; d < goals.size(); ++d) v[d] = static_cast<float>(0.03 * rng.normal());
    return v;
  };
  for (std::size_t g = 0; g < goals.size(); ++g) {
    std::vector<float> v(kDim, 0.0f);
    v[g] = 1.0f;
    store.add(goals[g].definition, v);
  }
  std::vector<std::vector<std::string>> goal_sentences(goals.size());
  for (std::size_t g = 0; g < goals.size(); ++g) {
    for (const auto& s : goals[g].subjects) {
      for (const auto& v : goals[g].verbs) {
        for (const auto& o : goals[g].objects) {
          std::string text = s + " " + v + " " + o;
          auto vec = noise_vector(0.2);
          vec[g] = static_cast<float>(0.4 + 1.2 * rng.uniform());
          store.add(text, vec);
          goal_sentences[g].push_back(std::move(text));
        }
      }
    }
  }
  std::vector<std::string> fillers;
  for (const auto& s : filler_subjects) {
    for (const auto& t : filler_tails) {
      std::string text = s + " " + t;
      store.add(text, noise_vector(0.5));
      fillers.push_back(std::move(text));
    }
  }

  std::string jsonl;
  for (std::size_t c = 0; c < kCompanies; ++c) {
    const std::string company = "co" + two_digits(c + 1);
    std::vector<double> propensity(goals.size());
    for (std::size_t g = 0; g < goals.size(); ++g) propensity[g] = 0.02 + 0.18 * rng.uniform();
    const double quality = rng.uniform();
    const std::size_t n_reviews = 18 + 3 * c + rng.below(6);
    for (std::size_t i = 0; i < n_reviews; ++i) {
      const std::string id = company + "-" + two_digits(i);
      std::string pros;
      const std::size_t n = 1 + rng.below(3);
      for (std::size_t k = 0; k < n; ++k) {
        std::string sentence = fillers[rng.below(fillers.size())];
        for (std::size_t g = 0; g < goals.size(); ++g) {
          if (rng.uniform() < propensity[g] / static_cast<double>(n)) {
            sentence = goal_sentences[g][rng.below(goal_sentences[g].size())];
            break;
          }
        }
        if (pros.find(sentence) == std::string::npos) pros += (pros.empty() ? "" : " ") + sentence;
      }
      std::string cons = fillers[rng.below(fillers.size())];
      if (rng.uniform() < 0.3) cons += " " + goal_sentences[rng.below(goals.size())][0];
      std::vector<double> ratings(5);
      for (std::size_t r = 0; r < 5; ++r) {
        const double x = 1.0 + 4.0 * (0.5 * quality + 0.3 * propensity[r % goals.size()] / 0.2 + 0.2 * rng.uniform());
        ratings[r] = std::round(std::min(5.0, std::max(1.0, x)));
      }
      jsonl += review_json(id, company, kStates[rng.below(6)], pros, cons, ratings).dump() + "\n";
    }
  }
  // One malformed line to exercise the rejects path.
  jsonl += "{\"review_id\": \"broken\"}\n";
  write_text(dir / "reviews.jsonl", jsonl);
  embedding::write_embeddings(store, dir / "embeddings.emb1");

  ojson gj;
  gj["goals"] = ojson::array();
  for (const auto& g : goals) gj["goals"].push_back({{"goal_id", g.id}, {"name", g.id}, {"definition", g.definition}});
  gj["merges"] = ojson::array({{{"from", "flexibility"}, {"into", "balance"}}, {{"from", "training"}, {"into", "career"}}});
  gj["threshold"] = {{"fixed_threshold", 0.31}, {"percentile", 95}};
  write_text(dir / "goals.json", gj.dump(2) + "\n");

  std::string stocks = "company_id,growth\n";
  std::string sectors = "company_id,sector\n";
  const char* sector_names[] = {"retail", "technology", "finance"};
  for (std::size_t c = 0; c < kCompanies; ++c) {
    const std::string company = "co" + two_digits(c + 1);
    if (c != 4) stocks += company + "," + format_double(0.8 + 0.7 * rng.uniform()) + "\n";
    sectors += company + "," + sector_names[c % 3] + "\n";
  }
  write_text(dir / "stocks.csv", stocks);
  write_text(dir / "sectors.csv", sectors);

  ojson gender;
  gender["report_id"] = "gender_equality";
  gender["entries"] = ojson::array();
  const std::vector<std::size_t> gender_order = {3, 1, 7, 10, 2, 12, 5, 8};
  for (std::size_t i = 0; i < gender_order.size(); ++i) {
    gender["entries"].push_back({{"entity_id", "co" + two_digits(gender_order[i])}, {"rank", i + 1}});
  }
  gender["entries"].push_back({{"entity_id", "outside01"}, {"rank", gender_order.size() + 1}});
  write_text(dir / "report_gender.json", gender.dump(2) + "\n");

  ojson fashion;
  fashion["report_id"] = "fashion_transparency";
  fashion["entries"] = ojson::array();
  fashion["raw_metrics"] = ojson::object();
  for (std::size_t c = 0; c < kCompanies; c += 2) {
    const std::string company = "co" + two_digits(c + 1);
    fashion["entries"].push_back({{"entity_id", company}, {"rank", c / 2 + 1}});
    fashion["raw_metrics"][company] = {{"living_wage", std::round(100.0 * rng.uniform())},
                                       {"health_safety", std::round(100.0 * rng.uniform())},
                                       {"equality", std::round(100.0 * rng.uniform())}};
  }
  fashion["metric_map"] = {{"living_wage", {"wages"}}, {"health_safety", {"safety"}}, {"equality", {"diversity"}}};
  write_text(dir / "report_fashion.json", fashion.dump(2) + "\n");

  ojson cfg;
  cfg["reviews"] = "reviews.jsonl";
  cfg["embeddings"] = "embeddings.emb1";
  cfg["goals"] = "goals.json";
  cfg["out_dir"] = "out";
  cfg["filter"] = {{"min_reviews", 1}, {"min_states", 1}};
  cfg["seed"] = 42;
  cfg["rbo"] = {{"p", 0.9}, {"mode", "extrapolated"}, {"baseline_runs", 1000}};
  cfg["stocks"] = {{"path", "stocks.csv"}, {"bins", 4}};
  cfg["sectors"] = "sectors.csv";
  cfg["external_reports"] = ojson::array({{{"path", "report_gender.json"}, {"goal", "diversity"}},
                                          {{"path", "report_fashion.json"}}});
  write_text(dir / "config.json", cfg.dump(2) + "\n");
}

}  // namespace ise::fixture
