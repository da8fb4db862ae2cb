#include "ise/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "ise/error.hpp"
#include "ise/io.hpp"

namespace ise::corpus {

namespace {

using nlohmann::json;

constexpr std::string_view kStateCodes[] = {
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA", "HI", "IA",
    "ID", "IL", "IN", "KS", "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS",
    "MT", "NC", "ND", "NE", "NH", "NJ", "NM", "NV", "NY", "OH", "OK", "OR", "PA",
    "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI", "WV", "WY"};

// Record-level validation failure; becomes a Rejection.
struct RecordError {
  std::string reason;
};

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

// Accepts YYYY-MM-DD, optionally followed by a 'T' time part which is dropped.
std::string validate_date(std::string_view raw) {
  std::string s = trim(raw);
  if (s.size() > 10 && s[10] == 'T') s.resize(10);
  auto bad = [&] { return RecordError{"invalid date '" + std::string(raw) + "'"}; };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw bad();
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) throw bad();
  }
  int y = std::stoi(s.substr(0, 4));
  int m = std::stoi(s.substr(5, 2));
  int d = std::stoi(s.substr(8, 2));
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m < 1 || m > 12) throw bad();
  int max_day = kDays[m - 1] + (m == 2 && is_leap(y) ? 1 : 0);
  if (d < 1 || d > max_day) throw bad();
  return s;
}

std::optional<double> validate_rating(std::string_view name, std::optional<double> v) {
  if (!v) return v;
  if (!std::isfinite(*v) || *v < 0.0 || *v > 5.0) {
    throw RecordError{"rating out of range (" + std::string(name) + ")"};
  }
  return v;
}

std::string required_string(const json& obj, const char* key, bool nonempty) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) throw RecordError{std::string("missing field ") + key};
  if (!it->is_string()) throw RecordError{std::string("field ") + key + " is not a string"};
  std::string v = it->get<std::string>();
  if (nonempty && trim(v).empty()) throw RecordError{std::string("empty field ") + key};
  return v;
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw RecordError{std::string("field ") + key + " is not a string"};
  return it->get<std::string>();
}

Review review_from_json(const json& obj) {
  if (!obj.is_object()) throw RecordError{"record is not a JSON object"};
  Review r;
  r.review_id = trim(required_string(obj, "review_id", true));
  r.company_id = trim(required_string(obj, "company_id", true));
  if (auto s = optional_string(obj, "state")) r.state = normalize_state(*s);
  r.date = validate_date(required_string(obj, "date", true));
  r.title = optional_string(obj, "title").value_or("");
  r.pros = required_string(obj, "pros", false);
  r.cons = required_string(obj, "cons", false);
  r.employee_title = optional_string(obj, "employee_title");
  r.employee_status = optional_string(obj, "employee_status");
  auto rit = obj.find("ratings");
  if (rit != obj.end() && !rit->is_null()) {
    if (!rit->is_object()) throw RecordError{"ratings is not an object"};
    for (std::size_t i = 0; i < kRatingCount; ++i) {
      auto v = rit->find(std::string(kRatingNames[i]));
      if (v == rit->end() || v->is_null()) continue;
      if (!v->is_number()) {
        throw RecordError{"rating " + std::string(kRatingNames[i]) + " is not a number"};
      }
      rating_at(r.ratings, i) = validate_rating(kRatingNames[i], v->get<double>());
    }
  }
  return r;
}

// Shared bookkeeping for both input formats.
class Collector {
 public:
  explicit Collector(bool strict) : strict_(strict) {}

  void reject(std::size_t line, std::string reason) {
    if (strict_) throw DataError("line " + std::to_string(line) + ": " + reason);
    result_.rejects.push_back({line, std::move(reason)});
  }

  void accept(std::size_t line, Review r) {
    auto [it, inserted] = first_line_.emplace(r.review_id, line);
    if (!inserted) {
      throw DataError("duplicate review_id '" + r.review_id + "' on lines " +
                      std::to_string(it->second) + " and " + std::to_string(line));
    }
    result_.reviews.push_back(std::move(r));
  }

  ParseResult take() { return std::move(result_); }

 private:
  bool strict_;
  ParseResult result_;
  std::unordered_map<std::string, std::size_t> first_line_;
};

json optional_to_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }
json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::optional<double>& rating_at(Ratings& r, std::size_t i) {
  switch (i) {
    case 0: return r.balance;
    case 1: return r.career;
    case 2: return r.culture;
    case 3: return r.management;
    default: return r.overall;
  }
}

const std::optional<double>& rating_at(const Ratings& r, std::size_t i) {
  return rating_at(const_cast<Ratings&>(r), i);
}

std::string_view to_string(Source s) { return s == Source::kPros ? "pros" : "cons"; }

Source parse_source(std::string_view s) {
  if (s == "pros") return Source::kPros;
  if (s == "cons") return Source::kCons;
  throw ConfigError("unknown review source '" + std::string(s) + "' (expected pros or cons)");
}

Format parse_format(std::string_view s) {
  if (s == "jsonl") return Format::kJsonl;
  if (s == "csv") return Format::kCsv;
  throw ConfigError("unknown review format '" + std::string(s) + "' (expected jsonl or csv)");
}

std::optional<std::string> normalize_state(std::string_view raw) {
  std::string s = trim(raw);
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (std::binary_search(std::begin(kStateCodes), std::end(kStateCodes), s)) return s;
  return std::nullopt;
}

ParseResult parse_reviews(const std::filesystem::path& path, Format format, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read review file " + path.string());
  return format == Format::kJsonl ? parse_reviews_jsonl(in, strict) : parse_reviews_csv(in, strict);
}

ParseResult parse_reviews_jsonl(std::istream& in, bool strict) {
  Collector col(strict);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded()) {
      col.reject(lineno, "invalid JSON");
      continue;
    }
    try {
      col.accept(lineno, review_from_json(obj));
    } catch (const RecordError& e) {
      col.reject(lineno, e.reason);
    }
  }
  return col.take();
}

ParseResult parse_reviews_csv(std::istream& in, bool strict) {
  auto records = read_csv(in);
  Collector col(strict);
  if (records.empty()) return col.take();
  const auto& header = records.front().fields;
  auto find = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  for (const char* required : {"review_id", "company_id", "date", "pros", "cons"}) {
    if (!find(required)) throw DataError(std::string("CSV header lacks column ") + required);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size()) {
      col.reject(rec.line, "expected " + std::to_string(header.size()) + " fields, found " +
                               std::to_string(rec.fields.size()));
      continue;
    }
    json obj = json::object();
    for (const char* key : {"review_id", "company_id", "state", "date", "title", "pros", "cons",
                            "employee_title", "employee_status"}) {
      if (auto c = find(key)) {
        const std::string& v = rec.fields[*c];
        bool nullable = std::string_view(key) != "pros" && std::string_view(key) != "cons" &&
                        std::string_view(key) != "title";
        obj[key] = (nullable && v.empty()) ? json(nullptr) : json(v);
      }
    }
    try {
      json ratings = json::object();
      for (auto name : kRatingNames) {
        auto c = find(name);
        if (!c || trim(rec.fields[*c]).empty()) continue;
        try {
          ratings[std::string(name)] = parse_double(rec.fields[*c], name);
        } catch (const DataError&) {
          throw RecordError{"rating " + std::string(name) + " is not a number"};
        }
      }
      obj["ratings"] = std::move(ratings);
      col.accept(rec.line, review_from_json(obj));
    } catch (const RecordError& e) {
      col.reject(rec.line, e.reason);
    }
  }
  return col.take();
}

void write_reviews_jsonl(std::ostream& out, const std::vector<Review>& reviews) {
  for (const auto& r : reviews) {
    nlohmann::ordered_json j;
    j["review_id"] = r.review_id;
    j["company_id"] = r.company_id;
    j["state"] = optional_to_json(r.state);
    j["date"] = r.date;
    j["title"] = r.title;
    j["pros"] = r.pros;
    j["cons"] = r.cons;
    nlohmann::ordered_json ratings;
    for (std::size_t i = 0; i < kRatingCount; ++i) {
      ratings[std::string(kRatingNames[i])] = optional_to_json(rating_at(r.ratings, i));
    }
    j["ratings"] = std::move(ratings);
    j["employee_title"] = optional_to_json(r.employee_title);
    j["employee_status"] = optional_to_json(r.employee_status);
    out << j.dump() << '\n';
  }
}

void write_reviews_csv(std::ostream& out, const std::vector<Review>& reviews) {
  write_csv_row(out, {"review_id", "company_id", "state", "date", "title", "pros", "cons", "balance",
                      "career", "culture", "management", "overall", "employee_title",
                      "employee_status"});
  for (const auto& r : reviews) {
    std::vector<std::string> row{r.review_id, r.company_id, r.state.value_or(""), r.date,
                                 r.title,     r.pros,       r.cons};
    for (std::size_t i = 0; i < kRatingCount; ++i) {
      const auto& v = rating_at(r.ratings, i);
      row.push_back(v ? format_double(*v) : "");
    }
    row.push_back(r.employee_title.value_or(""));
    row.push_back(r.employee_status.value_or(""));
    write_csv_row(out, row);
  }
}

std::vector<Review> filter_companies(const std::vector<Review>& reviews, const CorpusFilter& filter) {
  if (filter.min_reviews < 1 || filter.min_states < 1) {
    throw ConfigError("corpus filter thresholds must be >= 1");
  }
  std::unordered_map<std::string, std::size_t> counts;
  std::unordered_map<std::string, std::set<std::string>> states;
  for (const auto& r : reviews) {
    ++counts[r.company_id];
    if (r.state) states[r.company_id].insert(*r.state);
  }
  std::vector<Review> out;
  for (const auto& r : reviews) {
    auto s = states.find(r.company_id);
    std::size_t n_states = s == states.end() ? 0 : s->second.size();
    if (counts[r.company_id] >= filter.min_reviews && n_states >= filter.min_states) {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    std::string s = trim(text.substr(b, e - b));
    if (!s.empty()) out.push_back(std::move(s));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      bool at_end = i + 1 == text.size();
      if (at_end || std::isspace(static_cast<unsigned char>(text[i + 1]))) {
        emit(start, i + 1);
        start = i + 1;
      }
    } else if (c == '\n') {
      emit(start, i);
      start = i + 1;
    }
  }
  if (start < text.size()) emit(start, text.size());
  return out;
}

std::vector<Sentence> review_sentences(const Review& review, Source source) {
  auto parts = split_sentences(source == Source::kPros ? review.pros : review.cons);
  std::vector<Sentence> out;
  out.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.push_back({review.review_id, i, std::move(parts[i]), source});
  }
  return out;
}

namespace {

struct Accumulator {
  std::size_t n = 0;
  double sum = 0.0;
  double sum_sq_dev = 0.0;
  double mean = 0.0;
  // Welford update.
  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    sum_sq_dev += d * (x - mean);
  }
  Moments moments() const {
    Moments m;
    m.n = n;
    if (n > 0) m.mean = mean;
    if (n > 1) m.stddev = std::sqrt(sum_sq_dev / static_cast<double>(n - 1));
    return m;
  }
};

}  // namespace

CorpusStats corpus_stats(const std::vector<Review>& reviews) {
  CorpusStats st;
  st.total_reviews = reviews.size();
  std::map<std::string, std::array<Accumulator, kRatingCount>> company_acc;
  std::map<std::string, std::set<std::string>> company_states;
  std::array<Accumulator, kRatingCount> all_acc;
  for (const auto& r : reviews) {
    auto& cs = st.companies[r.company_id];
    ++cs.reviews;
    if (r.state) {
      ++st.states[*r.state];
      company_states[r.company_id].insert(*r.state);
    } else {
      ++st.reviews_without_state;
    }
    auto& acc = company_acc[r.company_id];
    for (std::size_t i = 0; i < kRatingCount; ++i) {
      if (const auto& v = rating_at(r.ratings, i)) {
        acc[i].add(*v);
        all_acc[i].add(*v);
      }
    }
  }
  for (auto& [company, cs] : st.companies) {
    cs.states = company_states[company].size();
    for (std::size_t i = 0; i < kRatingCount; ++i) cs.ratings[i] = company_acc[company][i].moments();
  }
  for (std::size_t i = 0; i < kRatingCount; ++i) st.ratings[i] = all_acc[i].moments();
  return st;
}

}  // namespace ise::corpus
