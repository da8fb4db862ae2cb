#pragma once

// Review corpus: parsing, validation, company filtering and sentence
// splitting.

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ise::corpus {

struct Ratings {
  std::optional<double> balance;
  std::optional<double> career;
  std::optional<double> culture;
  std::optional<double> management;
  std::optional<double> overall;

  bool operator==(const Ratings&) const = default;
};

inline constexpr std::size_t kRatingCount = 5;
inline constexpr std::string_view kRatingNames[kRatingCount] = {
    "balance", "career", "culture", "management", "overall"};

std::optional<double>& rating_at(Ratings& r, std::size_t i);
const std::optional<double>& rating_at(const Ratings& r, std::size_t i);

struct Review {
  std::string review_id;
  std::string company_id;
  std::optional<std::string> state;  // normalized 2-letter code or absent
  std::string date;                  // ISO-8601 YYYY-MM-DD
  std::string title;
  std::string pros;
  std::string cons;
  Ratings ratings;
  std::optional<std::string> employee_title;
  std::optional<std::string> employee_status;

  bool operator==(const Review&) const = default;
};

enum class Source { kPros, kCons };
std::string_view to_string(Source s);
Source parse_source(std::string_view s);

struct Sentence {
  std::string review_id;
  std::size_t ordinal = 0;
  std::string text;
  Source source = Source::kPros;
};

struct CorpusFilter {
  std::size_t min_reviews = 1000;
  std::size_t min_states = 10;
};

enum class Format { kJsonl, kCsv };
Format parse_format(std::string_view s);

struct Rejection {
  std::size_t line = 0;
  std::string reason;
};

struct ParseResult {
  std::vector<Review> reviews;
  std::vector<Rejection> rejects;
};

/// Reads a review file. Malformed records are collected in `rejects` unless
/// `strict` is set, in which case the first one throws DataError. A duplicate
/// review_id always throws and names both lines.
ParseResult parse_reviews(const std::filesystem::path& path, Format format, bool strict = false);
ParseResult parse_reviews_jsonl(std::istream& in, bool strict = false);
ParseResult parse_reviews_csv(std::istream& in, bool strict = false);

void write_reviews_jsonl(std::ostream& out, const std::vector<Review>& reviews);
void write_reviews_csv(std::ostream& out, const std::vector<Review>& reviews);

/// Upper-cases and validates a US state code (50 states plus DC).
std::optional<std::string> normalize_state(std::string_view raw);

/// Keeps reviews of companies with at least `min_reviews` reviews and at
/// least `min_states` distinct non-null states. Input order is preserved.
std::vector<Review> filter_companies(const std::vector<Review>& reviews, const CorpusFilter& filter);

/// Splits after '.', '!' or '?' when followed by whitespace or end of text,
/// and at line breaks. Fragments are trimmed; empty ones are dropped.
/// Abbreviations such as "Approx." are split too.
std::vector<std::string> split_sentences(std::string_view text);

std::vector<Sentence> review_sentences(const Review& review, Source source);

struct Moments {
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> stddev;  // sample (n-1); absent for n < 2
};

struct CompanyStats {
  std::size_t reviews = 0;
  std::size_t states = 0;
  std::array<Moments, kRatingCount> ratings;
};

struct CorpusStats {
  std::size_t total_reviews = 0;
  std::map<std::string, CompanyStats> companies;
  std::map<std::string, std::size_t> states;  // review count per state
  std::size_t reviews_without_state = 0;
  std::array<Moments, kRatingCount> ratings;
};

CorpusStats corpus_stats(const std::vector<Review>& reviews);

}  // namespace ise::corpus
