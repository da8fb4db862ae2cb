#pragma once

// TF-IDF n-gram keywords for the sentences behind each goal's relevant
// reviews.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ise::lexical {

/// Identifier of the bundled English stopword list, recorded in outputs.
inline constexpr std::string_view kStopwordListVersion = "en-nltk-2024-alnum";

bool is_stopword(std::string_view token);
std::span<const std::string_view> stopwords();

/// Lowercases ASCII and splits on anything that is not a letter or digit.
/// Bytes >= 0x80 count as letters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

/// tokenize() without stopwords.
std::vector<std::string> content_tokens(std::string_view text);

/// n-gram (tokens joined by single spaces) -> occurrence count.
using NgramCounts = std::map<std::string, std::size_t>;

/// Contiguous n-grams of orders n_min..n_max. Throws ConfigError unless
/// 1 <= n_min <= n_max.
NgramCounts extract_ngrams(std::span<const std::string> tokens, std::size_t n_min = 1, std::size_t n_max = 4);

/// Number of tokens in an n-gram.
std::size_t ngram_order(std::string_view ngram);

struct IseDocument {
  std::string goal_id;
  /// Content tokens per sentence; n-grams never cross sentences.
  std::vector<std::vector<std::string>> sentences;
};

IseDocument make_document(std::string goal_id, const std::vector<std::string>& sentence_texts);

struct KeywordScore {
  std::string ngram;
  std::string goal_id;
  double tfidf = 0.0;
  double tfidf_normalized = 0.0;
};

/// tf = count / (n-grams of the same order in the document),
/// idf = ln((1 + N) / (1 + df)) + 1, normalized by the per-goal maximum.
/// Output is grouped by document, n-grams ascending. Needs >= 2 documents.
std::vector<KeywordScore> tfidf(const std::vector<IseDocument>& documents, std::size_t n_min = 1,
                                std::size_t n_max = 4);

/// Descending tfidf, ties by n-gram. Throws DataError for an unknown goal.
std::vector<KeywordScore> top_keywords(const std::vector<KeywordScore>& scores, const std::string& goal_id,
                                       std::size_t k);

struct Heatmap {
  std::vector<std::string> ngrams;    // rows
  std::vector<std::string> goal_ids;  // columns
  std::vector<std::vector<double>> normalized;
};

/// Rows are the union of every goal's top-k n-grams (first seen, in goal
/// order); cells hold tfidf_normalized or 0.
Heatmap keyword_heatmap(const std::vector<KeywordScore>& scores, const std::vector<std::string>& goal_ids,
                        std::size_t k);

}  // namespace ise::lexical
