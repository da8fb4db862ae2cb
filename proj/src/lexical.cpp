#include "ise/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ise/error.hpp"

namespace ise::lexical {

namespace {

// The NLTK English list, restricted to entries without apostrophes (the
// tokenizer never produces those). Sorted for binary search.
constexpr std::string_view kStopwords[] = {
    "a",          "about",    "above",   "after",     "again",    "against", "ain",     "all",
    "am",         "an",       "and",     "any",       "are",      "aren",    "as",      "at",
    "be",         "because",  "been",    "before",    "being",    "below",   "between", "both",
    "but",        "by",       "can",     "couldn",    "d",        "did",     "didn",    "do",
    "does",       "doesn",    "doing",   "don",       "down",     "during",  "each",    "few",
    "for",        "from",     "further", "had",       "hadn",     "has",     "hasn",    "have",
    "haven",      "having",   "he",      "her",       "here",     "hers",    "herself", "him",
    "himself",    "his",      "how",     "i",         "if",       "in",      "into",    "is",
    "isn",        "it",       "its",     "itself",    "just",     "ll",      "m",       "ma",
    "me",         "mightn",   "more",    "most",      "mustn",    "my",      "myself",  "needn",
    "no",         "nor",      "not",     "now",       "o",        "of",      "off",     "on",
    "once",       "only",     "or",      "other",     "our",      "ours",    "ourselves", "out",
    "over",       "own",      "re",      "s",         "same",     "shan",    "she",     "should",
    "shouldn",    "so",       "some",    "such",      "t",        "than",    "that",    "the",
    "their",      "theirs",   "them",    "themselves", "then",    "there",   "these",   "they",
    "this",       "those",    "through", "to",        "too",      "under",   "until",   "up",
    "ve",         "very",     "was",     "wasn",      "we",       "were",    "weren",   "what",
    "when",       "where",    "which",   "while",     "who",      "whom",    "why",     "will",
    "with",       "won",      "wouldn",  "y",         "you",      "your",    "yours",   "yourself",
    "yourselves"};

bool token_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::span<const std::string_view> stopwords() { return kStopwords; }

bool is_stopword(std::string_view token) {
  return std::binary_search(std::begin(kStopwords), std::end(kStopwords), token);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (token_char(c)) {
      cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> content_tokens(std::string_view text) {
  auto tokens = tokenize(text);
  std::erase_if(tokens, [](const std::string& t) { return is_stopword(t); });
  return tokens;
}

NgramCounts extract_ngrams(std::span<const std::string> tokens, std::size_t n_min, std::size_t n_max) {
  if (n_min < 1 || n_min > n_max) throw ConfigError("n-gram orders must satisfy 1 <= n_min <= n_max");
  NgramCounts counts;
  for (std::size_t n = n_min; n <= n_max && n <= tokens.size(); ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string g = tokens[i];
      for (std::size_t j = 1; j < n; ++j) {
        g += ' ';
        g += tokens[i + j];
      }
      ++counts[g];
    }
  }
  return counts;
}

std::size_t ngram_order(std::string_view ngram) {
  return static_cast<std::size_t>(std::count(ngram.begin(), ngram.end(), ' ')) + 1;
}

IseDocument make_document(std::string goal_id, const std::vector<std::string>& sentence_texts) {
  IseDocument doc{std::move(goal_id), {}};
  for (const auto& s : sentence_texts) doc.sentences.push_back(content_tokens(s));
  return doc;
}

std::vector<KeywordScore> tfidf(const std::vector<IseDocument>& documents, std::size_t n_min, std::size_t n_max) {
  if (documents.size() < 2) throw DataError("TF-IDF needs at least 2 documents");
  std::set<std::string> ids;
  for (const auto& d : documents) {
    if (!ids.insert(d.goal_id).second) throw DataError("duplicate document for goal '" + d.goal_id + "'");
  }
  std::vector<NgramCounts> counts(documents.size());
  std::vector<std::map<std::size_t, std::size_t>> totals(documents.size());  // order -> n-gram count
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    for (const auto& sentence : documents[i].sentences) {
      for (const auto& [g, c] : extract_ngrams(sentence, n_min, n_max)) {
        counts[i][g] += c;
        totals[i][ngram_order(g)] += c;
      }
    }
    for (const auto& [g, c] : counts[i]) ++df[g];
  }
  const double n_docs = static_cast<double>(documents.size());
  std::vector<KeywordScore> out;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    const std::size_t first = out.size();
    double max_score = 0.0;
    for (const auto& [g, c] : counts[i]) {
      const double tf = static_cast<double>(c) / static_cast<double>(totals[i].at(ngram_order(g)));
      const double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df.at(g)))) + 1.0;
      KeywordScore k{g, documents[i].goal_id, tf * idf, 0.0};
      max_score = std::max(max_score, k.tfidf);
      out.push_back(std::move(k));
    }
    for (std::size_t j = first; j < out.size(); ++j) {
      out[j].tfidf_normalized = max_score > 0.0 ? out[j].tfidf / max_score : 0.0;
    }
  }
  return out;
}

std::vector<KeywordScore> top_keywords(const std::vector<KeywordScore>& scores, const std::string& goal_id,
                                       std::size_t k) {
  if (k == 0) throw ConfigError("top-k needs k >= 1");
  std::vector<KeywordScore> out;
  for (const auto& s : scores) {
    if (s.goal_id == goal_id) out.push_back(s);
  }
  if (out.empty()) throw DataError("no keywords for goal '" + goal_id + "'");
  std::sort(out.begin(), out.end(), [](const KeywordScore& a, const KeywordScore& b) {
    if (a.tfidf != b.tfidf) return a.tfidf > b.tfidf;
    return a.ngram < b.ngram;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

Heatmap keyword_heatmap(const std::vector<KeywordScore>& scores, const std::vector<std::string>& goal_ids,
                        std::size_t k) {
  Heatmap h;
  h.goal_ids = goal_ids;
  std::set<std::string> seen;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (const auto& s : scores) cell[{s.ngram, s.goal_id}] = s.tfidf_normalized;
  for (const auto& g : goal_ids) {
    bool any = false;
    for (const auto& s : scores) {
      if (s.goal_id == g) {
        any = true;
        break;
      }
    }
    if (!any) continue;
    for (const auto& kw : top_keywords(scores, g, k)) {
      if (seen.insert(kw.ngram).second) h.ngrams.push_back(kw.ngram);
    }
  }
  for (const auto& n : h.ngrams) {
    std::vector<double> row;
    for (const auto& g : goal_ids) {
      auto it = cell.find({n, g});
      row.push_back(it == cell.end() ? 0.0 : it->second);
    }
    h.normalized.push_back(std::move(row));
  }
  return h;
}

}  // namespace ise::lexical
