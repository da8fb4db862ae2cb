#pragma once

// Deterministic synthetic inputs: reviews, goal config, engineered
// embeddings and a pipeline config whose out_dir is "<dir>/out".

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>

namespace ise::fixture {

struct PlantedTruth {
  std::set<std::pair<std::string, std::string>> relevant;  // (review_id, goal_id)
  std::map<std::string, std::map<std::string, double>> sim;  // review -> goal -> planted cosine
  std::map<std::string, std::size_t> reviews_per_company;
};

/// Three companies, three goals, 16 reviews each. Goal vectors are unit
/// axes; planted sentences have cosine 3/4 or 7/8 with exactly one goal
/// and every other sentence is orthogonal to all goals.
PlantedTruth write_planted(const std::filesystem::path& dir);

/// Twelve companies, eight goals merged down to six, ratings, stock
/// growth, sectors and two external reports.
void write_full(const std::filesystem::path& dir);

}  // namespace ise::fixture
