#pragma once

// Data-parallel hot loops. Each kernel has an OpenMP version and a plain
// serial reference with identical per-element arithmetic; tests require the
// two to agree bit-for-bit and bench/ compares their throughput. Output
// slots are written independently, so results never depend on the number
// of threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ise/embedding.hpp"

namespace ise::kernels {

/// Sentences of a batch of reviews, flattened. Review r owns the store rows
/// `rows[offsets[r] .. offsets[r+1])`, in sentence order.
struct SentenceBatch {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> rows;

  std::size_t reviews() const { return offsets.size() - 1; }
};

struct MaxSim {
  double sim = -1.0;
  std::int64_t ordinal = -1;  // -1: review has no sentences
};

/// out[r * goal_rows.size() + g] = max over review r's sentences of
/// cosine(sentence, goal g); ties keep the lowest ordinal.
void max_similarity(const embedding::EmbeddingStore& store, const SentenceBatch& batch,
                    std::span<const std::size_t> goal_rows, std::span<MaxSim> out);
void max_similarity_serial(const embedding::EmbeddingStore& store, const SentenceBatch& batch,
                           std::span<const std::size_t> goal_rows, std::span<MaxSim> out);

struct RboParams {
  double p = 0.9;
  bool extrapolated = true;
};

/// out[i] = rbo(reference, shuffle_i(universe)) where shuffle_i is a
/// Fisher-Yates shuffle driven by the stream (seed, i).
void shuffled_rbo(std::span<const std::uint32_t> universe, std::span<const std::uint32_t> reference,
                  RboParams params, std::uint64_t seed, std::span<double> out);
void shuffled_rbo_serial(std::span<const std::uint32_t> universe,
                         std::span<const std::uint32_t> reference, RboParams params,
                         std::uint64_t seed, std::span<double> out);

/// The i-th shuffled ordering used by `shuffled_rbo`.
std::vector<std::uint32_t> shuffled_copy(std::span<const std::uint32_t> universe, std::uint64_t seed,
                                         std::uint64_t index);

std::vector<embedding::Vector> stub_embed_all(std::span<const std::string> texts, std::uint32_t dim,
                                              std::uint64_t seed);
std::vector<embedding::Vector> stub_embed_all_serial(std::span<const std::string> texts,
                                                     std::uint32_t dim, std::uint64_t seed);

}  // namespace ise::kernels
