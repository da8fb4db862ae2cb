#include "ise/kernels.hpp"

#include <numeric>

#include "ise/error.hpp"
#include "ise/hash.hpp"
#include "ise/validation.hpp"

namespace ise::kernels {

namespace {

inline void review_max(const embedding::EmbeddingStore& store, const SentenceBatch& batch,
                       std::span<const std::size_t> goal_rows, std::size_t r, std::span<MaxSim> out) {
  const std::size_t n_goals = goal_rows.size();
  const std::size_t begin = batch.offsets[r];
  const std::size_t end = batch.offsets[r + 1];
  for (std::size_t g = 0; g < n_goals; ++g) {
    MaxSim best;
    const auto goal = store.row(goal_rows[g]);
    for (std::size_t s = begin; s < end; ++s) {
      const double c = embedding::cosine(store.row(batch.rows[s]), goal);
      if (best.ordinal < 0 || c > best.sim) {
        best.sim = c;
        best.ordinal = static_cast<std::int64_t>(s - begin);
      }
    }
    out[r * n_goals + g] = best;
  }
}

// Unbiased draw in [0, bound) by rejection.
inline std::uint64_t bounded(std::uint64_t& state, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = hash::splitmix64_next(state);
    if (r >= threshold) return r % bound;
  }
}

inline void shuffle_into(std::span<const std::uint32_t> universe, std::uint64_t seed,
                         std::uint64_t index, std::vector<std::uint32_t>& buf) {
  buf.assign(universe.begin(), universe.end());
  std::uint64_t state = hash::stream_seed(seed, index);
  for (std::size_t i = buf.size(); i > 1; --i) {
    std::size_t j = bounded(state, i);
    std::swap(buf[i - 1], buf[j]);
  }
}

inline double one_run(std::span<const std::uint32_t> universe, std::span<const std::uint32_t> reference,
                      RboParams params, std::uint64_t seed, std::size_t i,
                      std::vector<std::uint32_t>& buf) {
  shuffle_into(universe, seed, i, buf);
  auto mode = params.extrapolated ? validation::RboMode::kExtrapolated : validation::RboMode::kFiniteDepth;
  return validation::rbo_ids(reference, buf, params.p, mode).value;
}

}  // namespace

void max_similarity(const embedding::EmbeddingStore& store, const SentenceBatch& batch,
                    std::span<const std::size_t> goal_rows, std::span<MaxSim> out) {
  const auto n = static_cast<std::ptrdiff_t>(batch.reviews());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    review_max(store, batch, goal_rows, static_cast<std::size_t>(r), out);
  }
}

void max_similarity_serial(const embedding::EmbeddingStore& store, const SentenceBatch& batch,
                           std::span<const std::size_t> goal_rows, std::span<MaxSim> out) {
  for (std::size_t r = 0; r < batch.reviews(); ++r) review_max(store, batch, goal_rows, r, out);
}

std::vector<std::uint32_t> shuffled_copy(std::span<const std::uint32_t> universe, std::uint64_t seed,
                                         std::uint64_t index) {
  std::vector<std::uint32_t> buf;
  shuffle_into(universe, seed, index, buf);
  return buf;
}

void shuffled_rbo(std::span<const std::uint32_t> universe, std::span<const std::uint32_t> reference,
                  RboParams params, std::uint64_t seed, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel
  {
    std::vector<std::uint32_t> buf;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[i] = one_run(universe, reference, params, seed, static_cast<std::size_t>(i), buf);
    }
  }
}

void shuffled_rbo_serial(std::span<const std::uint32_t> universe,
                         std::span<const std::uint32_t> reference, RboParams params,
                         std::uint64_t seed, std::span<double> out) {
  std::vector<std::uint32_t> buf;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = one_run(universe, reference, params, seed, i, buf);
  }
}

std::vector<embedding::Vector> stub_embed_all(std::span<const std::string> texts, std::uint32_t dim,
                                              std::uint64_t seed) {
  if (dim < 2) throw ConfigError("stub embedding dimension must be >= 2");
  std::vector<embedding::Vector> out(texts.size());
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = embedding::stub_embed(texts[i], dim, seed);
  return out;
}

std::vector<embedding::Vector> stub_embed_all_serial(std::span<const std::string> texts,
                                                     std::uint32_t dim, std::uint64_t seed) {
  std::vector<embedding::Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embedding::stub_embed(t, dim, seed));
  return out;
}

}  // namespace ise::kernels
