#pragma once

// Sentence and goal-definition vectors: the EMB1 container, a seeded
// hashing stub encoder, and cosine similarity.
//
// EMB1 layout (all integers and floats little-endian):
//   "EMB1" | u32 dim | u64 count | count x ( u32 key_len | key bytes | dim x f32 )

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ise::embedding {

using Vector = std::vector<float>;

class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::uint32_t dim);

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  bool contains(std::string_view key) const;

  /// Throws DataError on wrong length, non-finite values or a duplicate key.
  void add(std::string key, std::span<const float> values);

  std::optional<std::span<const float>> find(std::string_view key) const;
  /// Throws DataError("missing embedding for ...") when absent.
  std::span<const float> at(std::string_view key) const;
  std::optional<std::size_t> index_of(std::string_view key) const;
  std::span<const float> row(std::size_t index) const;

  /// Keys in insertion order, which is also the on-disk order.
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::uint32_t dim_;
  std::vector<std::string> keys_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingStore load_embeddings(const std::filesystem::path& path);
EmbeddingStore read_embeddings(std::istream& in);
void write_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);
void write_embeddings(const EmbeddingStore& store, std::ostream& out);

/// Deterministic unit-norm bag-of-tokens vector. Tokens are the lowercased
/// whitespace-separated words of `text`; each token seeds its own stream of
/// pseudo-random components and the per-token vectors are summed (in sorted
/// token order, so the result is bitwise order-insensitive) and normalized.
/// Text with no tokens maps to the basis vector e_0.
Vector stub_embed(std::string_view text, std::uint32_t dim, std::uint64_t seed);

/// Cosine similarity with 64-bit accumulation, clamped to [-1, 1].
/// Throws DataError on dimension mismatch or an all-zero vector.
double cosine(std::span<const float> a, std::span<const float> b);

double norm(std::span<const float> v);

}  // namespace ise::embedding
