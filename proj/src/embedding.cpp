#include "ise/embedding.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ise/error.hpp"
#include "ise/hash.hpp"

namespace ise::embedding {

namespace {

constexpr std::array<char, 4> kMagic = {'E', 'M', 'B', '1'};

template <typename T>
void put_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw DataError(std::string("EMB1: truncated while reading ") + what);
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::uint32_t dim) : dim_(dim) {
  if (dim == 0) throw DataError("embedding dimension must be positive");
}

bool EmbeddingStore::contains(std::string_view key) const { return index_of(key).has_value(); }

void EmbeddingStore::add(std::string key, std::span<const float> values) {
  if (values.size() != dim_) {
    throw DataError("record length mismatch for key '" + key + "': " + std::to_string(values.size()) +
                    " values, dim " + std::to_string(dim_));
  }
  for (float f : values) {
    if (!std::isfinite(f)) throw DataError("non-finite value in embedding for key '" + key + "'");
  }
  if (index_.contains(key)) throw DataError("duplicate embedding key '" + key + "'");
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  data_.insert(data_.end(), values.begin(), values.end());
}

std::optional<std::size_t> EmbeddingStore::index_of(std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const float> EmbeddingStore::row(std::size_t index) const {
  return {data_.data() + index * dim_, dim_};
}

std::optional<std::span<const float>> EmbeddingStore::find(std::string_view key) const {
  if (auto i = index_of(key)) return row(*i);
  return std::nullopt;
}

std::span<const float> EmbeddingStore::at(std::string_view key) const {
  if (auto v = find(key)) return *v;
  throw DataError("missing embedding for \"" + std::string(key) + "\"");
}

EmbeddingStore read_embeddings(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) throw DataError("EMB1: bad magic");
  auto dim = get_le<std::uint32_t>(in, "dim");
  auto count = get_le<std::uint64_t>(in, "record count");
  if (dim == 0) throw DataError("EMB1: dimension must be positive");
  EmbeddingStore store(dim);
  std::vector<float> values(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    auto key_len = get_le<std::uint32_t>(in, "key length");
    std::string key(key_len, '\0');
    in.read(key.data(), key_len);
    if (in.gcount() != static_cast<std::streamsize>(key_len)) {
      throw DataError("EMB1: truncated key in record " + std::to_string(r));
    }
    for (std::uint32_t i = 0; i < dim; ++i) {
      std::array<unsigned char, 4> b{};
      in.read(reinterpret_cast<char*>(b.data()), 4);
      if (in.gcount() != 4) {
        throw DataError("EMB1: record length mismatch in record " + std::to_string(r) +
                        " (expected " + std::to_string(dim) + " floats)");
      }
      std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
                           static_cast<std::uint32_t>(b[2]) << 16 |
                           static_cast<std::uint32_t>(b[3]) << 24;
      values[i] = std::bit_cast<float>(bits);
    }
    store.add(std::move(key), values);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("EMB1: trailing bytes after " + std::to_string(count) +
                    " records (record length mismatch?)");
  }
  return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read embeddings " + path.string());
  try {
    return read_embeddings(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_embeddings(const EmbeddingStore& store, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, store.dim());
  put_le<std::uint64_t>(out, store.size());
  for (std::size_t r = 0; r < store.size(); ++r) {
    const auto& key = store.keys()[r];
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    for (float f : store.row(r)) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
}

void write_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::ostringstream buf(std::ios::binary);
  write_embeddings(store, buf);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    const std::string bytes = buf.str();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, path);
}

Vector stub_embed(std::string_view text, std::uint32_t dim, std::uint64_t seed) {
  if (dim < 2) throw ConfigError("stub embedding dimension must be >= 2");
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  std::sort(tokens.begin(), tokens.end());

  std::vector<double> acc(dim, 0.0);
  const std::uint64_t seed_mix = hash::splitmix64(seed);
  for (const auto& tok : tokens) {
    std::uint64_t state = hash::fnv1a64(tok) ^ seed_mix;
    for (std::uint32_t i = 0; i < dim; ++i) {
      // Top 53 bits -> [0,1) -> [-1,1).
      double u = static_cast<double>(hash::splitmix64_next(state) >> 11) * 0x1.0p-53;
      acc[i] += 2.0 * u - 1.0;
    }
  }
  double sq = 0.0;
  for (double v : acc) sq += v * v;
  Vector out(dim, 0.0F);
  if (sq == 0.0) {
    out[0] = 1.0F;
    return out;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (std::uint32_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
  return out;
}

double norm(std::span<const float> v) {
  double sq = 0.0;
  for (float f : v) sq += static_cast<double>(f) * f;
  return std::sqrt(sq);
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw DataError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) throw DataError("cosine: zero vector");
  // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): identical inputs give exactly 1.
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace ise::embedding
