#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ise/embedding.hpp"
#include "ise/error.hpp"
#include "ise/kernels.hpp"

using namespace ise;
using namespace ise::embedding;

namespace {

std::string emb1(std::uint32_t dim, const std::vector<std::pair<std::string, std::vector<float>>>& recs) {
  EmbeddingStore s(dim);
  for (const auto& [k, v] : recs) s.add(k, v);
  std::ostringstream out;
  write_embeddings(s, out);
  return out.str();
}

}  // namespace

TEST_CASE("EMB1 header and record layout") {
  const auto bytes = emb1(4, {{"ab", {1, 2, 3, 4}}});
  REQUIRE(bytes.size() == 4 + 4 + 8 + 4 + 2 + 16);
  CHECK(bytes.substr(0, 4) == "EMB1");
  CHECK(static_cast<unsigned char>(bytes[4]) == 4);
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);
  CHECK(static_cast<unsigned char>(bytes[16]) == 2);
  CHECK(bytes.substr(20, 2) == "ab");
  float f;
  std::memcpy(&f, bytes.data() + 22, 4);
  CHECK(f == 1.0f);
}

TEST_CASE("store of two records loads with its dimension") {
  std::istringstream in(emb1(4, {{"a", {1, 0, 0, 0}}, {"b", {0, 1, 0, 0}}}));
  auto s = read_embeddings(in);
  CHECK(s.size() == 2);
  CHECK(s.dim() == 4);
}

TEST_CASE("short record is a length mismatch") {
  auto bytes = emb1(4, {{"a", {1, 0, 0, 0}}});
  bytes[4] = 5;  // claim dim 5
  std::istringstream in(bytes);
  CHECK_THROWS_AS(read_embeddings(in), DataError);
}

TEST_CASE("empty store is valid and lookups fail") {
  std::istringstream in(emb1(3, {}));
  auto s = read_embeddings(in);
  CHECK(s.size() == 0);
  CHECK_FALSE(s.find("x").has_value());
  CHECK_THROWS_AS(s.at("x"), DataError);
}

TEST_CASE("bad magic and trailing bytes") {
  std::istringstream bad("EMB2xxxxxxxxxxxx");
  CHECK_THROWS_AS(read_embeddings(bad), DataError);
  std::istringstream trailing(emb1(2, {{"a", {1, 0}}}) + "z");
  CHECK_THROWS_AS(read_embeddings(trailing), DataError);
}

TEST_CASE("duplicate key is rejected") {
  EmbeddingStore s(2);
  s.add("a", std::vector<float>{1, 0});
  CHECK_THROWS_AS(s.add("a", std::vector<float>{0, 1}), DataError);
}

TEST_CASE("write then read is bit-identical") {
  std::mt19937 rng(1);
  std::normal_distribution<float> z;
  EmbeddingStore s(7);
  for (int i = 0; i < 50; ++i) {
    std::vector<float> v(7);
    for (auto& x : v) x = z(rng);
    s.add("key " + std::to_string(i), v);
  }
  std::ostringstream out;
  write_embeddings(s, out);
  std::istringstream in(out.str());
  auto back = read_embeddings(in);
  std::ostringstream again;
  write_embeddings(back, again);
  CHECK(again.str() == out.str());
}

TEST_CASE("stub embedding properties") {
  CHECK(stub_embed("a b", 16, 3) == stub_embed("b a", 16, 3));
  CHECK(stub_embed("Pay GOOD", 16, 3) == stub_embed("pay good", 16, 3));
  CHECK(stub_embed("x", 8, 1) != stub_embed("x", 8, 2));
  for (const char* t : {"one", "two words", "a much longer sentence with many tokens"}) {
    CHECK(norm(stub_embed(t, 32, 9)) == doctest::Approx(1.0).epsilon(1e-6));
  }
  auto e = stub_embed("   ", 5, 1);
  CHECK(e == Vector{1, 0, 0, 0, 0});
  CHECK_THROWS(stub_embed("x", 1, 1));
}

TEST_CASE("cosine examples and properties") {
  const std::vector<float> a{1, 0}, b{0, 1}, c{1, 1};
  CHECK(cosine(a, b) == 0.0);
  CHECK(cosine(c, a) == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(cosine(c, c) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine(a, std::vector<float>{1, 0, 0}), DataError);
  CHECK_THROWS_AS(cosine(a, std::vector<float>{0, 0}), DataError);
  std::mt19937 rng(4);
  std::normal_distribution<float> z;
  for (int t = 0; t < 200; ++t) {
    std::vector<float> x(9), y(9), kx(9);
    for (int i = 0; i < 9; ++i) {
      x[i] = z(rng);
      y[i] = z(rng);
      kx[i] = 3.5f * x[i];
    }
    CHECK(cosine(x, y) == cosine(y, x));
    CHECK(std::abs(cosine(kx, y) - cosine(x, y)) < 1e-6);
    CHECK(std::abs(cosine(x, y)) <= 1.0);
  }
}

TEST_CASE("parallel kernels match their serial references bit for bit") {
  std::vector<std::string> texts;
  for (int i = 0; i < 400; ++i) texts.push_back("text number " + std::to_string(i) + " about pay " + std::to_string(i % 7));
  const auto par = kernels::stub_embed_all(texts, 24, 5);
  const auto ser = kernels::stub_embed_all_serial(texts, 24, 5);
  CHECK(par == ser);

  EmbeddingStore store(24);
  for (std::size_t i = 0; i < texts.size(); ++i) store.add(texts[i], par[i]);
  kernels::SentenceBatch batch;
  std::mt19937 rng(2);
  for (int r = 0; r < 150; ++r) {
    const auto n = rng() % 4;
    for (unsigned s = 0; s < n; ++s) batch.rows.push_back(10 + rng() % 390);
    batch.offsets.push_back(batch.rows.size());
  }
  const std::vector<std::size_t> goals{0, 1, 2, 3, 4};
  std::vector<kernels::MaxSim> a(batch.reviews() * goals.size()), b(a.size());
  kernels::max_similarity(store, batch, goals, a);
  kernels::max_similarity_serial(store, batch, goals, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].sim == b[i].sim);
    CHECK(a[i].ordinal == b[i].ordinal);
  }

  std::vector<std::uint32_t> universe(30);
  std::iota(universe.begin(), universe.end(), 0u);
  const std::vector<std::uint32_t> reference{4, 9, 2, 17, 28};
  for (bool extrapolated : {true, false}) {
    std::vector<double> x(500), y(500);
    kernels::shuffled_rbo(universe, reference, {0.9, extrapolated}, 77, x);
    kernels::shuffled_rbo_serial(universe, reference, {0.9, extrapolated}, 77, y);
    CHECK(x == y);
  }
}

TEST_CASE("max similarity ties keep the lowest ordinal and empty reviews get the sentinel") {
  EmbeddingStore store(2);
  store.add("g", std::vector<float>{1, 0});
  store.add("s0", std::vector<float>{1, 1});
  store.add("s1", std::vector<float>{2, 2});
  kernels::SentenceBatch batch;
  batch.rows = {1, 2};
  batch.offsets = {0, 2, 2};
  std::vector<kernels::MaxSim> out(2);
  const std::vector<std::size_t> goals{0};
  kernels::max_similarity(store, batch, goals, out);
  CHECK(out[0].ordinal == 0);
  CHECK(out[1].sim == -1.0);
  CHECK(out[1].ordinal == -1);
}
