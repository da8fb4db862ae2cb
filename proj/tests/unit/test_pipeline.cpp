#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fixture.hpp"
#include "ise/io.hpp"
#include "ise/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using ise::pipeline::cli_main;

namespace {

fs::path fresh(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ise_pipeline_" + name);
  fs::remove_all(p);
  ise::fixture::write_full(p);
  return p;
}

int run(const std::vector<std::string>& args, std::string* err = nullptr) {
  std::ostringstream out, e;
  std::vector<std::string> full{"ise"};
  full.insert(full.end(), args.begin(), args.end());
  const int rc = cli_main(full, out, e);
  if (err) *err = e.str();
  return rc;
}

std::vector<std::string> csv_header(const fs::path& p) {
  std::ifstream in(p);
  auto rows = ise::read_csv(in, true);
  return rows.at(0).fields;
}

void edit_json(const fs::path& p, const std::function<void(json&)>& f) {
  auto j = json::parse(ise::read_file(p));
  f(j);
  std::ofstream(p) << j.dump(2);
}

}  // namespace

TEST_CASE("exit codes") {
  const auto dir = fresh("exit");
  const auto cfg = (dir / "config.json").string();
  std::string err;
  CHECK(run({"score", "--config", cfg}, &err) == 1);
  CHECK(err.find("run ingest first") != std::string::npos);
  CHECK(run({"ingest", "--config", (dir / "missing.json").string()}) == 2);
  CHECK(run({"bogus", "--config", cfg}) == 2);
  CHECK(run({"ingest"}) == 2);
  CHECK(run({"ingest", "--config", cfg, "--strict"}) == 1);
  CHECK(run({"ingest", "--config", cfg}) == 0);

  edit_json(dir / "config.json", [](json& j) { j["colour"] = "blue"; });
  CHECK(run({"ingest", "--config", cfg}, &err) == 2);
  CHECK(err.find("colour") != std::string::npos);
}

TEST_CASE("config errors") {
  const auto dir = fresh("config");
  const auto cfg = (dir / "config.json").string();
  edit_json(dir / "config.json", [](json& j) { j["external_reports"][0]["goal"] = "flexibility"; });
  CHECK(run({"ingest", "--config", cfg}) == 2);
  edit_json(dir / "config.json", [](json& j) {
    j["external_reports"][0]["goal"] = "diversity";
    j["rbo"]["p"] = 1.0;
  });
  CHECK(run({"ingest", "--config", cfg}) == 2);
  edit_json(dir / "config.json", [](json& j) {
    j["rbo"]["p"] = 0.9;
    j["keywords"] = {{"n_min", 3}, {"n_max", 2}};
  });
  CHECK(run({"ingest", "--config", cfg}) == 2);
  edit_json(dir / "config.json", [](json& j) {
    j.erase("keywords");
    j["score_variant"] = "cubic";
  });
  CHECK(run({"ingest", "--config", cfg}) == 2);
}

TEST_CASE("artifacts from a different configuration are refused") {
  const auto dir = fresh("stale");
  const auto cfg = (dir / "config.json").string();
  REQUIRE(run({"ingest", "--config", cfg}) == 0);
  REQUIRE(run({"score", "--config", cfg}) == 0);
  std::string err;
  CHECK(run({"consolidate", "--config", cfg, "--seed", "9"}, &err) == 1);
  CHECK(err.find("rerun score") != std::string::npos);
  CHECK(run({"consolidate", "--config", cfg}) == 0);
}

TEST_CASE("run writes manifests and golden headers") {
  const auto dir = fresh("run");
  REQUIRE(run({"run", "--config", (dir / "config.json").string()}) == 0);
  const auto out = dir / "out";
  const auto golden = json::parse(ise::read_file(fs::path(ISE_GOLDEN_DIR) / "artifact_headers.json"));
  for (const auto& [file, header] : golden.items()) {
    CAPTURE(file);
    REQUIRE(fs::exists(out / file));
    CHECK(csv_header(out / file) == header.get<std::vector<std::string>>());
    const auto first = ise::read_file(out / file).substr(0, 15);
    CHECK(first == "# config_hash: ");
  }
  for (const char* cmd : {"ingest", "score", "consolidate", "aggregate", "keywords", "pca", "regress", "stocks",
                          "validate", "report"}) {
    CAPTURE(cmd);
    const auto m = json::parse(ise::read_file(out / (std::string("manifest.") + cmd + ".json")));
    CHECK(m["command"] == cmd);
    CHECK(m["config_hash"].get<std::string>().size() == 64);
    CHECK(m.contains("wall_time_seconds"));
    CHECK(!m["outputs"].empty());
    for (const auto& [name, digest] : m["outputs"].items()) {
      CHECK(digest == ise::pipeline::sha256_hex(ise::read_file(out / name)));
    }
  }
  CHECK_FALSE(fs::exists(out / "manifest.stub-embed.json"));

  const auto ingest = json::parse(ise::read_file(out / "manifest.ingest.json"));
  CHECK(ingest["warnings"].size() == 1);
  CHECK(ingest["inputs"].contains("reviews.jsonl"));
  const auto kw = json::parse(ise::read_file(out / "manifest.keywords.json"));
  CHECK(kw["parameters"]["stopwords"] == "en-nltk-2024-alnum");
  const auto stocks = json::parse(ise::read_file(out / "manifest.stocks.json"));
  CHECK(stocks["warnings"].size() == 2);

  const auto validation = json::parse(ise::read_file(out / "validation_report.json"));
  CHECK(validation["rbo"]["p"] == 0.9);
  CHECK(validation["comparisons"].size() == 4);
  const auto regress = json::parse(ise::read_file(out / "regress.json"));
  CHECK(regress["targets"].size() == 5);
}

TEST_CASE("stub embeddings drive scoring when no embeddings are configured") {
  const auto dir = fresh("stub");
  edit_json(dir / "config.json", [](json& j) {
    j.erase("embeddings");
    j["stub_dim"] = 16;
  });
  const auto cfg = (dir / "config.json").string();
  REQUIRE(run({"ingest", "--config", cfg}) == 0);
  std::string err;
  CHECK(run({"score", "--config", cfg}, &err) == 1);
  CHECK(err.find("stub-embed") != std::string::npos);
  REQUIRE(run({"stub-embed", "--config", cfg}) == 0);
  CHECK(run({"score", "--config", cfg}) == 0);
  const auto m = json::parse(ise::read_file(dir / "out" / "manifest.score.json"));
  CHECK(m["inputs"].contains("embeddings.emb1"));
}

TEST_CASE("config hash ignores output directory and threads but tracks the seed") {
  const auto dir = fresh("hash");
  const auto path = dir / "config.json";
  const auto a = ise::pipeline::load_config(path);
  ise::pipeline::Overrides o;
  o.out_dir = dir / "elsewhere";
  o.threads = 3;
  CHECK(ise::pipeline::load_config(path, o).config_hash == a.config_hash);
  o.seed = 1234;
  CHECK(ise::pipeline::load_config(path, o).config_hash != a.config_hash);
}

TEST_CASE("sha256 known answer") {
  CHECK(ise::pipeline::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
