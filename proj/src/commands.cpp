#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ise/embedding.hpp"
#include "ise/error.hpp"
#include "ise/io.hpp"
#include "ise/kernels.hpp"
#include "ise/lexical.hpp"
#include "ise/pipeline.hpp"

namespace ise::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr std::string_view kHashPrefix = "# config_hash: ";

ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }
ojson num(const std::optional<double>& v) { return v ? num(*v) : ojson(nullptr); }
std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

class CsvWriter {
 public:
  CsvWriter(const std::string& config_hash, const std::vector<std::string>& header) {
    out_ << kHashPrefix << config_hash << '\n';
    write_csv_row(out_, header);
  }
  void row(const std::vector<std::string>& fields) {
    write_csv_row(out_, fields);
    ++rows_;
  }
  std::string str() const { return out_.str(); }
  std::size_t rows() const { return rows_; }

 private:
  std::ostringstream out_;
  std::size_t rows_ = 0;
};

// Collects one command's inputs and outputs; nothing touches the output
// directory until commit().
class Stage {
 public:
  Stage(const PipelineConfig& cfg, std::string command)
      : cfg_(cfg), command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

  const PipelineConfig& cfg() const { return cfg_; }
  const std::string& hash() const { return cfg_.config_hash; }

  std::string read_input(const fs::path& p) {
    std::string bytes = read_file(p);
    inputs_[p.filename().string()] = sha256_hex(bytes);
    return bytes;
  }

  std::string read_artifact(const std::string& name, const std::string& producer) {
    const auto p = cfg_.out_dir / name;
    if (!fs::is_regular_file(p)) {
      throw DataError(name + " not found in " + cfg_.out_dir.string() + ": run " + producer + " first");
    }
    return read_input(p);
  }

  CsvTable read_csv_artifact(const std::string& name, const std::string& producer) {
    std::string bytes = read_artifact(name, producer);
    check_hash(name, producer, first_line_hash(bytes));
    std::istringstream in(bytes);
    return CsvTable::parse(in, cfg_.out_dir / name);
  }

  json read_json_artifact(const std::string& name, const std::string& producer) {
    json j;
    try {
      j = json::parse(read_artifact(name, producer));
    } catch (const json::exception& e) {
      throw DataError(name + ": " + e.what());
    }
    check_hash(name, producer, j.value("config_hash", std::string()));
    return j;
  }

  std::vector<corpus::Review> read_corpus() {
    std::istringstream in(read_artifact("corpus.jsonl", "ingest"));
    return corpus::parse_reviews_jsonl(in, /*strict=*/true).reviews;
  }

  void emit(const std::string& name, std::string bytes, std::optional<std::size_t> rows = std::nullopt) {
    if (rows) rows_[name] = *rows;
    outputs_.emplace_back(name, std::move(bytes));
  }
  void emit(const std::string& name, const CsvWriter& w) { emit(name, w.str(), w.rows()); }
  void emit_json(const std::string& name, ojson j) {
    ojson full;
    full["config_hash"] = hash();
    for (auto& [k, v] : j.items()) full[k] = std::move(v);
    emit(name, full.dump(2) + "\n");
  }

  void warn(const std::string& message, std::ostream& log) {
    log << "warning: " << message << '\n';
    warnings_.push_back(message);
  }
  void set_parameter(const std::string& key, ojson value) { parameters_[key] = std::move(value); }

  void commit(std::ostream& log) {
    fs::create_directories(cfg_.out_dir);
    ojson outputs = ojson::object();
    for (const auto& [name, bytes] : outputs_) {
      write_file_atomic(cfg_.out_dir / name, bytes);
      outputs[name] = sha256_hex(bytes);
    }
    ojson inputs = ojson::object();
    for (const auto& [name, digest] : inputs_) inputs[name] = digest;
    ojson rows = ojson::object();
    for (const auto& [name, n] : rows_) rows[name] = n;
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start_;
    ojson m;
    m["command"] = command_;
    m["version"] = std::string(kVersion);
    m["config_hash"] = hash();
    m["config"] = ojson::parse(cfg_.canonical.dump());
    m["parameters"] = parameters_;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["row_counts"] = rows;
    m["warnings"] = warnings_;
    m["wall_time_seconds"] = wall.count();
    write_file_atomic(cfg_.out_dir / ("manifest." + command_ + ".json"), m.dump(2) + "\n");
    log << command_ << ": wrote " << outputs_.size() << " artifact(s) to " << cfg_.out_dir.string() << '\n';
  }

 private:
  static std::string first_line_hash(const std::string& bytes) {
    const auto end = bytes.find('\n');
    std::string_view line(bytes.data(), end == std::string::npos ? bytes.size() : end);
    if (line.substr(0, kHashPrefix.size()) != kHashPrefix) return {};
    return std::string(line.substr(kHashPrefix.size()));
  }

  void check_hash(const std::string& name, const std::string& producer, const std::string& found) const {
    if (found != hash()) {
      throw DataError(name + " was produced under config hash '" + found + "', not '" + hash() +
                      "': rerun " + producer);
    }
  }

  const PipelineConfig& cfg_;
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::map<std::string, std::size_t> rows_;
  std::vector<std::string> warnings_;
  ojson parameters_ = ojson::object();
};

// Distinct texts needing a vector: pros then cons sentences in corpus order,
// then goal definitions.
std::vector<std::string> embedding_keys(const std::vector<corpus::Review>& reviews,
                                        const std::vector<scoring::GoalDefinition>& goals) {
  std::vector<std::string> keys;
  std::unordered_set<std::string> seen;
  auto add = [&](const std::string& k) {
    if (seen.insert(k).second) keys.push_back(k);
  };
  for (const auto& r : reviews) {
    for (auto source : {corpus::Source::kPros, corpus::Source::kCons}) {
      for (const auto& s : corpus::review_sentences(r, source)) add(s.text);
    }
  }
  for (const auto& g : goals) add(g.definition);
  return keys;
}

std::vector<scoring::ReviewGoalScore> parse_scores(const CsvTable& t) {
  const auto c_review = t.require_column("review_id");
  const auto c_goal = t.require_column("goal_id");
  const auto c_sim = t.require_column("sim");
  const auto c_sim_t = t.require_column("sim_t");
  const auto c_ord = t.require_column("best_sentence_ordinal");
  std::vector<scoring::ReviewGoalScore> out;
  out.reserve(t.rows().size());
  for (const auto& r : t.rows()) {
    scoring::ReviewGoalScore s;
    s.review_id = r.fields[c_review];
    s.goal_id = r.fields[c_goal];
    s.sim = parse_double(r.fields[c_sim], "sim");
    s.sim_t = parse_double(r.fields[c_sim_t], "sim_t");
    if (!r.fields[c_ord].empty()) s.best_sentence_ordinal = std::stoull(r.fields[c_ord]);
    out.push_back(std::move(s));
  }
  return out;
}

void write_scores(Stage& st, const std::string& name, const std::vector<scoring::ReviewGoalScore>& scores) {
  CsvWriter w(st.hash(), {"review_id", "goal_id", "sim", "sim_t", "best_sentence_ordinal"});
  for (const auto& s : scores) {
    w.row({s.review_id, s.goal_id, format_double(s.sim), format_double(s.sim_t),
           s.best_sentence_ordinal ? std::to_string(*s.best_sentence_ordinal) : ""});
  }
  st.emit(name, w);
}

// company_id -> column -> value, for a CSV keyed by company_id.
struct CompanyTable {
  std::vector<std::string> companies;
  std::map<std::string, std::map<std::string, std::optional<double>>> values;

  std::optional<double> get(const std::string& company, const std::string& column) const {
    auto it = values.find(company);
    if (it == values.end()) return std::nullopt;
    auto jt = it->second.find(column);
    return jt == it->second.end() ? std::nullopt : jt->second;
  }
  double require(const std::string& company, const std::string& column) const {
    auto v = get(company, column);
    if (!v) throw DataError("missing " + column + " for company " + company);
    return *v;
  }
};

CompanyTable company_table(const CsvTable& t, const std::vector<std::string>& columns) {
  CompanyTable out;
  const auto c_id = t.require_column("company_id");
  std::vector<std::size_t> idx;
  for (const auto& c : columns) idx.push_back(t.require_column(c));
  for (const auto& r : t.rows()) {
    const auto& id = r.fields[c_id];
    out.companies.push_back(id);
    auto& row = out.values[id];
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const auto& f = r.fields[idx[i]];
      row[columns[i]] = f.empty() ? std::nullopt : std::optional<double>(parse_double(f, columns[i]));
    }
  }
  return out;
}

std::map<std::string, std::string> read_two_column_map(Stage& st, const fs::path& p, const std::string& key,
                                                       const std::string& value) {
  std::istringstream in(st.read_input(p));
  auto t = CsvTable::parse(in, p);
  const auto ck = t.require_column(key);
  const auto cv = t.require_column(value);
  std::map<std::string, std::string> out;
  for (const auto& r : t.rows()) {
    if (!out.emplace(r.fields[ck], r.fields[cv]).second) {
      throw DataError(p.string() + ":" + std::to_string(r.line) + ": duplicate " + key + " '" + r.fields[ck] + "'");
    }
  }
  return out;
}

constexpr const char* kFacetNames[] = {"pc1_staff_welfare", "pc2_financial_benefits"};

// ---------------------------------------------------------------------------

void cmd_ingest(Stage& st, std::ostream& log) {
  const auto& cfg = st.cfg();
  std::istringstream in(st.read_input(cfg.reviews));
  auto parsed = cfg.reviews_format == corpus::Format::kJsonl ? corpus::parse_reviews_jsonl(in, cfg.strict)
                                                             : corpus::parse_reviews_csv(in, cfg.strict);
  auto kept = corpus::filter_companies(parsed.reviews, cfg.filter);
  if (!parsed.rejects.empty()) {
    st.warn(std::to_string(parsed.rejects.size()) + " record(s) rejected; see rejects.csv", log);
  }

  std::ostringstream corpus_out;
  corpus::write_reviews_jsonl(corpus_out, kept);
  st.emit("corpus.jsonl", corpus_out.str(), kept.size());

  CsvWriter rejects(st.hash(), {"line", "reason"});
  for (const auto& r : parsed.rejects) rejects.row({std::to_string(r.line), r.reason});
  st.emit("rejects.csv", rejects);

  auto moments = [](const corpus::Moments& m) {
    return ojson{{"n", m.n}, {"mean", num(m.mean)}, {"std", num(m.stddev)}};
  };
  auto ratings_json = [&](const std::array<corpus::Moments, corpus::kRatingCount>& r) {
    ojson o;
    for (std::size_t i = 0; i < corpus::kRatingCount; ++i) o[std::string(corpus::kRatingNames[i])] = moments(r[i]);
    return o;
  };
  const auto stats = corpus::corpus_stats(kept);
  std::set<std::string> all_companies;
  for (const auto& r : parsed.reviews) all_companies.insert(r.company_id);
  ojson dropped = ojson::array();
  for (const auto& c : all_companies) {
    if (!stats.companies.contains(c)) dropped.push_back(c);
  }
  ojson companies = ojson::object();
  for (const auto& [id, c] : stats.companies) {
    companies[id] = {{"reviews", c.reviews}, {"states", c.states}, {"ratings", ratings_json(c.ratings)}};
  }
  ojson states = ojson::object();
  for (const auto& [code, n] : stats.states) states[code] = n;
  st.emit_json("corpus_stats.json",
               {{"parsed_reviews", parsed.reviews.size()},
                {"rejected_records", parsed.rejects.size()},
                {"filter", {{"min_reviews", cfg.filter.min_reviews}, {"min_states", cfg.filter.min_states}}},
                {"retained_reviews", stats.total_reviews},
                {"retained_companies", stats.companies.size()},
                {"distinct_states", stats.states.size()},
                {"reviews_without_state", stats.reviews_without_state},
                {"dropped_companies", dropped},
                {"ratings", ratings_json(stats.ratings)},
                {"companies", companies},
                {"states", states}});

  const auto keys = embedding_keys(kept, cfg.goals.selected());
  std::string lines;
  for (const auto& k : keys) lines += k + '\n';
  st.emit("sentences.txt", std::move(lines), keys.size());
}

void cmd_stub_embed(Stage& st, std::ostream&) {
  const auto& cfg = st.cfg();
  const auto reviews = st.read_corpus();
  const auto keys = embedding_keys(reviews, cfg.goals.selected());
  const auto vectors = kernels::stub_embed_all(keys, cfg.stub_dim, cfg.seed);
  embedding::EmbeddingStore store(cfg.stub_dim);
  for (std::size_t i = 0; i < keys.size(); ++i) store.add(keys[i], vectors[i]);
  std::ostringstream out;
  embedding::write_embeddings(store, out);
  st.set_parameter("dim", cfg.stub_dim);
  st.set_parameter("seed", cfg.seed);
  st.emit("embeddings.emb1", out.str(), store.size());
}

embedding::EmbeddingStore load_store(Stage& st) {
  const auto& cfg = st.cfg();
  std::istringstream in(cfg.embeddings ? st.read_input(*cfg.embeddings)
                                       : st.read_artifact("embeddings.emb1", "stub-embed"));
  return embedding::read_embeddings(in);
}

void cmd_score(Stage& st, std::ostream&) {
  const auto& cfg = st.cfg();
  const auto reviews = st.read_corpus();
  const auto store = load_store(st);
  const auto goals = cfg.goals.selected();
  const auto& th = cfg.goals.threshold;
  const auto run = scoring::score_corpus(reviews, goals, store, th, corpus::Source::kPros);
  write_scores(st, "scores.csv", run.scores);

  ojson cutoffs = ojson::object();
  for (const auto& [g, c] : run.cutoffs) cutoffs[g] = num(c);
  st.emit_json("cutoffs.json", {{"source", "pros"},
                                {"population", "review_max_sim"},
                                {"percentile", th.percentile},
                                {"fixed_threshold_configured", th.fixed_threshold},
                                {"derive", th.derive},
                                {"fixed_threshold_applied", run.fixed_threshold},
                                {"derived_threshold", num(run.derived_threshold)},
                                {"cutoffs", cutoffs}});

  std::unordered_map<std::string, const corpus::Review*> by_id;
  for (const auto& r : reviews) by_id[r.review_id] = &r;
  std::map<std::pair<std::string, std::string>, std::optional<std::size_t>> ordinal;
  for (const auto& s : run.scores) ordinal[{s.review_id, s.goal_id}] = s.best_sentence_ordinal;
  CsvWriter top(st.hash(), {"goal_id", "rank", "review_id", "sim", "sentence"});
  for (const auto& g : goals) {
    if (reviews.empty()) break;
    std::size_t rank = 0;
    for (const auto& [rid, sim] : scoring::top_k_reviews(run.scores, g.goal_id, cfg.top_k_reviews)) {
      std::string sentence;
      if (auto o = ordinal.at({rid, g.goal_id})) {
        sentence = corpus::review_sentences(*by_id.at(rid), corpus::Source::kPros).at(*o).text;
      }
      top.row({g.goal_id, std::to_string(++rank), rid, format_double(sim), sentence});
    }
  }
  st.emit("top_reviews.csv", top);

  std::vector<std::string> ids;
  for (const auto& g : goals) ids.push_back(g.goal_id);
  const auto overlap = scoring::overlap_matrix(run.scores, ids);
  std::vector<std::string> header{"goal_id"};
  header.insert(header.end(), ids.begin(), ids.end());
  CsvWriter ov(st.hash(), header);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    std::vector<std::string> row{ids[j]};
    for (const auto& v : overlap[j]) row.push_back(cell(v));
    ov.row(row);
  }
  st.emit("overlap.csv", ov);

  CsvWriter pc(st.hash(), {"goal_id", "avg_sim_pros", "avg_sim_cons", "prop_relevant_pros", "prop_relevant_cons"});
  for (const auto& r : scoring::pros_cons_report(reviews, goals, store, th)) {
    pc.row({r.goal_id, cell(r.avg_sim_pros), cell(r.avg_sim_cons), cell(r.prop_relevant_pros),
            cell(r.prop_relevant_cons)});
  }
  st.emit("pros_cons.csv", pc);
}

void cmd_consolidate(Stage& st, std::ostream&) {
  const auto& cfg = st.cfg();
  const auto scores = parse_scores(st.read_csv_artifact("scores.csv", "score"));
  std::vector<std::string> ids;
  for (const auto& g : cfg.goals.selected()) ids.push_back(g.goal_id);
  ojson merges = ojson::array();
  for (const auto& m : cfg.goals.merges) merges.push_back({{"from", m.from}, {"into", m.into}});
  st.set_parameter("merges", merges);
  write_scores(st, "consolidated_scores.csv", scoring::consolidate(scores, cfg.goals.merges, ids));
}

void cmd_aggregate(Stage& st, std::ostream&) {
  const auto& cfg = st.cfg();
  const auto reviews = st.read_corpus();
  const auto scores = parse_scores(st.read_csv_artifact("consolidated_scores.csv", "consolidate"));
  const auto ids = cfg.goals.surviving_ids();
  const auto companies = scoring::aggregate_companies(reviews, scores, ids, cfg.variant);
  st.set_parameter("score_variant", std::string(scoring::to_string(cfg.variant)));

  std::vector<std::string> header{"company_id"};
  header.insert(header.end(), ids.begin(), ids.end());
  auto score_header = header;
  score_header.push_back("n_reviews");
  CsvWriter sw(st.hash(), score_header);
  CsvWriter rw(st.hash(), header);
  for (const auto& c : companies) {
    std::vector<std::string> srow{c.company_id};
    std::vector<std::string> rrow{c.company_id};
    for (const auto& g : ids) {
      srow.push_back(format_double(c.scores.at(g)));
      rrow.push_back(std::to_string(c.n_relevant.at(g)));
    }
    srow.push_back(std::to_string(c.n_reviews));
    sw.row(srow);
    rw.row(rrow);
  }
  st.emit("company_scores.csv", sw);
  st.emit("company_relevant.csv", rw);

  std::vector<std::string> rheader{"company_id"};
  for (auto n : corpus::kRatingNames) rheader.emplace_back(n);
  rheader.push_back("total_reviews");
  rheader.push_back("log_total_reviews");
  CsvWriter ratings(st.hash(), rheader);
  const auto stats = corpus::corpus_stats(reviews);
  for (const auto& [id, c] : stats.companies) {
    std::vector<std::string> row{id};
    for (const auto& m : c.ratings) row.push_back(cell(m.mean));
    row.push_back(std::to_string(c.reviews));
    row.push_back(format_double(std::log(static_cast<double>(c.reviews))));
    ratings.row(row);
  }
  st.emit("ratings.csv", ratings);
}

void cmd_keywords(Stage& st, std::ostream& log) {
  const auto& cfg = st.cfg();
  const auto reviews = st.read_corpus();
  const auto scores = parse_scores(st.read_csv_artifact("consolidated_scores.csv", "consolidate"));
  const auto ids = cfg.goals.surviving_ids();
  std::unordered_map<std::string, const corpus::Review*> by_id;
  for (const auto& r : reviews) by_id[r.review_id] = &r;

  std::map<std::string, std::vector<std::string>> sentences;
  for (const auto& s : scores) {
    if (!(s.sim_t > 0.0) || !s.best_sentence_ordinal) continue;
    auto it = by_id.find(s.review_id);
    if (it == by_id.end()) throw DataError("scored review " + s.review_id + " is not in the corpus");
    sentences[s.goal_id].push_back(
        corpus::review_sentences(*it->second, corpus::Source::kPros).at(*s.best_sentence_ordinal).text);
  }
  std::vector<lexical::IseDocument> docs;
  for (const auto& g : ids) {
    if (!sentences.contains(g)) st.warn("goal " + g + " has no relevant reviews; its document is empty", log);
    docs.push_back(lexical::make_document(g, sentences[g]));
  }
  const auto scored = lexical::tfidf(docs, cfg.ngram_min, cfg.ngram_max);
  st.set_parameter("stopwords", std::string(lexical::kStopwordListVersion));
  st.set_parameter("ngram_range", ojson::array({cfg.ngram_min, cfg.ngram_max}));

  CsvWriter kw(st.hash(), {"ngram", "goal_id", "tfidf", "tfidf_normalized"});
  for (const auto& k : scored) kw.row({k.ngram, k.goal_id, format_double(k.tfidf), format_double(k.tfidf_normalized)});
  st.emit("keywords.csv", kw);

  const auto heat = lexical::keyword_heatmap(scored, ids, cfg.keyword_top_k);
  std::vector<std::string> header{"ngram"};
  header.insert(header.end(), ids.begin(), ids.end());
  CsvWriter hw(st.hash(), header);
  for (std::size_t i = 0; i < heat.ngrams.size(); ++i) {
    std::vector<std::string> row{heat.ngrams[i]};
    for (double v : heat.normalized[i]) row.push_back(format_double(v));
    hw.row(row);
  }
  st.emit("heatmap.csv", hw);
}

void cmd_pca(Stage& st, std::ostream&) {
  const auto& cfg = st.cfg();
  const auto ids = cfg.goals.surviving_ids();
  const auto table = company_table(st.read_csv_artifact("company_scores.csv", "aggregate"), ids);
  const auto& companies = table.companies;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(companies.size()), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < companies.size(); ++i) {
    for (std::size_t j = 0; j < ids.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.require(companies[i], ids[j]);
    }
  }
  const auto res = stats::pca(x, 2, cfg.pca_mode);

  ojson loadings = ojson::object();
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    loadings[ids[j]] = {res.loadings(r, 0), res.loadings(r, 1)};
  }
  ojson scores = ojson::object();
  for (std::size_t i = 0; i < companies.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    scores[companies[i]] = {res.scores(r, 0), res.scores(r, 1)};
  }
  auto vec = [](const Eigen::VectorXd& v) {
    ojson a = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  st.emit_json("pca.json", {{"mode", std::string(stats::to_string(res.mode))},
                            {"components", {"PC1", "PC2"}},
                            {"facets", {kFacetNames[0], kFacetNames[1]}},
                            {"goals", ids},
                            {"n_companies", companies.size()},
                            {"eigenvalues", vec(res.eigenvalues)},
                            {"explained_variance_ratio", vec(res.explained_variance_ratio)},
                            {"sign_flipped", res.sign_flipped},
                            {"column_means", vec(res.column_means)},
                            {"column_scales", vec(res.column_scales)},
                            {"loadings", loadings},
                            {"scores", scores}});

  CsvWriter facets(st.hash(), {"company_id", kFacetNames[0], kFacetNames[1]});
  std::vector<stats::FacetScores> facet_rows;
  for (std::size_t i = 0; i < companies.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    facet_rows.push_back({companies[i], res.scores(r, 0), res.scores(r, 1)});
    facets.row({companies[i], format_double(res.scores(r, 0)), format_double(res.scores(r, 1))});
  }
  st.emit("facets.csv", facets);

  std::vector<stats::NamedColumn> goal_cols;
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const Eigen::VectorXd c = x.col(static_cast<Eigen::Index>(j));
    goal_cols.push_back({ids[j], std::vector<double>(c.data(), c.data() + c.size())});
  }
  std::vector<stats::NamedColumn> pcs;
  for (Eigen::Index c = 0; c < 2; ++c) {
    const Eigen::VectorXd s = res.scores.col(c);
    pcs.push_back({c == 0 ? "PC1" : "PC2", std::vector<double>(s.data(), s.data() + s.size())});
  }
  const auto corr = stats::pearson_table(goal_cols, pcs);
  CsvWriter pt(st.hash(), {"goal_id", "PC1", "PC2"});
  for (std::size_t j = 0; j < ids.size(); ++j) {
    std::vector<std::string> row{ids[j]};
    for (const auto& c : corr.cells[j]) row.push_back(c ? format_double(c->r) : "");
    pt.row(row);
  }
  st.emit("pca_table.csv", pt);

  if (cfg.sectors) {
    const auto sectors = read_two_column_map(st, *cfg.sectors, "company_id", "sector");
    CsvWriter sw(st.hash(), {"sector", "facet", "n", "mean", "std", "min", "q1", "median", "q3", "max"});
    for (const auto& s : stats::sector_facet_summary(facet_rows, sectors)) {
      const auto& m = s.summary;
      sw.row({s.sector, s.facet, std::to_string(m.n), format_double(m.mean), cell(m.stddev), format_double(m.min),
              format_double(m.q1), format_double(m.median), format_double(m.q3), format_double(m.max)});
    }
    st.emit("sector_summary.csv", sw);
  }
}

std::vector<double> minmax100(std::vector<double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double a = *lo;
  const double span = *hi - *lo;
  if (span == 0.0) return v;
  for (double& x : v) x = 100.0 * (x - a) / span;
  return v;
}

void cmd_regress(Stage& st, std::ostream& log) {
  const auto& cfg = st.cfg();
  const auto ids = cfg.goals.surviving_ids();
  const auto facets =
      company_table(st.read_csv_artifact("facets.csv", "pca"), {kFacetNames[0], kFacetNames[1]});
  std::vector<std::string> rating_cols;
  for (auto n : corpus::kRatingNames) rating_cols.emplace_back(n);
  auto rating_and_total = rating_cols;
  rating_and_total.push_back("log_total_reviews");
  const auto ratings = company_table(st.read_csv_artifact("ratings.csv", "aggregate"), rating_and_total);
  const auto scores = company_table(st.read_csv_artifact("company_scores.csv", "aggregate"), ids);
  const std::vector<std::string> candidates{kFacetNames[0], kFacetNames[1], "log_total_reviews"};

  ojson targets = ojson::object();
  for (const auto& target : rating_cols) {
    std::vector<double> y;
    std::vector<stats::NamedColumn> x;
    for (const auto& c : candidates) x.push_back({c, {}});
    std::size_t skipped = 0;
    for (const auto& company : facets.companies) {
      const auto v = ratings.get(company, target);
      if (!v) {
        ++skipped;
        continue;
      }
      y.push_back(*v);
      x[0].values.push_back(facets.require(company, kFacetNames[0]));
      x[1].values.push_back(facets.require(company, kFacetNames[1]));
      x[2].values.push_back(ratings.require(company, "log_total_reviews"));
    }
    if (skipped) st.warn(target + ": " + std::to_string(skipped) + " compan(ies) without this rating left out", log);
    if (cfg.regress_minmax_scale) {
      y = minmax100(std::move(y));
      for (auto& c : x) c.values = minmax100(std::move(c.values));
    }
    const auto step = stats::step_aic(y, x, cfg.step_direction);
    const auto& m = step.model;
    ojson path = ojson::array();
    for (const auto& p : step.path) {
      path.push_back({{"action", p.action}, {"term", p.term}, {"aic", num(p.aic)}, {"terms", p.terms}});
    }
    auto arr = [](const std::vector<double>& v) {
      ojson a = ojson::array();
      for (double d : v) a.push_back(num(d));
      return a;
    };
    const std::size_t df_model = m.terms.size() - (m.has_intercept ? 1 : 0);
    targets[target] = {{"n_obs", m.n_obs},
                       {"path", path},
                       {"terms", m.terms},
                       {"coefficients", arr(m.coefficients)},
                       {"std_errors", arr(m.std_errors)},
                       {"t_stats", arr(m.t_stats)},
                       {"p_values", arr(m.p_values)},
                       {"r2", num(m.r2)},
                       {"adj_r2", num(m.adj_r2)},
                       {"f_stat", num(m.f_stat)},
                       {"f_p_value", num(m.f_p_value)},
                       {"f_df", {df_model, m.df_resid}},
                       {"residual_std_error", num(m.residual_std_error)},
                       {"df_resid", m.df_resid},
                       {"rss", num(m.rss)},
                       {"aic", num(m.aic)}};
  }
  st.emit_json("regress.json", {{"direction", std::string(stats::to_string(cfg.step_direction))},
                                {"scale", cfg.regress_minmax_scale ? "minmax100" : "none"},
                                {"aic", "n*ln(RSS/n) + 2k, k = fitted coefficients"},
                                {"candidates", candidates},
                                {"targets", targets}});

  std::vector<stats::NamedColumn> rows;
  auto column_for = [&](const CompanyTable& t, const std::string& name) {
    stats::NamedColumn c{name, {}};
    for (const auto& company : scores.companies) {
      c.values.push_back(t.get(company, name).value_or(std::nan("")));
    }
    return c;
  };
  for (const auto& g : ids) rows.push_back(column_for(scores, g));
  rows.push_back(column_for(ratings, "log_total_reviews"));
  std::vector<stats::NamedColumn> cols;
  for (const auto& r : rating_cols) cols.push_back(column_for(ratings, r));
  const auto corr = stats::pearson_table(rows, cols);
  for (const auto& u : corr.undefined) st.warn("correlation undefined for " + u, log);

  std::vector<std::string> header{"variable"};
  header.insert(header.end(), rating_cols.begin(), rating_cols.end());
  CsvWriter rw(st.hash(), header);
  CsvWriter pw(st.hash(), header);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::string> r{rows[i].name};
    std::vector<std::string> p{rows[i].name};
    for (const auto& c : corr.cells[i]) {
      r.push_back(c ? format_double(c->r) : "");
      p.push_back(c ? format_double(c->p_value) : "");
    }
    rw.row(r);
    pw.row(p);
  }
  st.emit("correlations.csv", rw);
  st.emit("correlations_pvalues.csv", pw);
}

void cmd_stocks(Stage& st, std::ostream& log) {
  const auto& cfg = st.cfg();
  if (!cfg.stocks) throw ConfigError("stocks: no stocks file configured");
  const auto facets =
      company_table(st.read_csv_artifact("facets.csv", "pca"), {kFacetNames[0], kFacetNames[1]});
  std::map<std::string, double> growth;
  for (const auto& [company, v] : read_two_column_map(st, cfg.stocks->path, "company_id", "growth")) {
    growth[company] = parse_double(v, "growth");
  }
  CsvWriter w(st.hash(), {"facet", "bin", "n_companies", "geometric_mean", "companies"});
  for (const auto* facet : kFacetNames) {
    std::map<std::string, double> by_company;
    for (const auto& c : facets.companies) by_company[c] = facets.require(c, facet);
    std::vector<std::string> ranked;
    for (const auto& [c, v] : stats::rank_entities(by_company)) ranked.push_back(c);
    const auto bins = stats::stock_growth_bins(ranked, growth, cfg.stocks->bins);
    if (!bins.excluded.empty()) {
      std::string names;
      for (const auto& e : bins.excluded) names += (names.empty() ? "" : ", ") + e;
      st.warn(std::string(facet) + ": no growth data for " + names + " (excluded)", log);
    }
    for (const auto& b : bins.bins) {
      std::string names;
      for (const auto& c : b.companies) names += (names.empty() ? "" : ";") + c;
      w.row({facet, std::to_string(b.bin), std::to_string(b.companies.size()), format_double(b.geometric_mean),
             names});
    }
  }
  st.set_parameter("bins", cfg.stocks->bins);
  st.emit("stock_bins.csv", w);
}

void cmd_validate(Stage& st, std::ostream&) {
  const auto& cfg = st.cfg();
  const auto ids = cfg.goals.surviving_ids();
  const auto scores = company_table(st.read_csv_artifact("company_scores.csv", "aggregate"), ids);
  auto internal_for = [&](const std::string& goal) {
    std::vector<validation::RankedEntity> out;
    for (const auto& c : scores.companies) out.push_back({c, scores.require(c, goal)});
    return out;
  };
  ojson comparisons = ojson::array();
  auto record = [&](const std::string& report_id, const std::string& goal, const std::string& basis,
                    const std::vector<validation::RankedEntity>& external) {
    const auto internal = internal_for(goal);
    const auto rep = validation::compare_rankings(internal, external, cfg.rbo);
    ojson spearman = nullptr;
    if (rep.spearman_on_common) {
      spearman = {{"rho", num(rep.spearman_on_common->rho)}, {"p_value", num(rep.spearman_on_common->p_value)}};
    }
    comparisons.push_back({{"report_id", report_id},
                           {"goal_id", goal},
                           {"basis", basis},
                           {"n_internal", internal.size()},
                           {"n_external", external.size()},
                           {"n_common", rep.n_common},
                           {"rbo", num(rep.rbo)},
                           {"rbo_baseline", num(rep.rbo_baseline)},
                           {"spearman_on_common", spearman}});
  };
  for (const auto& spec : cfg.external_reports) {
    st.read_input(spec.path);
    const auto report = validation::load_external_ranking(spec.path);
    if (!report.metric_map.empty()) {
      for (const auto& [metric, goals] : report.metric_map) {
        for (const auto& g : goals) {
          if (std::find(ids.begin(), ids.end(), g) == ids.end()) {
            throw ConfigError("report " + report.report_id + ": metric '" + metric + "' maps to unknown goal '" + g + "'");
          }
        }
      }
      const auto fr = validation::external_goal_scores(report);
      for (const auto& g : ids) {
        auto it = fr.find(g);
        if (it == fr.end()) continue;
        std::vector<validation::RankedEntity> external;
        for (const auto& [entity, v] : it->second) external.push_back({entity, v});
        record(report.report_id, g, "mapped_metrics", external);
      }
    } else {
      if (!spec.goal) throw ConfigError("report " + report.report_id + " has no metric map and no goal");
      record(report.report_id, *spec.goal, "rank", validation::entries_as_scores(report));
    }
  }
  st.emit_json("validation_report.json", {{"rbo", {{"p", cfg.rbo.persistence_p},
                                                   {"mode", std::string(validation::to_string(cfg.rbo.mode))},
                                                   {"baseline_runs", cfg.rbo.baseline_runs},
                                                   {"seed", cfg.rbo.seed},
                                                   {"baseline_universe", "internal companies"}}},
                                           {"comparisons", comparisons}});
}

// Typed copy of a CSV artifact: numbers where cells parse, null for blanks.
ojson csv_as_json(const CsvTable& t) {
  ojson rows = ojson::array();
  for (const auto& r : t.rows()) {
    ojson row = ojson::array();
    for (const auto& f : r.fields) {
      if (f.empty()) {
        row.push_back(nullptr);
        continue;
      }
      try {
        row.push_back(parse_double(f, "cell"));
      } catch (const DataError&) {
        row.push_back(f);
      }
    }
    rows.push_back(std::move(row));
  }
  return {{"columns", t.header()}, {"rows", rows}};
}

void cmd_report(Stage& st, std::ostream&) {
  const auto& cfg = st.cfg();
  ojson tables;
  auto add_csv = [&](const std::string& key, const std::string& file, const std::string& producer) {
    tables[key] = csv_as_json(st.read_csv_artifact(file, producer));
  };
  auto add_json = [&](const std::string& key, const std::string& file, const std::string& producer) {
    auto j = st.read_json_artifact(file, producer);
    j.erase("config_hash");
    tables[key] = ojson::parse(j.dump());
  };
  add_json("thresholds", "cutoffs.json", "score");
  add_csv("pros_cons", "pros_cons.csv", "score");
  add_csv("goal_overlap", "overlap.csv", "score");
  add_csv("top_reviews", "top_reviews.csv", "score");
  add_csv("company_scores", "company_scores.csv", "aggregate");
  add_csv("ratings", "ratings.csv", "aggregate");
  add_csv("keywords_heatmap", "heatmap.csv", "keywords");
  add_csv("pca_cross_correlation", "pca_table.csv", "pca");
  add_json("pca", "pca.json", "pca");
  add_csv("facets", "facets.csv", "pca");
  if (cfg.sectors) add_csv("sector_summary", "sector_summary.csv", "pca");
  add_csv("ratings_correlation", "correlations.csv", "regress");
  add_csv("ratings_correlation_pvalues", "correlations_pvalues.csv", "regress");
  add_json("regression", "regress.json", "regress");
  if (cfg.stocks) add_csv("stock_bins", "stock_bins.csv", "stocks");
  if (!cfg.external_reports.empty()) add_json("validation", "validation_report.json", "validate");
  st.emit_json("report.json", {{"version", std::string(kVersion)}, {"tables", tables}});
}

using Handler = void (*)(Stage&, std::ostream&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> h = {
      {"ingest", cmd_ingest},     {"stub-embed", cmd_stub_embed}, {"score", cmd_score},
      {"consolidate", cmd_consolidate}, {"aggregate", cmd_aggregate}, {"keywords", cmd_keywords},
      {"pca", cmd_pca},           {"regress", cmd_regress},       {"stocks", cmd_stocks},
      {"validate", cmd_validate}, {"report", cmd_report}};
  return h;
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, h] : handlers()) n.push_back(name);
    n.push_back("run");
    return n;
  }();
  return names;
}

void run_command(const std::string& command, const PipelineConfig& cfg, std::ostream& log) {
  if (command == "run") {
    for (const auto& [name, h] : handlers()) {
      if (name == "stub-embed" && cfg.embeddings) continue;
      if (name == "stocks" && !cfg.stocks) continue;
      if (name == "validate" && cfg.external_reports.empty()) continue;
      run_command(name, cfg, log);
    }
    return;
  }
  for (const auto& [name, h] : handlers()) {
    if (name == command) {
      Stage st(cfg, command);
      h(st, log);
      st.commit(log);
      return;
    }
  }
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace ise::pipeline
