#include "fashionrag/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <openssl/evp.h>

#include "fashionrag/error.hpp"
#include "fashionrag/text.hpp"
#include "fashionrag/toml_lite.hpp"

namespace fashionrag::app {

namespace {

namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Typed access to one TOML table; every key read is marked so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(std::string name, const toml::Table* table) : name_(std::move(name)), table_(table) {}

  void number(const char* key, double& out) {
    if (const auto* v = find(key)) {
      if (const auto* d = std::get_if<double>(v)) {
        out = *d;
      } else if (const auto* i = std::get_if<std::int64_t>(v)) {
        out = static_cast<double>(*i);
      } else {
        wrong_type(key, "number", *v);
      }
    }
  }

  template <typename Int>
  void integer(const char* key, Int& out) {
    if (const auto* v = find(key)) {
      const auto* i = std::get_if<std::int64_t>(v);
      if (i == nullptr) wrong_type(key, "integer", *v);
      out = static_cast<Int>(*i);
    }
  }

  void string(const char* key, std::string& out) {
    if (const auto* v = find(key)) {
      const auto* s = std::get_if<std::string>(v);
      if (s == nullptr) wrong_type(key, "string", *v);
      out = *s;
    }
  }

  void path(const char* key, fs::path& out, const fs::path& base) {
    std::string s;
    string(key, s);
    if (s.empty()) return;
    fs::path p(s);
    out = p.is_relative() && !base.empty() ? base / p : p;
  }

  void check_unknown() const {
    if (table_ == nullptr) return;
    for (const auto& [key, value] : *table_) {
      if (!seen_.contains(key)) {
        throw Error(ErrorCode::config_error, "unknown key '" + key + "' in [" + name_ + "]");
      }
    }
  }

 private:
  const toml::Value* find(const char* key) {
    if (table_ == nullptr) return nullptr;
    seen_.insert(key);
    const auto it = table_->find(key);
    return it == table_->end() ? nullptr : &it->second;
  }

  [[noreturn]] void wrong_type(const char* key, const char* want, const toml::Value& got) const {
    throw Error(ErrorCode::config_error, "[" + name_ + "] " + key + " must be a " + want + ", got " +
                                             std::string(toml::type_name(got)));
  }

  std::string name_;
  const toml::Table* table_;
  std::set<std::string> seen_;
};

void require_range(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::config_error, what);
}

void require_file(const fs::path& p, const char* what) {
  if (!p.empty() && !fs::exists(p)) {
    throw Error(ErrorCode::config_error, std::string(what) + " not found: " + p.string());
  }
}

std::string path_or_null_string(const fs::path& p) { return p.empty() ? std::string{} : p.string(); }

// Unbiased draw from [0, bound) with plain rejection; independent of the
// standard library's distribution implementations.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

}  // namespace

// ---- config ----

PipelineConfig PipelineConfig::parse(std::string_view text_in, const fs::path& base_dir) {
  const auto doc = toml::parse(text_in);
  static const std::set<std::string> known{"", "detector", "color", "retrieval", "generation", "paths", "eval"};
  for (const auto& [name, table] : doc) {
    if (!known.contains(name)) throw Error(ErrorCode::config_error, "unknown section [" + name + "]");
  }
  if (!doc.at("").empty()) {
    throw Error(ErrorCode::config_error, "key '" + doc.at("").begin()->first + "' outside any section");
  }
  const auto table = [&](const char* name) -> const toml::Table* {
    const auto it = doc.find(name);
    return it == doc.end() ? nullptr : &it->second;
  };

  PipelineConfig cfg;
  Section det("detector", table("detector"));
  det.number("theta_conf", cfg.detector.theta_conf);
  det.number("theta_iou", cfg.detector.theta_iou);
  det.check_unknown();

  Section col("color", table("color"));
  col.integer("k", cfg.color.k);
  col.integer("max_samples", cfg.color.max_samples);
  col.integer("seed", cfg.color.seed);
  col.number("near_white_l", cfg.color.near_white_l);
  col.number("near_black_l", cfg.color.near_black_l);
  col.number("min_coverage", cfg.color.min_coverage);
  col.integer("max_iterations", cfg.color.max_iterations);
  col.number("convergence_shift", cfg.color.convergence_shift);
  col.path("palette", cfg.paths.palette, base_dir);
  col.check_unknown();

  Section ret("retrieval", table("retrieval"));
  ret.integer("top_k", cfg.vote.top_k);
  ret.number("tau", cfg.vote.tau);
  ret.number("theta_attr", cfg.vote.theta_attr);
  ret.integer("snippets", cfg.snippets);
  ret.check_unknown();

  Section gen("generation", table("generation"));
  gen.number("temperature", cfg.generation.temperature);
  gen.integer("max_tokens", cfg.generation.max_tokens);
  gen.string("endpoint", cfg.generation.endpoint);
  gen.string("model", cfg.generation.model);
  std::int64_t timeout_ms = cfg.generation.timeout.count();
  std::int64_t backoff_ms = cfg.generation.backoff_base.count();
  gen.integer("timeout_ms", timeout_ms);
  gen.integer("backoff_ms", backoff_ms);
  cfg.generation.timeout = std::chrono::milliseconds(timeout_ms);
  cfg.generation.backoff_base = std::chrono::milliseconds(backoff_ms);
  gen.integer("retries", cfg.generation.retries);
  gen.integer("max_concurrency", cfg.generation.max_concurrency);
  gen.path("templates", cfg.paths.templates, base_dir);
  gen.check_unknown();

  Section paths("paths", table("paths"));
  paths.path("catalog", cfg.paths.catalog, base_dir);
  paths.path("embeddings", cfg.paths.embeddings, base_dir);
  paths.path("index", cfg.paths.index, base_dir);
  paths.path("queries", cfg.paths.queries, base_dir);
  paths.path("synonyms", cfg.paths.synonyms, base_dir);
  paths.check_unknown();

  Section ev("eval", table("eval"));
  ev.number("coverage_tau", cfg.coverage_tau);
  ev.check_unknown();

  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config_error, "cannot open config file: " + path.string());
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(content, path.parent_path());
}

void PipelineConfig::validate() const {
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  require_range(unit(detector.theta_conf), "detector.theta_conf must be in [0, 1]");
  require_range(unit(detector.theta_iou), "detector.theta_iou must be in [0, 1]");
  require_range(color.k >= 1, "color.k must be >= 1");
  require_range(color.max_samples >= 1, "color.max_samples must be >= 1");
  require_range(color.near_black_l >= 0.0 && color.near_white_l <= 100.0 &&
                    color.near_black_l < color.near_white_l,
                "color whiteness thresholds must satisfy 0 <= near_black_l < near_white_l <= 100");
  require_range(unit(color.min_coverage), "color.min_coverage must be in [0, 1]");
  require_range(color.max_iterations >= 1, "color.max_iterations must be >= 1");
  require_range(color.convergence_shift >= 0.0, "color.convergence_shift must be >= 0");
  require_range(vote.top_k >= 1, "retrieval.top_k must be >= 1");
  require_range(vote.tau > 0.0 && std::isfinite(vote.tau), "retrieval.tau must be > 0");
  require_range(unit(vote.theta_attr), "retrieval.theta_attr must be in [0, 1]");
  require_range(unit(coverage_tau), "eval.coverage_tau must be in [0, 1]");
  generation.validate();
  require_file(paths.catalog, "catalog");
  require_file(paths.embeddings, "embeddings");
  require_file(paths.index, "index");
  require_file(paths.queries, "queries");
  require_file(paths.palette, "palette");
  require_file(paths.synonyms, "synonyms");
  require_file(paths.templates, "templates directory");
}

nlohmann::json PipelineConfig::to_json() const {
  return nlohmann::json{
      {"detector", {{"theta_conf", detector.theta_conf}, {"theta_iou", detector.theta_iou}}},
      {"color",
       {{"k", color.k},
        {"max_samples", color.max_samples},
        {"seed", color.seed},
        {"near_white_l", color.near_white_l},
        {"near_black_l", color.near_black_l},
        {"min_coverage", color.min_coverage}}},
      {"retrieval",
       {{"top_k", vote.top_k}, {"tau", vote.tau}, {"theta_attr", vote.theta_attr}, {"snippets", snippets}}},
      {"generation",
       {{"temperature", generation.temperature},
        {"max_tokens", generation.max_tokens},
        {"model", generation.model},
        {"endpoint_configured", generation.configured()},
        {"retries", generation.retries},
        {"max_concurrency", generation.max_concurrency}}},
      {"paths",
       {{"palette", path_or_null_string(paths.palette)},
        {"synonyms", path_or_null_string(paths.synonyms)},
        {"templates", path_or_null_string(paths.templates)}}},
      {"eval", {{"coverage_tau", coverage_tau}}}};
}

// ---- engine ----

Engine::Engine(PipelineConfig cfg, retrieval::Index index, std::shared_ptr<genkit::ChatTransport> transport)
    : cfg_(std::move(cfg)), index_(std::move(index)) {
  cfg_.validate();
  palette_ = cfg_.paths.palette.empty() ? color::Palette::builtin() : color::Palette::load(cfg_.paths.palette);
  auto tpl = cfg_.paths.templates.empty() ? genkit::PromptTemplate::defaults()
                                          : genkit::PromptTemplate::load_dir(cfg_.paths.templates);
  generator_ = std::make_unique<genkit::Generator>(cfg_.generation, std::move(tpl), std::move(transport));
}

// ---- pipeline ----

nlohmann::json to_json(const RunRecord& record, bool with_timings) {
  const auto bundle = genkit::to_json(record.post);
  nlohmann::json j{{"image_id", record.image_id},
                   {"post",
                    {{"caption", bundle.at("caption")},
                     {"hashtags", bundle.at("hashtags")},
                     {"provenance", bundle.at("provenance")}}},
                   {"evidence", bundle.at("evidence")}};
  if (with_timings) {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [stage, ms] : record.timings_ms) t[stage] = ms;
    j["timings_ms"] = std::move(t);
  }
  return j;
}

RunRecord run_pipeline(const Image& image, const detect::DetectionsEntry& entry,
                       const retrieval::Embedding& query, const Engine& engine, RunLog& log) {
  const auto& cfg = engine.config();
  RunRecord record;
  record.image_id = entry.image_id;
  const auto t_total = Clock::now();

  auto t = Clock::now();
  const auto kept = detect::nms(detect::filter_detections(entry.detections, cfg.detector), cfg.detector.theta_iou);
  record.timings_ms.emplace_back("detect", ms_since(t));

  t = Clock::now();
  std::vector<detect::Detection> colored;
  for (const auto& det : kept) {
    try {
      const auto region = detect::crop(image, det.box);
      auto d = det;
      d.colors = color::dominant_colors(region, cfg.color, engine.palette());
      colored.push_back(std::move(d));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_input) throw;
      log.warn("detection_outside_image", {{"image_id", entry.image_id}, {"class", det.class_name}});
    }
  }
  if (colored.empty()) {
    log.warn("no_detections", {{"image_id", entry.image_id},
                               {"raw", entry.detections.size()},
                               {"theta_conf", cfg.detector.theta_conf}});
  }
  record.timings_ms.emplace_back("color", ms_since(t));

  t = Clock::now();
  const auto neighbors = engine.index().search(query, static_cast<std::size_t>(cfg.vote.top_k));
  auto fabric = retrieval::vote_attribute(neighbors, retrieval::Facet::fabric, cfg.vote);
  auto gender = retrieval::vote_attribute(neighbors, retrieval::Facet::gender, cfg.vote);
  auto snippets = retrieval::sample_snippets(neighbors, cfg.snippets);
  record.timings_ms.emplace_back("retrieval", ms_since(t));

  t = Clock::now();
  const auto pack = genkit::build_evidence_pack(colored, std::move(fabric), std::move(gender), std::move(snippets));
  record.post = engine.generator().generate(pack, log);
  record.timings_ms.emplace_back("generation", ms_since(t));
  record.timings_ms.emplace_back("total", ms_since(t_total));

  log.info("run_complete", {{"image_id", record.image_id},
                            {"provenance", genkit::to_string(record.post.provenance)},
                            {"detections", pack.detections.size()},
                            {"hashtags", record.post.hashtags.size()}});
  return record;
}

RunRecord run_pipeline(const fs::path& image_path, const detect::DetectionsEntry& entry,
                       const retrieval::QueryEmbeddings& queries, const Engine& engine, RunLog& log) {
  const auto image = read_image(image_path);
  return run_pipeline(image, entry, queries.at(entry.image_id), engine, log);
}

detect::DetectionsEntry select_entry(const std::vector<detect::DetectionsEntry>& entries,
                                     const fs::path& image_path, const std::optional<std::string>& image_id) {
  if (image_id) {
    for (const auto& e : entries) {
      if (e.image_id == *image_id) return e;
    }
    throw Error(ErrorCode::parse_error, "no detections entry for image_id '" + *image_id + "'");
  }
  const auto name = image_path.filename();
  const detect::DetectionsEntry* by_name = nullptr;
  for (const auto& e : entries) {
    const fs::path p(e.image_path);
    if (p == image_path || (!e.image_path.empty() && p.lexically_normal() == image_path.lexically_normal())) {
      return e;
    }
    if (by_name == nullptr && p.filename() == name) by_name = &e;
  }
  if (by_name != nullptr) return *by_name;
  if (entries.size() == 1) return entries.front();
  throw Error(ErrorCode::parse_error, "no detections entry matches image " + image_path.string());
}

// ---- split ----

SplitResult split_catalog(const std::vector<retrieval::CatalogRecord>& records, double ratio,
                          std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorCode::degenerate_input, "cannot split an empty catalog");
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::config_error, "split ratio must be in (0, 1)");

  std::map<std::string, std::vector<std::string>> by_category;
  for (const auto& raw : records) {
    const auto r = retrieval::canonicalize(raw);
    if (!r.category) throw Error(ErrorCode::degenerate_input, "record '" + r.id + "' has no category");
    by_category[*r.category].push_back(r.id);
  }

  SplitResult out;
  std::mt19937_64 rng(seed);
  for (auto& [category, ids] : by_category) {
    for (std::size_t i = ids.size(); i > 1; --i) {
      std::swap(ids[i - 1], ids[bounded(rng, i)]);
    }
    const std::size_t n = ids.size();
    if (n == 1) {
      out.train.push_back(ids.front());
      out.flagged.push_back(category);
      continue;
    }
    const auto wanted = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    const std::size_t n_train = std::clamp<std::size_t>(wanted, 1, n - 1);
    out.train.insert(out.train.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  }
  return out;
}

nlohmann::json to_json(const SplitResult& split) {
  return nlohmann::json{{"train", split.train}, {"test", split.test}, {"flagged_categories", split.flagged}};
}

// ---- base64 ----

std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text_in) {
  std::string s;
  for (char c : text_in) {
    if (std::isspace(static_cast<unsigned char>(c)) == 0) s += c;
  }
  while (s.size() % 4 != 0) s += '=';
  if (s.empty()) return std::vector<std::uint8_t>{};
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '+' || c == '/' ||
                    (c == '=' && i + 2 >= s.size());
    if (!ok) return std::nullopt;
  }
  std::vector<std::uint8_t> out(s.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(s.data()),
                                static_cast<int>(s.size()));
  if (n < 0) return std::nullopt;
  std::size_t pad = 0;
  if (s.back() == '=') ++pad;
  if (s.size() >= 2 && s[s.size() - 2] == '=') ++pad;
  if (s.size() >= 2 && s[s.size() - 2] == '=' && s.back() != '=') return std::nullopt;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace fashionrag::app
