#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fashionrag/chat_client.hpp"
#include "fashionrag/color.hpp"
#include "fashionrag/detect.hpp"
#include "fashionrag/genkit.hpp"
#include "fashionrag/image.hpp"
#include "fashionrag/index_io.hpp"
#include "fashionrag/log.hpp"
#include "fashionrag/retrieval.hpp"

namespace fashionrag::app {

// Empty paths are unset.
struct PathsConfig {
  std::filesystem::path catalog;
  std::filesystem::path embeddings;
  std::filesystem::path index;
  std::filesystem::path queries;
  std::filesystem::path palette;
  std::filesystem::path synonyms;
  std::filesystem::path templates;
};

struct PipelineConfig {
  detect::DetectorConfig detector;
  color::ColorConfig color;
  retrieval::VoteConfig vote;
  std::size_t snippets = genkit::kMaxSnippets;
  genkit::GenParams generation;
  PathsConfig paths;
  double coverage_tau = 0.5;

  // Sections: detector, color, retrieval, generation, paths, eval. Relative
  // paths resolve against `base_dir`. Unknown keys are config errors.
  static PipelineConfig parse(std::string_view toml, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  // Ranges, plus existence of every referenced file.
  void validate() const;
  // Echo for reports and logs; the API key is never included.
  nlohmann::json to_json() const;
};

// Everything a run needs, loaded once and shared read-only between requests.
class Engine {
 public:
  // Loads palette and templates named in the config (built-ins otherwise).
  Engine(PipelineConfig cfg, retrieval::Index index,
         std::shared_ptr<genkit::ChatTransport> transport = nullptr);

  const PipelineConfig& config() const noexcept { return cfg_; }
  const retrieval::Index& index() const noexcept { return index_; }
  const color::Palette& palette() const noexcept { return palette_; }
  const genkit::Generator& generator() const noexcept { return *generator_; }

 private:
  PipelineConfig cfg_;
  retrieval::Index index_;
  color::Palette palette_;
  std::unique_ptr<genkit::Generator> generator_;
};

struct RunRecord {
  std::string image_id;
  genkit::PostBundle post;
  // Stage name and wall time in milliseconds, in execution order.
  std::vector<std::pair<std::string, double>> timings_ms;
};

nlohmann::json to_json(const RunRecord& record, bool with_timings);

// filter -> NMS -> crops -> colors -> search -> votes -> snippets -> pack ->
// generate. Zero surviving detections log a warning and produce the
// degenerate bundle.
RunRecord run_pipeline(const Image& image, const detect::DetectionsEntry& entry,
                       const retrieval::Embedding& query, const Engine& engine, RunLog& log);

// Reads the raster (missing_image) and looks the query up (missing_embedding).
RunRecord run_pipeline(const std::filesystem::path& image_path, const detect::DetectionsEntry& entry,
                       const retrieval::QueryEmbeddings& queries, const Engine& engine, RunLog& log);

// The entry for `image_path`: matched by image_id when given, otherwise by
// path or file name; a file with a single entry always matches.
// Throws parse_error when nothing matches.
detect::DetectionsEntry select_entry(const std::vector<detect::DetectionsEntry>& entries,
                                     const std::filesystem::path& image_path,
                                     const std::optional<std::string>& image_id = std::nullopt);

struct SplitResult {
  std::vector<std::string> train;
  std::vector<std::string> test;
  // Categories with a single record; it went to train.
  std::vector<std::string> flagged;
};

// Category-aware shuffled split: round(ratio * n) clamped to [1, n - 1] per
// category goes to train. Throws degenerate_input for an empty catalog or a
// record without category, config_error for ratio outside (0, 1).
SplitResult split_catalog(const std::vector<retrieval::CatalogRecord>& records, double ratio,
                          std::uint64_t seed);

nlohmann::json to_json(const SplitResult& split);

// Standard base64 (padding optional) decode; nullopt on malformed input.
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);

}  // namespace fashionrag::app
