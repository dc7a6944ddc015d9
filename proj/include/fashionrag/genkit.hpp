#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fashionrag/detect.hpp"
#include "fashionrag/retrieval.hpp"

namespace fashionrag::genkit {

inline constexpr std::size_t kMaxSnippets = 5;
inline constexpr std::size_t kMinHashtags = 15;
inline constexpr std::size_t kMaxHashtags = 18;

struct GarmentEvidence {
  std::string class_name;
  std::string primary_color;
  std::optional<std::string> secondary_color;
  double confidence = 0.0;
};

// E = {D, A, R}: garments with colors, voted attributes, style snippets.
struct EvidencePack {
  std::vector<GarmentEvidence> detections;
  retrieval::AttributePrediction fabric;
  retrieval::AttributePrediction gender;
  std::vector<std::string> snippets;
};

// Orders garments by confidence (descending, stable) and keeps the first
// kMaxSnippets snippets. Every detection must carry a color descriptor.
EvidencePack build_evidence_pack(const std::vector<detect::Detection>& dets,
                                 retrieval::AttributePrediction fabric,
                                 retrieval::AttributePrediction gender,
                                 std::vector<std::string> snippets);

struct PromptTemplate {
  // System message: tone, format and length directives.
  std::string instructions;
  // Placeholders: {detections} {fabric} {gender} {snippets}, each exactly once.
  std::string caption_template;
  // Placeholders: {evidence} {caption}, each exactly once.
  std::string hashtag_template;

  static PromptTemplate defaults();
  // Reads system.txt, caption.txt and hashtags.txt from `dir`; any missing
  // file keeps its default. The result is validated.
  static PromptTemplate load_dir(const std::filesystem::path& dir);

  // Throws template_error on unknown, missing or repeated placeholders.
  void validate() const;
};

std::string render_caption_prompt(const EvidencePack& pack, const PromptTemplate& tpl);
std::string render_hashtag_prompt(const EvidencePack& pack, std::string_view caption,
                                  const PromptTemplate& tpl);
// Canonical plain-text serialization of the pack used inside prompts.
std::string serialize_evidence(const EvidencePack& pack);

enum class Provenance { llm, fallback };
std::string_view to_string(Provenance p) noexcept;

struct PostBundle {
  std::string caption;
  std::vector<std::string> hashtags;
  Provenance provenance = Provenance::fallback;
  EvidencePack evidence;
};

// Deterministic template fill used when no endpoint is reachable.
PostBundle fallback_generate(const EvidencePack& pack);

// Fixed ordered list of broad tags used to fill up to kMinHashtags.
const std::vector<std::string>& broad_hashtags();

// '#'-prefixed [A-Za-z0-9_]+ tokens in first-occurrence order, deduplicated
// case-insensitively.
std::vector<std::string> parse_hashtags(std::string_view text);

// Truncates to kMaxHashtags and pads below kMinHashtags with the fallback tags
// for `pack`. Returns how many tags were added by padding.
std::size_t finalize_hashtags(std::vector<std::string>& tags, const EvidencePack& pack);

// Trims model output; more than five sentences are cut to the first three.
std::string finalize_caption(std::string_view raw);

nlohmann::json to_json(const retrieval::AttributePrediction& a);
nlohmann::json to_json(const EvidencePack& pack);
nlohmann::json to_json(const PostBundle& bundle);

}  // namespace fashionrag::genkit
