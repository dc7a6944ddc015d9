#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fashionrag/detect.hpp"
#include "fashionrag/retrieval.hpp"

namespace fashionrag::evalkit {

// ---- detection ----

struct GroundTruthBox {
  std::string image_id;
  std::string class_name;
  detect::Box box;
};

struct PredictedBox {
  std::string image_id;
  std::string class_name;
  detect::Box box;
  double confidence = 0.0;
};

inline constexpr int kRecallPoints = 101;

// 101-point interpolated AP for one class. Predictions are matched in
// confidence order (ties by input order) to the best still-unmatched GT box of
// the same image with IoU >= iou_thresh. Returns nullopt when the class has
// neither GT nor predictions, 0 when it has predictions but no GT.
std::optional<double> average_precision(const std::vector<PredictedBox>& preds,
                                        const std::vector<GroundTruthBox>& gts,
                                        std::string_view class_name, double iou_thresh);

// 0.50, 0.55, ..., 0.95
std::vector<double> coco_iou_thresholds();

struct MapResult {
  double map50 = 0.0;
  double map50_95 = 0.0;
  std::map<std::string, double> ap50;  // per class
  std::size_t classes = 0;
};

// Means of per-class AP over every class with GT or predictions. The second
// value averages over `iou_thresholds`. Throws undefined_metric without GT.
MapResult map_score(const std::vector<PredictedBox>& preds, const std::vector<GroundTruthBox>& gts,
                    const std::vector<double>& iou_thresholds = coco_iou_thresholds());

// ---- captions ----

// Sentence BLEU with order min(4, |candidate|), uniform weights, brevity
// penalty and no smoothing.
double bleu(std::string_view candidate, std::string_view reference);

struct RougeScores {
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
};

// ROUGE-1, ROUGE-2 and ROUGE-L F1.
RougeScores rouge(std::string_view candidate, std::string_view reference);

// Exact then Porter-stem unigram alignment, Fmean = 10PR / (R + 9P) and
// fragmentation penalty 0.5 (chunks / matches)^3.
double meteor_lite(std::string_view candidate, std::string_view reference);

// Cosine similarity. Throws dimension_mismatch or invalid_embedding.
double clip_sim(std::span<const double> image_emb, std::span<const double> text_emb);
double clip_sim(const retrieval::Embedding& image_emb, const retrieval::Embedding& text_emb);

struct ClipReport {
  double mean_pred = 0.0;
  double mean_orig = 0.0;
  double delta = 0.0;  // mean_pred - mean_orig
  std::size_t pairs = 0;
};

// Throws undefined_metric on empty input, length_mismatch on unequal sizes.
ClipReport clip_report(const std::vector<double>& pred_sims, const std::vector<double>& orig_sims);

struct CaptionPair {
  std::string image_id;
  std::string candidate;
  std::string reference;
};

struct CaptionScores {
  double bleu = 0.0;
  double meteor_lite = 0.0;
  RougeScores rouge;
  std::size_t pairs = 0;
};

// Corpus means. Throws undefined_metric on empty input.
CaptionScores score_captions(const std::vector<CaptionPair>& pairs);

// ---- hashtags ----

using FacetSet = std::map<retrieval::Facet, std::string>;

class SynonymDict {
 public:
  SynonymDict() = default;

  // canonical<TAB>alt1,alt2,... ; '#' comments and blank lines ignored.
  static SynonymDict parse(std::string_view text);
  static SynonymDict load(const std::filesystem::path& path);
  static const SynonymDict& builtin();

  void add(std::string_view canonical, std::string_view form);

  // Every surface form equivalent to `value` (itself included). A value that
  // is an alternative of some canonical entry maps to that entry's forms.
  std::set<std::string> forms(std::string_view value) const;

  const std::map<std::string, std::set<std::string>>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::set<std::string>> entries_;
  std::map<std::string, std::string> canonical_of_;
};

// Tokens of every tag plus each tag's squashed form.
struct NormalizedTags {
  std::vector<std::vector<std::string>> tokens;
  std::vector<std::string> squashed;
};

NormalizedTags normalize_hashtags(const std::vector<std::string>& hashtags);

// Some form of `value` appears as a token run of a tag or as a substring of a
// squashed tag.
bool facet_hit(const NormalizedTags& tags, std::string_view value, const SynonymDict& syn);

// hits / |facets|, nullopt for an empty facet set.
std::optional<double> image_coverage(const std::vector<std::string>& hashtags,
                                     const FacetSet& facets, const SynonymDict& syn);

struct CoverageItem {
  std::string image_id;
  std::vector<std::string> hashtags;
  FacetSet facets;
};

struct CoverageResult {
  std::vector<std::optional<double>> per_image;
  double mean = 0.0;
  double coverage_at_tau = 0.0;
  double tau = 0.5;
  std::size_t scored = 0;
  std::size_t excluded = 0;
};

// Throws undefined_metric when no image has a facet.
CoverageResult attribute_coverage(const std::vector<CoverageItem>& items, const SynonymDict& syn,
                                  double tau = 0.5);

// Unique over total n-grams, pooled across images; each image's tag tokens
// form one sequence. Throws undefined_metric when there are no n-grams.
double distinct_n(const std::vector<std::vector<std::string>>& per_image_tags, int n);

// ---- files ----

std::vector<GroundTruthBox> load_groundtruth(const std::filesystem::path& path);
// detections.jsonl lines flattened to boxes.
std::vector<PredictedBox> load_predictions(const std::filesystem::path& path);
// {"image_id", "candidate", "reference"} lines.
std::vector<CaptionPair> load_captions(const std::filesystem::path& path);

struct ClipPair {
  std::string image_id;
  std::vector<double> image;
  std::vector<double> pred;
  std::vector<double> orig;
};

// {"image_id", "image": [...], "pred": [...], "orig": [...]} lines.
std::vector<ClipPair> load_clip_pairs(const std::filesystem::path& path);

// {"image_id", "category", "color", "fabric", "gender"}; fields optional.
std::map<std::string, FacetSet> load_facets(const std::filesystem::path& path);

// {"image_id", "hashtags": [...]} lines; RunRecord lines (post.hashtags) also work.
std::vector<std::pair<std::string, std::vector<std::string>>> load_posts(
    const std::filesystem::path& path);

// ---- reports ----

nlohmann::json detection_report(const std::vector<PredictedBox>& preds,
                                const std::vector<GroundTruthBox>& gts);
nlohmann::json caption_report(const std::vector<CaptionPair>& pairs,
                              const std::vector<ClipPair>& clip);
nlohmann::json hashtag_report(const std::vector<std::pair<std::string, std::vector<std::string>>>& posts,
                              const std::map<std::string, FacetSet>& facets, const SynonymDict& syn,
                              double tau);

}  // namespace fashionrag::evalkit
