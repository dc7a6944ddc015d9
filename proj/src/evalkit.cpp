#include "fashionrag/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include "builtin_data.hpp"
#include "fashionrag/error.hpp"
#include "fashionrag/porter.hpp"
#include "fashionrag/text.hpp"

namespace fashionrag::evalkit {

namespace {

using Tokens = std::vector<std::string>;

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::parse_error, where + ": not a JSON object");
    try {
      fn(j);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse_error, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
}

std::vector<Tokens> ngrams(const Tokens& toks, std::size_t n) {
  std::vector<Tokens> out;
  if (n == 0 || toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    out.emplace_back(toks.begin() + static_cast<std::ptrdiff_t>(i),
                     toks.begin() + static_cast<std::ptrdiff_t>(i + n));
  }
  return out;
}

std::map<Tokens, std::size_t> ngram_counts(const Tokens& toks, std::size_t n) {
  std::map<Tokens, std::size_t> counts;
  for (auto& g : ngrams(toks, n)) ++counts[std::move(g)];
  return counts;
}

std::size_t clipped_overlap(const std::map<Tokens, std::size_t>& cand,
                            const std::map<Tokens, std::size_t>& ref) {
  std::size_t total = 0;
  for (const auto& [g, c] : cand) {
    if (const auto it = ref.find(g); it != ref.end()) total += std::min(c, it->second);
  }
  return total;
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

double rouge_n(const Tokens& cand, const Tokens& ref, std::size_t n) {
  const auto c = ngram_counts(cand, n);
  const auto r = ngram_counts(ref, n);
  const std::size_t c_total = cand.size() >= n ? cand.size() - n + 1 : 0;
  const std::size_t r_total = ref.size() >= n ? ref.size() - n + 1 : 0;
  if (c_total == 0 || r_total == 0) {
    // Too short for any n-gram: identical texts still score as identical.
    return c_total == r_total && !cand.empty() && cand == ref ? 1.0 : 0.0;
  }
  const double overlap = static_cast<double>(clipped_overlap(c, r));
  return f1(overlap / static_cast<double>(c_total), overlap / static_cast<double>(r_total));
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Runs of `needle` inside `hay`.
bool contains_run(const Tokens& hay, const Tokens& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

detect::Box box_from_json(const nlohmann::json& j) {
  const auto& b = j.at("box");
  if (!b.is_array() || b.size() != 4) throw Error(ErrorCode::parse_error, "box must have 4 numbers");
  detect::Box box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  if (!box.valid()) throw Error(ErrorCode::parse_error, "box has non-positive extent");
  return box;
}

std::vector<double> number_array(const nlohmann::json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array()) throw Error(ErrorCode::parse_error, std::string(key) + " must be an array");
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& v : a) out.push_back(v.get<double>());
  return out;
}

}  // namespace

// ---- detection ----

std::optional<double> average_precision(const std::vector<PredictedBox>& preds,
                                        const std::vector<GroundTruthBox>& gts,
                                        std::string_view class_name, double iou_thresh) {
  std::map<std::string, std::vector<const GroundTruthBox*>> gt_by_image;
  std::size_t n_gt = 0;
  for (const auto& g : gts) {
    if (g.class_name != class_name) continue;
    gt_by_image[g.image_id].push_back(&g);
    ++n_gt;
  }
  std::vector<const PredictedBox*> ps;
  for (const auto& p : preds) {
    if (p.class_name == class_name) ps.push_back(&p);
  }
  if (n_gt == 0) return ps.empty() ? std::nullopt : std::optional<double>(0.0);
  if (ps.empty()) return 0.0;

  std::stable_sort(ps.begin(), ps.end(),
                   [](const PredictedBox* a, const PredictedBox* b) { return a->confidence > b->confidence; });

  std::map<std::string, std::vector<bool>> used;
  for (const auto& [id, boxes] : gt_by_image) used[id].assign(boxes.size(), false);

  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (const auto* p : ps) {
    ++seen;
    const auto it = gt_by_image.find(p->image_id);
    if (it != gt_by_image.end()) {
      auto& taken = used[p->image_id];
      double best = -1.0;
      std::size_t best_i = 0;
      for (std::size_t i = 0; i < it->second.size(); ++i) {
        if (taken[i]) continue;
        const double v = detect::iou(p->box, it->second[i]->box);
        if (v >= iou_thresh && v > best) {
          best = v;
          best_i = i;
        }
      }
      if (best >= 0.0) {
        taken[best_i] = true;
        ++tp;
      }
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }

  // Precision envelope, then sample at recall thresholds 0.00 .. 1.00.
  for (std::size_t i = precision.size() - 1; i > 0; --i) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  std::size_t pos = 0;
  for (int t = 0; t < kRecallPoints; ++t) {
    const double r = static_cast<double>(t) / 100.0;
    while (pos < recall.size() && recall[pos] < r) ++pos;
    if (pos == recall.size()) break;
    sum += precision[pos];
  }
  return sum / kRecallPoints;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back(static_cast<double>(50 + 5 * i) / 100.0);
  return out;
}

MapResult map_score(const std::vector<PredictedBox>& preds, const std::vector<GroundTruthBox>& gts,
                    const std::vector<double>& iou_thresholds) {
  if (gts.empty()) throw Error(ErrorCode::undefined_metric, "mAP needs at least one ground-truth box");
  if (iou_thresholds.empty()) throw Error(ErrorCode::config_error, "no IoU thresholds given");
  std::set<std::string> classes;
  for (const auto& g : gts) classes.insert(g.class_name);
  for (const auto& p : preds) classes.insert(p.class_name);

  MapResult result;
  result.classes = classes.size();
  double sum50 = 0.0;
  double sum_all = 0.0;
  for (const auto& c : classes) {
    const double ap50 = average_precision(preds, gts, c, 0.5).value_or(0.0);
    result.ap50[c] = ap50;
    sum50 += ap50;
    double acc = 0.0;
    for (double t : iou_thresholds) acc += average_precision(preds, gts, c, t).value_or(0.0);
    sum_all += acc / static_cast<double>(iou_thresholds.size());
  }
  result.map50 = sum50 / static_cast<double>(classes.size());
  result.map50_95 = sum_all / static_cast<double>(classes.size());
  return result;
}

// ---- captions ----

double bleu(std::string_view candidate, std::string_view reference) {
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  if (cand.empty()) return 0.0;
  const std::size_t order = std::min<std::size_t>(4, cand.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= order; ++n) {
    const auto overlap = clipped_overlap(ngram_counts(cand, n), ngram_counts(ref, n));
    if (overlap == 0) return 0.0;
    log_sum += std::log(static_cast<double>(overlap) / static_cast<double>(cand.size() - n + 1));
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(order));
}

RougeScores rouge(std::string_view candidate, std::string_view reference) {
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  RougeScores s;
  if (cand.empty() || ref.empty()) return s;
  s.r1 = rouge_n(cand, ref, 1);
  s.r2 = rouge_n(cand, ref, 2);
  const double lcs = static_cast<double>(lcs_length(cand, ref));
  s.rl = f1(lcs / static_cast<double>(cand.size()), lcs / static_cast<double>(ref.size()));
  return s;
}

double meteor_lite(std::string_view candidate, std::string_view reference) {
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> align(cand.size(), kNone);
  std::vector<bool> ref_used(ref.size(), false);

  // Each stage walks the candidate left to right. A token continues the
  // previous token's alignment when the next reference slot matches, otherwise
  // it takes the leftmost free matching reference token.
  const auto stage = [&](const Tokens& c, const Tokens& r) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (align[i] != kNone) continue;
      const std::size_t prev = i > 0 ? align[i - 1] : kNone;
      if (prev != kNone && prev + 1 < r.size() && !ref_used[prev + 1] && r[prev + 1] == c[i]) {
        align[i] = prev + 1;
        ref_used[prev + 1] = true;
        continue;
      }
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (!ref_used[j] && r[j] == c[i]) {
          align[i] = j;
          ref_used[j] = true;
          break;
        }
      }
    }
  };
  stage(cand, ref);
  Tokens cand_stems;
  Tokens ref_stems;
  for (const auto& t : cand) cand_stems.push_back(text::porter_stem(t));
  for (const auto& t : ref) ref_stems.push_back(text::porter_stem(t));
  stage(cand_stems, ref_stems);

  std::size_t matches = 0;
  std::size_t chunks = 0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (align[i] == kNone) continue;
    ++matches;
    const bool continues = i > 0 && align[i - 1] != kNone && align[i - 1] + 1 == align[i];
    if (!continues) ++chunks;
  }
  if (matches == 0) return 0.0;
  const double m = static_cast<double>(matches);
  const double p = m / static_cast<double>(cand.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
  return fmean * (1.0 - penalty);
}

double clip_sim(std::span<const double> image_emb, std::span<const double> text_emb) {
  if (image_emb.size() != text_emb.size()) {
    throw Error(ErrorCode::dimension_mismatch, "embedding dimensions differ: " +
                                                   std::to_string(image_emb.size()) + " vs " +
                                                   std::to_string(text_emb.size()));
  }
  return retrieval::dot(retrieval::normalize(image_emb), retrieval::normalize(text_emb));
}

double clip_sim(const retrieval::Embedding& image_emb, const retrieval::Embedding& text_emb) {
  return retrieval::dot(image_emb, text_emb);
}

ClipReport clip_report(const std::vector<double>& pred_sims, const std::vector<double>& orig_sims) {
  if (pred_sims.empty()) throw Error(ErrorCode::undefined_metric, "no similarity pairs");
  if (pred_sims.size() != orig_sims.size()) {
    throw Error(ErrorCode::length_mismatch, "predicted and original similarity counts differ");
  }
  ClipReport r;
  r.pairs = pred_sims.size();
  r.mean_pred = mean_of(pred_sims);
  r.mean_orig = mean_of(orig_sims);
  r.delta = r.mean_pred - r.mean_orig;
  return r;
}

CaptionScores score_captions(const std::vector<CaptionPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::undefined_metric, "no caption pairs");
  CaptionScores s;
  s.pairs = pairs.size();
  for (const auto& p : pairs) {
    s.bleu += bleu(p.candidate, p.reference);
    s.meteor_lite += meteor_lite(p.candidate, p.reference);
    const auto r = rouge(p.candidate, p.reference);
    s.rouge.r1 += r.r1;
    s.rouge.r2 += r.r2;
    s.rouge.rl += r.rl;
  }
  const double n = static_cast<double>(pairs.size());
  s.bleu /= n;
  s.meteor_lite /= n;
  s.rouge.r1 /= n;
  s.rouge.r2 /= n;
  s.rouge.rl /= n;
  return s;
}

// ---- hashtags ----

SynonymDict SynonymDict::parse(std::string_view text_in) {
  SynonymDict dict;
  std::size_t line_no = 0;
  for (const auto raw : text::split_lines(text_in)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    const auto canonical = text::trim(line.substr(0, tab));
    if (canonical.empty()) {
      throw Error(ErrorCode::parse_error, "synonyms line " + std::to_string(line_no) + ": empty canonical value");
    }
    dict.add(canonical, canonical);
    if (tab == std::string_view::npos) continue;
    for (const auto alt : text::split(line.substr(tab + 1), ',')) {
      if (!text::trim(alt).empty()) dict.add(canonical, alt);
    }
  }
  return dict;
}

SynonymDict SynonymDict::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open synonyms file: " + path.string());
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(content);
}

const SynonymDict& SynonymDict::builtin() {
  static const SynonymDict dict = parse(data::kSynonymsTsv);
  return dict;
}

void SynonymDict::add(std::string_view canonical, std::string_view form) {
  const auto c = text::to_lower(text::trim(canonical));
  const auto f = text::to_lower(text::trim(form));
  auto& set = entries_[c];
  set.insert(c);
  set.insert(f);
  canonical_of_.try_emplace(c, c);
  canonical_of_.try_emplace(f, c);
}

std::set<std::string> SynonymDict::forms(std::string_view value) const {
  const auto v = text::to_lower(text::trim(value));
  std::set<std::string> out{v};
  if (const auto it = canonical_of_.find(v); it != canonical_of_.end()) {
    const auto& set = entries_.at(it->second);
    out.insert(set.begin(), set.end());
  }
  return out;
}

NormalizedTags normalize_hashtags(const std::vector<std::string>& hashtags) {
  NormalizedTags n;
  for (const auto& tag : hashtags) {
    n.tokens.push_back(text::tokenize(tag));
    n.squashed.push_back(text::squash(tag));
  }
  return n;
}

bool facet_hit(const NormalizedTags& tags, std::string_view value, const SynonymDict& syn) {
  for (const auto& form : syn.forms(value)) {
    const auto form_tokens = text::tokenize(form);
    const auto form_squashed = text::squash(form);
    for (const auto& toks : tags.tokens) {
      if (contains_run(toks, form_tokens)) return true;
    }
    if (form_squashed.empty()) continue;
    for (const auto& s : tags.squashed) {
      if (s.find(form_squashed) != std::string::npos) return true;
    }
  }
  return false;
}

std::optional<double> image_coverage(const std::vector<std::string>& hashtags,
                                     const FacetSet& facets, const SynonymDict& syn) {
  std::size_t known = 0;
  std::size_t hits = 0;
  const auto tags = normalize_hashtags(hashtags);
  for (const auto& [facet, value] : facets) {
    if (text::trim(value).empty()) continue;
    ++known;
    if (facet_hit(tags, value, syn)) ++hits;
  }
  if (known == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(known);
}

CoverageResult attribute_coverage(const std::vector<CoverageItem>& items, const SynonymDict& syn,
                                  double tau) {
  CoverageResult r;
  r.tau = tau;
  std::size_t at_tau = 0;
  double sum = 0.0;
  for (const auto& item : items) {
    const auto cov = image_coverage(item.hashtags, item.facets, syn);
    r.per_image.push_back(cov);
    if (!cov) {
      ++r.excluded;
      continue;
    }
    ++r.scored;
    sum += *cov;
    if (*cov >= tau) ++at_tau;
  }
  if (r.scored == 0) throw Error(ErrorCode::undefined_metric, "no image has a known facet");
  r.mean = sum / static_cast<double>(r.scored);
  r.coverage_at_tau = static_cast<double>(at_tau) / static_cast<double>(r.scored);
  return r;
}

double distinct_n(const std::vector<std::vector<std::string>>& per_image_tags, int n) {
  if (n < 1) throw Error(ErrorCode::config_error, "distinct-n needs n >= 1");
  std::set<Tokens> unique;
  std::size_t total = 0;
  for (const auto& tags : per_image_tags) {
    Tokens seq;
    for (const auto& tag : tags) {
      auto toks = text::tokenize(tag);
      seq.insert(seq.end(), std::make_move_iterator(toks.begin()), std::make_move_iterator(toks.end()));
    }
    for (auto& g : ngrams(seq, static_cast<std::size_t>(n))) {
      unique.insert(std::move(g));
      ++total;
    }
  }
  if (total == 0) throw Error(ErrorCode::undefined_metric, "no " + std::to_string(n) + "-grams in corpus");
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

// ---- files ----

std::vector<GroundTruthBox> load_groundtruth(const std::filesystem::path& path) {
  std::vector<GroundTruthBox> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    const auto id = j.at("image_id").get<std::string>();
    if (j.contains("detections")) {
      for (const auto& d : j.at("detections")) {
        out.push_back({id, d.at("class").get<std::string>(), box_from_json(d)});
      }
    } else {
      out.push_back({id, j.at("class").get<std::string>(), box_from_json(j)});
    }
  });
  return out;
}

std::vector<PredictedBox> load_predictions(const std::filesystem::path& path) {
  std::vector<PredictedBox> out;
  for (const auto& entry : detect::load_detections(path)) {
    for (const auto& d : entry.detections) {
      out.push_back({entry.image_id, d.class_name, d.box, d.confidence});
    }
  }
  return out;
}

std::vector<CaptionPair> load_captions(const std::filesystem::path& path) {
  std::vector<CaptionPair> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    out.push_back({j.value("image_id", std::string{}), j.at("candidate").get<std::string>(),
                   j.at("reference").get<std::string>()});
  });
  return out;
}

std::vector<ClipPair> load_clip_pairs(const std::filesystem::path& path) {
  std::vector<ClipPair> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    out.push_back({j.value("image_id", std::string{}), number_array(j, "image"), number_array(j, "pred"),
                   number_array(j, "orig")});
  });
  return out;
}

std::map<std::string, FacetSet> load_facets(const std::filesystem::path& path) {
  std::map<std::string, FacetSet> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    auto& facets = out[j.at("image_id").get<std::string>()];
    for (const auto f : {retrieval::Facet::category, retrieval::Facet::color, retrieval::Facet::fabric,
                         retrieval::Facet::gender}) {
      const std::string key(retrieval::to_string(f));
      if (!j.contains(key) || j[key].is_null()) continue;
      const auto value = text::to_lower(text::trim(j[key].get<std::string>()));
      if (!value.empty()) facets[f] = value;
    }
  });
  return out;
}

std::vector<std::pair<std::string, std::vector<std::string>>> load_posts(
    const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    const auto& tags = j.contains("hashtags") ? j.at("hashtags") : j.at("post").at("hashtags");
    out.emplace_back(j.at("image_id").get<std::string>(), tags.get<std::vector<std::string>>());
  });
  return out;
}

// ---- reports ----

nlohmann::json detection_report(const std::vector<PredictedBox>& preds,
                                const std::vector<GroundTruthBox>& gts) {
  const auto thresholds = coco_iou_thresholds();
  const auto m = map_score(preds, gts, thresholds);
  return nlohmann::json{
      {"metrics", {{"map50", m.map50}, {"map50_95", m.map50_95}, {"ap50_per_class", m.ap50}}},
      {"config",
       {{"iou_thresholds", thresholds},
        {"interpolation", "101-point"},
        {"classes", m.classes},
        {"predictions", preds.size()},
        {"ground_truth", gts.size()}}}};
}

nlohmann::json caption_report(const std::vector<CaptionPair>& pairs, const std::vector<ClipPair>& clip) {
  nlohmann::json metrics = nlohmann::json::object();
  if (!pairs.empty()) {
    const auto s = score_captions(pairs);
    metrics["bleu"] = s.bleu;
    metrics["meteor_lite"] = s.meteor_lite;
    metrics["rouge1_f"] = s.rouge.r1;
    metrics["rouge2_f"] = s.rouge.r2;
    metrics["rougeL_f"] = s.rouge.rl;
  }
  if (!clip.empty()) {
    std::vector<double> pred;
    std::vector<double> orig;
    for (const auto& c : clip) {
      pred.push_back(clip_sim(c.image, c.pred));
      orig.push_back(clip_sim(c.image, c.orig));
    }
    const auto r = clip_report(pred, orig);
    metrics["clip_mean_pred"] = r.mean_pred;
    metrics["clip_mean_orig"] = r.mean_orig;
    metrics["clip_delta"] = r.delta;
  }
  if (metrics.empty()) throw Error(ErrorCode::undefined_metric, "no caption pairs or CLIP pairs given");
  return nlohmann::json{{"metrics", std::move(metrics)},
                        {"config",
                         {{"bleu_max_order", 4},
                          {"bleu_smoothing", "none"},
                          {"meteor_variant", "meteor_lite: exact + porter stem"},
                          {"caption_pairs", pairs.size()},
                          {"clip_pairs", clip.size()}}}};
}

nlohmann::json hashtag_report(const std::vector<std::pair<std::string, std::vector<std::string>>>& posts,
                              const std::map<std::string, FacetSet>& facets, const SynonymDict& syn,
                              double tau) {
  std::vector<CoverageItem> items;
  std::vector<std::vector<std::string>> tag_lists;
  for (const auto& [id, tags] : posts) {
    const auto it = facets.find(id);
    items.push_back({id, tags, it == facets.end() ? FacetSet{} : it->second});
    tag_lists.push_back(tags);
  }
  const auto cov = attribute_coverage(items, syn, tau);
  nlohmann::json per_image = nlohmann::json::object();
  for (std::size_t i = 0; i < items.size(); ++i) {
    per_image[items[i].image_id] = cov.per_image[i] ? nlohmann::json(*cov.per_image[i]) : nlohmann::json(nullptr);
  }
  const auto distinct_or_null = [&](int n) {
    try {
      return nlohmann::json(distinct_n(tag_lists, n));
    } catch (const Error&) {
      return nlohmann::json(nullptr);
    }
  };
  return nlohmann::json{{"metrics",
                         {{"coverage_mean", cov.mean},
                          {"coverage_at_tau", cov.coverage_at_tau},
                          {"distinct_1", distinct_or_null(1)},
                          {"distinct_2", distinct_or_null(2)},
                          {"per_image", std::move(per_image)}}},
                        {"config",
                         {{"tau", tau},
                          {"images", items.size()},
                          {"scored", cov.scored},
                          {"excluded_no_facets", cov.excluded},
                          {"distinct_pooling", "corpus"}}}};
}

}  // namespace fashionrag::evalkit
