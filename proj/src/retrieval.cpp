#include "fashionrag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "fashionrag/error.hpp"
#include "fashionrag/text.hpp"

namespace fashionrag::retrieval {

namespace {

std::optional<std::string> canonical_label(std::optional<std::string> label) {
  if (!label) return std::nullopt;
  std::string cleaned = text::to_lower(text::trim(*label));
  if (cleaned.empty()) return std::nullopt;
  return cleaned;
}

std::string first_sentence(std::string_view description) {
  const auto sentences = text::split_sentences(description);
  return sentences.empty() ? std::string{} : sentences.front();
}

}  // namespace

Embedding normalize(std::span<const double> vec) {
  if (vec.empty()) throw Error(ErrorCode::invalid_embedding, "embedding is empty");
  long double sum = 0.0L;
  for (const double v : vec) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::invalid_embedding, "embedding has a non-finite component");
    }
    sum += static_cast<long double>(v) * v;
  }
  const long double norm = std::sqrt(sum);
  if (!(norm > 0.0L) || !std::isfinite(static_cast<double>(norm))) {
    throw Error(ErrorCode::invalid_embedding, "embedding has zero norm");
  }
  std::vector<double> out(vec.size());
  std::transform(vec.begin(), vec.end(), out.begin(),
                 [norm](double v) { return static_cast<double>(v / norm); });
  return Embedding(std::move(out));
}

Embedding normalize(std::span<const float> vec) {
  const std::vector<double> widened(vec.begin(), vec.end());
  return normalize(std::span<const double>(widened));
}

double dot(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "embedding dimensions differ: " +
                                                   std::to_string(a.dim()) + " vs " +
                                                   std::to_string(b.dim()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) sum += a[i] * b[i];
  return sum;
}

std::string_view to_string(Facet facet) noexcept {
  switch (facet) {
    case Facet::fabric: return "fabric";
    case Facet::gender: return "gender";
    case Facet::color: return "color";
    case Facet::category: return "category";
  }
  return "fabric";
}

std::optional<Facet> facet_from_string(std::string_view name) noexcept {
  for (const Facet f : {Facet::fabric, Facet::gender, Facet::color, Facet::category}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

const std::optional<std::string>& CatalogRecord::facet(Facet f) const noexcept {
  switch (f) {
    case Facet::fabric: return fabric;
    case Facet::gender: return gender;
    case Facet::color: return color;
    case Facet::category: return category;
  }
  return fabric;
}

CatalogRecord canonicalize(CatalogRecord record) {
  record.fabric = canonical_label(std::move(record.fabric));
  record.gender = canonical_label(std::move(record.gender));
  record.color = canonical_label(std::move(record.color));
  record.category = canonical_label(std::move(record.category));
  return record;
}

Index Index::build(std::vector<CatalogRecord> records,
                   const std::vector<std::vector<double>>& embeddings) {
  if (records.size() != embeddings.size()) {
    throw Error(ErrorCode::length_mismatch,
                std::to_string(records.size()) + " records but " +
                    std::to_string(embeddings.size()) + " embeddings");
  }
  std::vector<Embedding> normalized;
  normalized.reserve(embeddings.size());
  for (const auto& e : embeddings) normalized.push_back(normalize(std::span<const double>(e)));
  return build(std::move(records), std::move(normalized));
}

Index Index::build(std::vector<CatalogRecord> records, std::vector<Embedding> embeddings) {
  if (records.size() != embeddings.size()) {
    throw Error(ErrorCode::length_mismatch,
                std::to_string(records.size()) + " records but " +
                    std::to_string(embeddings.size()) + " embeddings");
  }
  Index index;
  index.dim_ = embeddings.empty() ? 0 : embeddings.front().dim();
  std::set<std::string> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (embeddings[i].dim() != index.dim_) {
      throw Error(ErrorCode::dimension_mismatch,
                  "embedding " + std::to_string(i) + " has dimension " +
                      std::to_string(embeddings[i].dim()) + ", expected " +
                      std::to_string(index.dim_));
    }
    if (records[i].id.empty()) throw Error(ErrorCode::parse_error, "catalog record with empty id");
    if (!ids.insert(records[i].id).second) {
      throw Error(ErrorCode::duplicate_id, "duplicate catalog id: " + records[i].id);
    }
    if (text::trim(records[i].title).empty()) {
      throw Error(ErrorCode::parse_error, "catalog record " + records[i].id + " has an empty title");
    }
    records[i] = canonicalize(std::move(records[i]));
  }
  index.records_ = std::move(records);
  index.vectors_ = std::move(embeddings);
  return index;
}

std::vector<Neighbor> Index::search(const Embedding& query, std::size_t k) const {
  if (query.dim() != dim_ && !records_.empty()) {
    throw Error(ErrorCode::dimension_mismatch,
                "query dimension " + std::to_string(query.dim()) + " does not match index dimension " +
                    std::to_string(dim_));
  }
  std::vector<double> scores(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) scores[i] = dot(query, vectors_[i]);

  std::vector<std::size_t> order(records_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return records_[a].id < records_[b].id;
                    });

  std::vector<Neighbor> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back({records_[order[i]], scores[order[i]]});
  return out;
}

AttributePrediction vote_attribute(const std::vector<Neighbor>& neighbors, Facet facet,
                                   const VoteConfig& cfg) {
  AttributePrediction prediction;
  prediction.facet = facet;

  // Ordered map: iteration order is label order, which fixes the tie rule.
  std::map<std::string, double> scores;
  double total = 0.0;
  for (const auto& n : neighbors) {
    const auto& label = n.record.facet(facet);
    if (!label) continue;  // absent values are not part of the electorate
    const double w = std::exp(cfg.tau * n.similarity);
    scores[*label] += w;
  }
  if (scores.empty()) return prediction;
  for (const auto& [label, score] : scores) total += score;

  const std::pair<const std::string, double>* best = nullptr;
  for (const auto& entry : scores) {
    if (best == nullptr || entry.second > best->second) best = &entry;
  }
  prediction.votes.assign(scores.begin(), scores.end());
  prediction.confidence = best->second / total;
  prediction.label = prediction.confidence < cfg.theta_attr
                         ? std::string(AttributePrediction::kUnknown)
                         : best->first;
  return prediction;
}

std::vector<std::string> sample_snippets(const std::vector<Neighbor>& neighbors, std::size_t n) {
  std::vector<const Neighbor*> ranked;
  ranked.reserve(neighbors.size());
  for (const auto& nb : neighbors) ranked.push_back(&nb);
  std::stable_sort(ranked.begin(), ranked.end(), [](const Neighbor* a, const Neighbor* b) {
    if (a->similarity != b->similarity) return a->similarity > b->similarity;
    return a->record.id < b->record.id;
  });

  std::vector<std::string> snippets;
  std::set<std::string> seen;
  for (const Neighbor* nb : ranked) {
    if (snippets.size() >= n) break;
    std::string snippet(text::trim(nb->record.title));
    if (snippet.empty()) snippet = first_sentence(nb->record.description);
    if (snippet.empty()) continue;
    if (!seen.insert(text::to_lower(snippet)).second) continue;
    snippets.push_back(std::move(snippet));
  }
  return snippets;
}

}  // namespace fashionrag::retrieval
