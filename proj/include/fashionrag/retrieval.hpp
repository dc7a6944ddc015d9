#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fashionrag::retrieval {

// Unit-L2-norm vector. Only constructible through normalize() or from values
// already verified to be unit norm.
class Embedding {
 public:
  Embedding() = default;

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  friend Embedding normalize(std::span<const double> vec);

 private:
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

// vec / ||vec||_2. Throws invalid_embedding for empty, zero or non-finite input.
Embedding normalize(std::span<const double> vec);
Embedding normalize(std::span<const float> vec);

double dot(const Embedding& a, const Embedding& b);

enum class Facet { fabric, gender, color, category };

std::string_view to_string(Facet facet) noexcept;
std::optional<Facet> facet_from_string(std::string_view name) noexcept;

struct CatalogRecord {
  std::string id;
  std::string title;
  std::string description;
  std::optional<std::string> fabric;
  std::optional<std::string> gender;
  std::optional<std::string> color;
  std::optional<std::string> category;

  const std::optional<std::string>& facet(Facet f) const noexcept;
};

// Lowercases and trims facet labels; empty labels become absent.
CatalogRecord canonicalize(CatalogRecord record);

struct Neighbor {
  CatalogRecord record;
  double similarity = 0.0;
};

struct VoteConfig {
  double tau = 5.0;
  double theta_attr = 0.4;
  int top_k = 20;
};

struct AttributePrediction {
  static constexpr std::string_view kUnknown = "unknown";

  Facet facet = Facet::fabric;
  std::string label{kUnknown};
  double confidence = 0.0;
  // (label, aggregated score) in ascending label order.
  std::vector<std::pair<std::string, double>> votes;

  bool known() const noexcept { return label != kUnknown; }
};

// Exact flat inner-product index over unit-norm embeddings. Immutable after
// construction, so concurrent searches are safe.
class Index {
 public:
  Index() = default;

  // Throws length_mismatch, dimension_mismatch, duplicate_id or
  // invalid_embedding. Embeddings are normalized on the way in.
  static Index build(std::vector<CatalogRecord> records,
                     const std::vector<std::vector<double>>& embeddings);
  static Index build(std::vector<CatalogRecord> records, std::vector<Embedding> embeddings);

  std::size_t size() const noexcept { return records_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<CatalogRecord>& records() const noexcept { return records_; }
  const Embedding& embedding(std::size_t row) const { return vectors_.at(row); }

  // The min(k, size) records with the highest inner product, descending,
  // ties by ascending id. Throws dimension_mismatch.
  std::vector<Neighbor> search(const Embedding& query, std::size_t k) const;

 private:
  std::size_t dim_ = 0;
  std::vector<CatalogRecord> records_;
  std::vector<Embedding> vectors_;
};

// score(y) = sum over neighbors labelled y of exp(tau * s_i); the argmax (ties
// to the smaller label) is reported with confidence score(y)/sum(score). Labels
// below theta_attr become "unknown" with their confidence kept.
AttributePrediction vote_attribute(const std::vector<Neighbor>& neighbors, Facet facet,
                                   const VoteConfig& cfg);

// Titles (or the first sentence of the description when the title is blank) of
// the n most similar neighbors, deduplicated case-insensitively.
std::vector<std::string> sample_snippets(const std::vector<Neighbor>& neighbors, std::size_t n);

}  // namespace fashionrag::retrieval
