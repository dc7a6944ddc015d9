#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fashionrag/retrieval.hpp"

namespace fashionrag::retrieval {

// catalog.jsonl: one record per line with id, title, description, fabric,
// gender, color, category. Null or missing facet fields are absent.
CatalogRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const CatalogRecord& record);
std::vector<CatalogRecord> parse_catalog(std::string_view jsonl);
std::vector<CatalogRecord> load_catalog(const std::filesystem::path& path);
std::string serialize_catalog(const std::vector<CatalogRecord>& records);

// embeddings.bin: "RAGF", u32 version, u32 count, u32 dim, then count*dim
// little-endian float32 values, row-major.
struct EmbeddingMatrix {
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * dim, dim);
  }
};

inline constexpr std::uint32_t kEmbeddingsFormatVersion = 1;
inline constexpr std::uint32_t kIndexFormatVersion = 1;

EmbeddingMatrix parse_embeddings(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_embeddings(const EmbeddingMatrix& matrix);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

// Row i of the matrix paired with line i of the catalog. Rows must be unit
// norm within `norm_tolerance`; they are renormalized in double precision.
Index index_from_files(std::vector<CatalogRecord> records, const EmbeddingMatrix& matrix,
                       double norm_tolerance = 1e-3);

// index.bin layout:
//   "RAGI" | u32 version | u64 catalog_len | catalog.jsonl bytes
//          | u64 embeddings_len | embeddings.bin bytes | u32 crc32 | "RAGE"
// The CRC covers every byte before it. Loader failures are corrupt_index.
std::vector<std::uint8_t> serialize_index(const Index& index);
Index parse_index(std::span<const std::uint8_t> bytes);
void save_index(const Index& index, const std::filesystem::path& path);
Index load_index(const std::filesystem::path& path);

// Query-side embeddings keyed by image id: one JSON object per line,
// {"image_id": text, "embedding": [numbers]}.
class QueryEmbeddings {
 public:
  static QueryEmbeddings parse(std::string_view jsonl);
  static QueryEmbeddings load(const std::filesystem::path& path);

  void add(std::string image_id, Embedding embedding);
  // Throws missing_embedding.
  const Embedding& at(const std::string& image_id) const;
  bool contains(const std::string& image_id) const { return by_id_.contains(image_id); }
  std::size_t size() const noexcept { return by_id_.size(); }

 private:
  std::map<std::string, Embedding, std::less<>> by_id_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace fashionrag::retrieval
