#include "fashionrag/index_io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fashionrag/error.hpp"
#include "fashionrag/text.hpp"

namespace fashionrag::retrieval {

namespace {

constexpr char kEmbeddingsMagic[4] = {'R', 'A', 'G', 'F'};
constexpr char kIndexMagic[4] = {'R', 'A', 'G', 'I'};
constexpr char kIndexTrailer[4] = {'R', 'A', 'G', 'E'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_bytes(std::vector<std::uint8_t>& out, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  out.insert(out.end(), p, p + n);
}

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, ErrorCode failure)
      : bytes_(bytes), failure_(failure) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (n > bytes_.size() - offset_) {
      throw Error(failure_, std::string("truncated data while reading ") + what);
    }
    auto out = bytes_.subspan(offset_, n);
    offset_ += n;
    return out;
  }

  std::uint32_t u32(const char* what) {
    const auto b = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
    return v;
  }

  std::uint64_t u64(const char* what) {
    const auto b = take(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
    return v;
  }

  void expect_magic(const char (&magic)[4], const char* what) {
    const auto b = take(4, what);
    if (std::memcmp(b.data(), magic, 4) != 0) {
      throw Error(failure_, std::string("bad magic bytes in ") + what);
    }
  }

  std::size_t offset() const noexcept { return offset_; }
  std::size_t remaining() const noexcept { return bytes_.size() - offset_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
  ErrorCode failure_;
};

std::optional<std::string> optional_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

EmbeddingMatrix parse_embeddings_as(std::span<const std::uint8_t> bytes, ErrorCode failure) {
  ByteReader reader(bytes, failure);
  reader.expect_magic(kEmbeddingsMagic, "embeddings header");
  const std::uint32_t version = reader.u32("embeddings version");
  if (version != kEmbeddingsFormatVersion) {
    throw Error(failure, "unsupported embeddings format version " + std::to_string(version));
  }
  EmbeddingMatrix m;
  m.count = reader.u32("embeddings count");
  m.dim = reader.u32("embeddings dim");
  const std::uint64_t n = std::uint64_t{m.count} * m.dim;
  if (n * 4 != reader.remaining()) {
    throw Error(failure, "embeddings payload is " + std::to_string(reader.remaining()) +
                             " bytes, header implies " + std::to_string(n * 4));
  }
  const auto payload = reader.take(static_cast<std::size_t>(n * 4), "embeddings payload");
  m.values.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | payload[4 * i + static_cast<std::size_t>(b)];
    m.values[i] = std::bit_cast<float>(bits);
  }
  return m;
}

}  // namespace

CatalogRecord record_from_json(const nlohmann::json& j) {
  try {
    CatalogRecord r;
    r.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    r.title = j.value("title", std::string{});
    r.description = j.contains("description") && !j.at("description").is_null()
                        ? j.at("description").get<std::string>()
                        : std::string{};
    r.fabric = optional_field(j, "fabric");
    r.gender = optional_field(j, "gender");
    r.color = optional_field(j, "color");
    r.category = optional_field(j, "category");
    if (r.id.empty()) throw Error(ErrorCode::parse_error, "catalog record with empty id");
    if (text::trim(r.title).empty()) {
      throw Error(ErrorCode::parse_error, "catalog record " + r.id + " has an empty title");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed catalog record: ") + e.what());
  }
}

nlohmann::json record_to_json(const CatalogRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["description"] = r.description;
  for (const Facet f : {Facet::fabric, Facet::gender, Facet::color, Facet::category}) {
    const auto& v = r.facet(f);
    j[std::string(to_string(f))] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  return j;
}

std::vector<CatalogRecord> parse_catalog(std::string_view jsonl) {
  std::vector<CatalogRecord> records;
  std::size_t line_no = 0;
  for (const auto line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCode::parse_error,
                  "catalog line " + std::to_string(line_no) + " is not a JSON object");
    }
    records.push_back(record_from_json(j));
  }
  return records;
}

std::vector<CatalogRecord> load_catalog(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_catalog(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string serialize_catalog(const std::vector<CatalogRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

EmbeddingMatrix parse_embeddings(std::span<const std::uint8_t> bytes) {
  return parse_embeddings_as(bytes, ErrorCode::parse_error);
}

std::vector<std::uint8_t> serialize_embeddings(const EmbeddingMatrix& m) {
  if (m.values.size() != std::size_t{m.count} * m.dim) {
    throw Error(ErrorCode::length_mismatch, "embedding matrix size does not match count*dim");
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + m.values.size() * 4);
  put_bytes(out, kEmbeddingsMagic, 4);
  put_u32(out, kEmbeddingsFormatVersion);
  put_u32(out, m.count);
  put_u32(out, m.dim);
  for (const float v : m.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  return parse_embeddings(read_file_bytes(path));
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_embeddings(matrix));
}

Index index_from_files(std::vector<CatalogRecord> records, const EmbeddingMatrix& matrix,
                       double norm_tolerance) {
  if (records.size() != matrix.count) {
    throw Error(ErrorCode::length_mismatch,
                std::to_string(records.size()) + " catalog lines but " +
                    std::to_string(matrix.count) + " embedding rows");
  }
  std::vector<Embedding> rows;
  rows.reserve(matrix.count);
  for (std::size_t i = 0; i < matrix.count; ++i) {
    const auto row = matrix.row(i);
    double sq = 0.0;
    for (const float v : row) sq += double(v) * double(v);
    if (!(std::abs(std::sqrt(sq) - 1.0) <= norm_tolerance)) {
      throw Error(ErrorCode::invalid_embedding,
                  "embedding row " + std::to_string(i) + " is not unit norm (norm " +
                      std::to_string(std::sqrt(sq)) + ")");
    }
    rows.push_back(normalize(row));
  }
  return Index::build(std::move(records), std::move(rows));
}

std::vector<std::uint8_t> serialize_index(const Index& index) {
  const std::string catalog = serialize_catalog(index.records());
  EmbeddingMatrix m;
  m.count = static_cast<std::uint32_t>(index.size());
  m.dim = static_cast<std::uint32_t>(index.dim());
  m.values.reserve(index.size() * index.dim());
  for (std::size_t i = 0; i < index.size(); ++i) {
    for (const double v : index.embedding(i).values()) m.values.push_back(static_cast<float>(v));
  }
  const auto embeddings = serialize_embeddings(m);

  std::vector<std::uint8_t> out;
  put_bytes(out, kIndexMagic, 4);
  put_u32(out, kIndexFormatVersion);
  put_u64(out, catalog.size());
  put_bytes(out, catalog.data(), catalog.size());
  put_u64(out, embeddings.size());
  put_bytes(out, embeddings.data(), embeddings.size());
  put_u32(out, crc32_of(out));
  put_bytes(out, kIndexTrailer, 4);
  return out;
}

Index parse_index(std::span<const std::uint8_t> bytes) {
  constexpr auto corrupt = ErrorCode::corrupt_index;
  if (bytes.size() < 8) throw Error(corrupt, "index file too short");
  if (std::memcmp(bytes.data() + bytes.size() - 4, kIndexTrailer, 4) != 0) {
    throw Error(corrupt, "index trailer missing (truncated file?)");
  }
  const auto body = bytes.first(bytes.size() - 8);
  ByteReader trailer(bytes.subspan(bytes.size() - 8, 4), corrupt);
  const std::uint32_t stored_crc = trailer.u32("checksum");
  if (crc32_of(body) != stored_crc) throw Error(corrupt, "index checksum mismatch");

  ByteReader reader(body, corrupt);
  reader.expect_magic(kIndexMagic, "index header");
  const std::uint32_t version = reader.u32("index version");
  if (version != kIndexFormatVersion) {
    throw Error(corrupt, "unsupported index format version " + std::to_string(version));
  }
  const auto catalog_len = reader.u64("catalog length");
  const auto catalog = reader.take(static_cast<std::size_t>(catalog_len), "catalog");
  const auto embeddings_len = reader.u64("embeddings length");
  const auto embeddings = reader.take(static_cast<std::size_t>(embeddings_len), "embeddings");
  if (reader.remaining() != 0) throw Error(corrupt, "unexpected bytes after index payload");

  try {
    auto records = parse_catalog(
        std::string_view(reinterpret_cast<const char*>(catalog.data()), catalog.size()));
    const auto matrix = parse_embeddings_as(embeddings, corrupt);
    // Rows were written unit norm; float32 rounding stays far inside 1e-5.
    return index_from_files(std::move(records), matrix, 1e-5);
  } catch (const Error& e) {
    if (e.code() == corrupt) throw;
    throw Error(corrupt, std::string("index payload rejected: ") + e.what());
  }
}

void save_index(const Index& index, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_index(index));
}

Index load_index(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::corrupt_index, e.what());
  }
  return parse_index(bytes);
}

QueryEmbeddings QueryEmbeddings::parse(std::string_view jsonl) {
  QueryEmbeddings out;
  std::size_t line_no = 0;
  for (const auto line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("image_id") ||
        !j.at("image_id").is_string() || !j.contains("embedding") ||
        !j.at("embedding").is_array()) {
      throw Error(ErrorCode::parse_error,
                  "query embeddings line " + std::to_string(line_no) +
                      ": expected {\"image_id\", \"embedding\": [...]}");
    }
    std::vector<double> values;
    try {
      values = j.at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::parse_error,
                  "query embeddings line " + std::to_string(line_no) + ": non-numeric component");
    }
    auto id = j.at("image_id").get<std::string>();
    if (out.contains(id)) {
      throw Error(ErrorCode::duplicate_id,
                  "query embeddings line " + std::to_string(line_no) + ": duplicate image_id " + id);
    }
    out.add(std::move(id), normalize(std::span<const double>(values)));
  }
  return out;
}

QueryEmbeddings QueryEmbeddings::load(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void QueryEmbeddings::add(std::string image_id, Embedding embedding) {
  by_id_.insert_or_assign(std::move(image_id), std::move(embedding));
}

const Embedding& QueryEmbeddings::at(const std::string& image_id) const {
  const auto it = by_id_.find(image_id);
  if (it == by_id_.end()) {
    throw Error(ErrorCode::missing_embedding, "no query embedding for image_id " + image_id);
  }
  return it->second;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io_error, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace fashionrag::retrieval
