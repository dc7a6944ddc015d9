#include <catch_amalgamated.hpp>

#include <cstring>

#include "fashionrag/error.hpp"
#include "fashionrag/index_io.hpp"
#include "test_util.hpp"

using namespace fashionrag;
using namespace fashionrag::retrieval;
using Catch::Matchers::WithinAbs;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::io_error;
}

Index fixture_index() {
  return index_from_files(load_catalog(testutil::fixture("catalog.jsonl")),
                          load_embeddings(testutil::fixture("embeddings.bin")));
}

}  // namespace

TEST_CASE("fixture catalog and embeddings load") {
  const auto catalog = load_catalog(testutil::fixture("catalog.jsonl"));
  REQUIRE(catalog.size() == 10);
  CHECK(catalog[0].id == "p01");
  CHECK(catalog[0].fabric == "cotton");
  const auto m = load_embeddings(testutil::fixture("embeddings.bin"));
  CHECK(m.count == 10);
  CHECK(m.dim == 16);
  const auto idx = fixture_index();
  CHECK(idx.size() == 10);
  CHECK(idx.dim() == 16);
  // Raw labels are canonicalized ("Cotton" -> "cotton").
  CHECK(idx.records()[3].fabric == "cotton");
  CHECK(idx.records()[3].gender == "women");
}

TEST_CASE("catalog records round-trip") {
  CatalogRecord r;
  r.id = "x1";
  r.title = "Silk \"Slip\" Dress";
  r.description = "Bias cut.";
  r.fabric = "silk";
  r.category = "dress";
  const auto back = parse_catalog(serialize_catalog({r}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].title == r.title);
  CHECK(back[0].fabric == r.fabric);
  CHECK_FALSE(back[0].gender.has_value());
  CHECK(back[0].category == r.category);

  CHECK(parse_catalog("\n\n").empty());
  CHECK(code_of([] { parse_catalog("{\"id\": 3}"); }) == ErrorCode::parse_error);
  CHECK(code_of([] { parse_catalog("{oops"); }) == ErrorCode::parse_error);
}

TEST_CASE("embeddings serialize and parse") {
  EmbeddingMatrix m;
  m.count = 2;
  m.dim = 3;
  m.values = {1, 0, 0, 0, 0.6f, 0.8f};
  const auto bytes = serialize_embeddings(m);
  REQUIRE(bytes.size() == 16 + 6 * 4);
  CHECK(std::memcmp(bytes.data(), "RAGF", 4) == 0);
  const auto back = parse_embeddings(bytes);
  CHECK(back.count == 2);
  CHECK(back.dim == 3);
  CHECK(back.values == m.values);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK(code_of([&] { parse_embeddings(truncated); }) != ErrorCode::io_error);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(code_of([&] { parse_embeddings(bad_magic); }) != ErrorCode::io_error);
}

TEST_CASE("index_from_files validates norms and counts") {
  const auto catalog = load_catalog(testutil::fixture("catalog.jsonl"));
  auto m = load_embeddings(testutil::fixture("embeddings.bin"));
  auto short_catalog = catalog;
  short_catalog.pop_back();
  CHECK(code_of([&] { index_from_files(short_catalog, m); }) == ErrorCode::length_mismatch);
  auto scaled = m;
  for (std::size_t i = 0; i < scaled.dim; ++i) scaled.values[i] *= 1.01f;
  CHECK(code_of([&] { index_from_files(catalog, scaled); }) == ErrorCode::invalid_embedding);
  CHECK_NOTHROW(index_from_files(catalog, scaled, 0.05));
}

TEST_CASE("index.bin round-trips exactly") {
  const auto idx = fixture_index();
  testutil::TempDir dir("index");
  save_index(idx, dir / "index.bin");
  const auto back = load_index(dir / "index.bin");
  REQUIRE(back.size() == idx.size());
  REQUIRE(back.dim() == idx.dim());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    CHECK(back.records()[i].id == idx.records()[i].id);
    CHECK(back.records()[i].fabric == idx.records()[i].fabric);
    for (std::size_t d = 0; d < idx.dim(); ++d) {
      CHECK_THAT(back.embedding(i)[d], WithinAbs(idx.embedding(i)[d], 1e-7));
    }
  }
  // A second save of the loaded index is byte-identical.
  CHECK(serialize_index(back) == serialize_index(load_index(dir / "index.bin")));

  const auto queries = QueryEmbeddings::load(testutil::fixture("queries.jsonl"));
  const auto a = idx.search(queries.at("look_001"), 5);
  const auto b = back.search(queries.at("look_001"), 5);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].record.id == b[i].record.id);
}

TEST_CASE("corrupted index files raise corrupt_index") {
  const auto bytes = serialize_index(fixture_index());
  testutil::Gen gen(31);
  for (int i = 0; i < 200; ++i) {
    auto broken = bytes;
    const auto pos = static_cast<std::size_t>(gen.integer(0, static_cast<int>(bytes.size()) - 1));
    broken[pos] ^= static_cast<std::uint8_t>(gen.integer(1, 255));
    CHECK(code_of([&] { parse_index(broken); }) == ErrorCode::corrupt_index);
  }
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{7}, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> prefix(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK(code_of([&] { parse_index(prefix); }) == ErrorCode::corrupt_index);
  }
  testutil::TempDir dir("corrupt");
  CHECK(code_of([&] { load_index(dir / "absent.bin"); }) == ErrorCode::corrupt_index);
}

TEST_CASE("query embeddings sidecar") {
  const auto q = QueryEmbeddings::parse(
      "{\"image_id\":\"a\",\"embedding\":[3,4]}\n\n{\"image_id\":\"b\",\"embedding\":[0,1]}\n");
  CHECK(q.size() == 2);
  CHECK_THAT(q.at("a")[0], WithinAbs(0.6, 1e-12));
  CHECK(q.contains("b"));
  CHECK(code_of([&] { q.at("zzz"); }) == ErrorCode::missing_embedding);
  CHECK(code_of([] { QueryEmbeddings::parse("{\"image_id\":\"a\",\"embedding\":[0,0]}"); }) ==
        ErrorCode::invalid_embedding);
  CHECK(code_of([] { QueryEmbeddings::parse("{\"image_id\":\"a\"}"); }) == ErrorCode::parse_error);
  CHECK(code_of([] {
          QueryEmbeddings::parse("{\"image_id\":\"a\",\"embedding\":[1]}\n{\"image_id\":\"a\",\"embedding\":[1]}");
        }) == ErrorCode::duplicate_id);
}
