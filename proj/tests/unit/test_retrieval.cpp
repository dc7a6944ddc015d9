#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "fashionrag/error.hpp"
#include "fashionrag/retrieval.hpp"
#include "oracles.hpp"
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

CatalogRecord rec(std::string id, std::optional<std::string> fabric = std::nullopt, std::string title = "") {
  CatalogRecord r;
  r.id = std::move(id);
  r.title = title.empty() ? "Item " + r.id : std::move(title);
  r.fabric = std::move(fabric);
  return r;
}

Neighbor nb(std::string label, double s) { return Neighbor{rec("n", std::move(label)), s}; }

double norm_of(const Embedding& e) {
  double s = 0.0;
  for (double v : e.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("normalize examples") {
  const std::vector<double> v{3.0, 4.0};
  const auto e = normalize(std::span<const double>(v));
  CHECK_THAT(e[0], WithinAbs(0.6, 1e-12));
  CHECK_THAT(e[1], WithinAbs(0.8, 1e-12));
  const std::vector<double> vals(e.values().begin(), e.values().end());
  const auto again = normalize(std::span<const double>(vals));
  CHECK_THAT(again[0], WithinAbs(e[0], 1e-12));
  CHECK_THAT(again[1], WithinAbs(e[1], 1e-12));

  const std::vector<double> zero{0.0, 0.0};
  CHECK(code_of([&] { normalize(std::span<const double>(zero)); }) == ErrorCode::invalid_embedding);
  const std::vector<double> nan{1.0, std::nan("")};
  CHECK(code_of([&] { normalize(std::span<const double>(nan)); }) == ErrorCode::invalid_embedding);
  const std::vector<double> empty;
  CHECK(code_of([&] { normalize(std::span<const double>(empty)); }) == ErrorCode::invalid_embedding);
}

TEST_CASE("normalize produces unit vectors") {
  testutil::Gen gen(21);
  for (int i = 0; i < 200; ++i) {
    auto v = gen.gaussian_vector(static_cast<std::size_t>(gen.integer(1, 64)));
    for (auto& x : v) x *= gen.uniform(1e-3, 1e3);
    CHECK_THAT(norm_of(normalize(std::span<const double>(v))), WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("build_index examples and errors") {
  const std::vector<std::vector<double>> emb{{1, 0, 0, 0}, {0, 2, 0, 0}, {0, 0, 3, 4}};
  const auto idx = Index::build({rec("a"), rec("b"), rec("c")}, emb);
  CHECK(idx.size() == 3);
  CHECK(idx.dim() == 4);
  for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(norm_of(idx.embedding(i)), WithinAbs(1.0, 1e-12));

  CHECK(code_of([&] { Index::build({rec("a"), rec("b")}, emb); }) == ErrorCode::length_mismatch);
  CHECK(code_of([&] { Index::build({rec("a"), rec("a"), rec("c")}, emb); }) == ErrorCode::duplicate_id);
  CHECK(code_of([&] {
          Index::build({rec("a"), rec("b")}, std::vector<std::vector<double>>{{1, 0}, {1, 0, 0}});
        }) == ErrorCode::dimension_mismatch);
  CHECK(code_of([&] {
          Index::build({rec("a")}, std::vector<std::vector<double>>{{0, 0}});
        }) == ErrorCode::invalid_embedding);
}

TEST_CASE("search examples") {
  const std::vector<std::vector<double>> emb{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const auto idx = Index::build({rec("a"), rec("b"), rec("c")}, emb);
  const std::vector<double> q{0, 1, 0};
  auto hits = idx.search(normalize(std::span<const double>(q)), 1);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].record.id == "b");
  CHECK_THAT(hits[0].similarity, WithinAbs(1.0, 1e-12));

  hits = idx.search(normalize(std::span<const double>(q)), 10);
  REQUIRE(hits.size() == 3);
  // a and c tie at 0: ascending id.
  CHECK(hits[1].record.id == "a");
  CHECK(hits[2].record.id == "c");

  const std::vector<double> q2{1, 0};
  CHECK(code_of([&] { idx.search(normalize(std::span<const double>(q2)), 1); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("search matches a brute-force scan") {
  testutil::Gen gen(22);
  for (int round = 0; round < 20; ++round) {
    const auto n = static_cast<std::size_t>(gen.integer(1, 120));
    const auto dim = static_cast<std::size_t>(gen.integer(2, 24));
    std::vector<CatalogRecord> records;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> unit_rows;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("r" + std::to_string(1000 + gen.integer(0, 1'000'000)) + "_" + std::to_string(i));
      records.push_back(rec(ids.back()));
      rows.push_back(gen.gaussian_vector(dim));
      unit_rows.push_back(oracle::unit(rows.back()));
    }
    // Exact duplicates exercise the tie rule.
    if (n > 3) {
      rows[1] = rows[0];
      unit_rows[1] = unit_rows[0];
    }
    const auto idx = Index::build(records, rows);
    for (int qi = 0; qi < 5; ++qi) {
      const auto q = gen.gaussian_vector(dim);
      const auto k = static_cast<std::size_t>(gen.integer(1, 30));
      const auto got = idx.search(normalize(std::span<const double>(q)), k);
      const auto want = oracle::brute_search(ids, unit_rows, oracle::unit(q), k);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].record.id == want[i].id);
        CHECK_THAT(got[i].similarity, WithinAbs(static_cast<double>(want[i].score), 1e-9));
      }
    }
  }
}

TEST_CASE("vote_attribute worked example") {
  const std::vector<Neighbor> ns{nb("cotton", 0.9), nb("silk", 0.95), nb("cotton", 0.8)};
  const auto p = vote_attribute(ns, Facet::fabric, VoteConfig{1.0, 0.4, 20});
  CHECK(p.label == "cotton");
  // e^0.9 + e^0.8 over that plus e^0.95, evaluated to 21 digits.
  CHECK_THAT(p.confidence, WithinAbs(0.644373306578314712803, 1e-12));
  REQUIRE(p.votes.size() == 2);
  CHECK(p.votes[0].first == "cotton");
  CHECK_THAT(p.votes[0].second, WithinAbs(4.685144039649417, 1e-12));
  CHECK(p.votes[1].first == "silk");
  CHECK_THAT(p.votes[1].second, WithinAbs(2.585709659315846, 1e-12));

  std::vector<Neighbor> shifted = ns;
  for (auto& n : shifted) n.similarity += 0.05;
  const auto q = vote_attribute(shifted, Facet::fabric, VoteConfig{1.0, 0.4, 20});
  CHECK(q.label == p.label);
  CHECK_THAT(q.confidence, WithinAbs(p.confidence, 1e-12));
}

TEST_CASE("vote_attribute edge cases") {
  const auto single = vote_attribute({nb("linen", -0.3)}, Facet::fabric, VoteConfig{});
  CHECK(single.label == "linen");
  CHECK(single.confidence == 1.0);

  const auto none = vote_attribute({Neighbor{rec("x"), 0.9}}, Facet::fabric, VoteConfig{});
  CHECK_FALSE(none.known());
  CHECK(none.confidence == 0.0);
  CHECK(vote_attribute({}, Facet::gender, VoteConfig{}).confidence == 0.0);

  // Exact tie goes to the smaller label.
  const auto tie = vote_attribute({nb("silk", 0.5), nb("cotton", 0.5)}, Facet::fabric, VoteConfig{1.0, 0.0, 20});
  CHECK(tie.label == "cotton");
  CHECK(tie.confidence == 0.5);

  // Below threshold: unknown, confidence kept.
  const auto low = vote_attribute({nb("a", 0.5), nb("b", 0.5), nb("c", 0.5)}, Facet::fabric, VoteConfig{1.0, 0.4, 20});
  CHECK_FALSE(low.known());
  CHECK_THAT(low.confidence, WithinAbs(1.0 / 3.0, 1e-12));

  // Index construction canonicalizes facet labels.
  const std::vector<std::vector<double>> emb{{1, 0}, {0, 1}};
  auto r2 = rec("b", "  ");
  const auto idx = Index::build({rec("a", " Cotton"), r2}, emb);
  CHECK(*idx.records()[0].fabric == "cotton");
  CHECK_FALSE(idx.records()[1].fabric.has_value());
}

TEST_CASE("large tau concentrates on the top neighbor") {
  testutil::Gen gen(23);
  for (int i = 0; i < 100; ++i) {
    std::vector<Neighbor> ns;
    const std::vector<std::string> labels{"a", "b", "c", "d"};
    for (int j = gen.integer(2, 12); j > 0; --j) ns.push_back(nb(gen.pick(labels), gen.uniform(-1, 1)));
    std::sort(ns.begin(), ns.end(), [](const Neighbor& x, const Neighbor& y) { return x.similarity > y.similarity; });
    if (ns[0].similarity - ns[1].similarity < 0.2) continue;
    const auto p = vote_attribute(ns, Facet::fabric, VoteConfig{60.0, 0.4, 20});
    CHECK(p.label == *ns[0].record.fabric);
  }
}

TEST_CASE("vote_attribute agrees with the direct oracle") {
  testutil::Gen gen(24);
  const std::vector<std::string> labels{"cotton", "silk", "linen", "wool", "denim"};
  for (int i = 0; i < 500; ++i) {
    std::vector<Neighbor> ns;
    std::vector<std::pair<std::string, double>> plain;
    const int nl = gen.integer(1, 5);
    for (int j = gen.integer(1, 20); j > 0; --j) {
      const auto& l = labels[static_cast<std::size_t>(gen.integer(0, nl - 1))];
      const double s = gen.uniform(-1, 1);
      ns.push_back(nb(l, s));
      plain.emplace_back(l, s);
    }
    const double tau = gen.uniform(0.5, 20.0);
    const auto got = vote_attribute(ns, Facet::fabric, VoteConfig{tau, 0.0, 20});
    const auto want = oracle::vote(plain, tau);
    CHECK(got.label == want.label);
    CHECK_THAT(got.confidence, WithinAbs(static_cast<double>(want.confidence), 1e-9));
    double total = 0.0;
    for (const auto& [l, s] : got.votes) total += s;
    double share = 0.0;
    for (const auto& [l, s] : got.votes) share += s / total;
    CHECK_THAT(share, WithinAbs(1.0, 1e-9));

    const double c = gen.uniform(-0.5, 0.5);
    auto shifted = ns;
    for (auto& n : shifted) n.similarity += c;
    const auto sh = vote_attribute(shifted, Facet::fabric, VoteConfig{tau, 0.0, 20});
    CHECK(sh.label == got.label);
    CHECK_THAT(sh.confidence, WithinAbs(got.confidence, 1e-9));

    auto perm = ns;
    std::reverse(perm.begin(), perm.end());
    const auto pr = vote_attribute(perm, Facet::fabric, VoteConfig{tau, 0.0, 20});
    CHECK(pr.label == got.label);
    CHECK_THAT(pr.confidence, WithinAbs(got.confidence, 1e-12));
  }
}

TEST_CASE("sample_snippets") {
  std::vector<Neighbor> ns;
  for (int i = 0; i < 5; ++i) ns.push_back(Neighbor{rec("p" + std::to_string(i), std::nullopt, "Title " + std::to_string(i)), 0.9 - 0.1 * i});
  CHECK(sample_snippets(ns, 3) == std::vector<std::string>{"Title 0", "Title 1", "Title 2"});

  ns[1].record.title = "title 0";
  CHECK(sample_snippets(ns, 3) == std::vector<std::string>{"Title 0", "Title 2", "Title 3"});

  ns[0].record.title = " ";
  ns[0].record.description = "Soft drape. Lined.";
  CHECK(sample_snippets(ns, 1) == std::vector<std::string>{"Soft drape."});

  std::vector<Neighbor> blank{Neighbor{rec("z"), 0.5}};
  blank[0].record.title = "";
  CHECK(sample_snippets(blank, 3).empty());
  CHECK(sample_snippets({}, 3).empty());
}
