#pragma once

// Brute-force reference implementations used as test oracles. They are kept
// deliberately naive and share no code with the library beyond plain types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

// ---- retrieval ----

struct Hit {
  std::string id;
  long double score;
};

inline std::vector<Hit> brute_search(const std::vector<std::string>& ids,
                                     const std::vector<std::vector<double>>& unit_rows,
                                     const std::vector<double>& unit_query, std::size_t k) {
  std::vector<Hit> all;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    long double s = 0.0L;
    for (std::size_t d = 0; d < unit_query.size(); ++d) {
      s += static_cast<long double>(unit_rows[i][d]) * unit_query[d];
    }
    all.push_back({ids[i], s});
  }
  // Selection by repeated scans rather than a sort.
  std::vector<Hit> out;
  std::vector<bool> taken(all.size(), false);
  for (std::size_t round = 0; round < std::min(k, all.size()); ++round) {
    std::size_t best = all.size();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (taken[i]) continue;
      if (best == all.size() || all[i].score > all[best].score ||
          (all[i].score == all[best].score && all[i].id < all[best].id)) {
        best = i;
      }
    }
    taken[best] = true;
    out.push_back(all[best]);
  }
  return out;
}

inline std::vector<double> unit(std::vector<double> v) {
  long double n = 0.0L;
  for (double x : v) n += static_cast<long double>(x) * x;
  const long double r = std::sqrt(n);
  for (double& x : v) x = static_cast<double>(x / r);
  return v;
}

struct VoteResult {
  std::string label;
  long double confidence = 0.0L;
};

// Direct evaluation of the weighted vote in long double; labels are the
// facet values, similarities the neighbor scores.
inline VoteResult vote(const std::vector<std::pair<std::string, double>>& neighbors, double tau) {
  std::vector<std::string> labels;
  for (const auto& n : neighbors) {
    if (std::find(labels.begin(), labels.end(), n.first) == labels.end()) labels.push_back(n.first);
  }
  std::sort(labels.begin(), labels.end());
  long double total = 0.0L;
  std::vector<long double> scores;
  for (const auto& l : labels) {
    long double s = 0.0L;
    for (const auto& n : neighbors) {
      if (n.first == l) s += std::exp(static_cast<long double>(tau) * n.second);
    }
    scores.push_back(s);
    total += s;
  }
  VoteResult r;
  if (labels.empty()) return r;
  std::size_t best = 0;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  r.label = labels[best];
  r.confidence = scores[best] / total;
  return r;
}

// ---- detection ----

struct Rect {
  double x0, y0, x1, y1;
};

inline double rect_iou(const Rect& a, const Rect& b) {
  const double w = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double h = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = w * h;
  const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct Pred {
  std::string image;
  Rect box;
  double conf;
};

struct Gt {
  std::string image;
  Rect box;
};

// Single-class AP with the 101-point grid; nullopt when there is nothing to
// score. Precision at a grid point is the best precision at any recall >= r.
inline std::optional<double> ap(std::vector<Pred> preds, const std::vector<Gt>& gts, double thr) {
  if (gts.empty()) return preds.empty() ? std::nullopt : std::optional<double>(0.0);
  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // insertion sort keeps equal confidences in input order
  for (std::size_t i = 1; i < order.size(); ++i) {
    for (std::size_t j = i; j > 0 && preds[order[j]].conf > preds[order[j - 1]].conf; --j) {
      std::swap(order[j], order[j - 1]);
    }
  }
  std::vector<bool> used(gts.size(), false);
  std::vector<std::pair<double, double>> pr;  // (recall, precision)
  int tp = 0;
  int n = 0;
  for (std::size_t oi : order) {
    const auto& p = preds[oi];
    ++n;
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].image != p.image) continue;
      const double v = rect_iou(p.box, gts[g].box);
      if (v >= thr && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = true;
      ++tp;
    }
    pr.emplace_back(static_cast<double>(tp) / static_cast<double>(gts.size()),
                    static_cast<double>(tp) / static_cast<double>(n));
  }
  double sum = 0.0;
  for (int t = 0; t <= 100; ++t) {
    const double r = t / 100.0;
    double best = 0.0;
    for (const auto& [rec, prec] : pr) {
      if (rec >= r) best = std::max(best, prec);
    }
    sum += best;
  }
  return sum / 101.0;
}

// ---- text metrics over pre-tokenized input ----

inline std::size_t count_of(const std::vector<Tokens>& grams, const Tokens& g) {
  return static_cast<std::size_t>(std::count(grams.begin(), grams.end(), g));
}

inline std::vector<Tokens> grams(const Tokens& t, std::size_t n) {
  std::vector<Tokens> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) out.emplace_back(t.begin() + i, t.begin() + i + n);
  return out;
}

inline std::size_t clipped(const Tokens& cand, const Tokens& ref, std::size_t n) {
  const auto cg = grams(cand, n);
  const auto rg = grams(ref, n);
  std::vector<Tokens> distinct;
  for (const auto& g : cg) {
    if (std::find(distinct.begin(), distinct.end(), g) == distinct.end()) distinct.push_back(g);
  }
  std::size_t total = 0;
  for (const auto& g : distinct) total += std::min(count_of(cg, g), count_of(rg, g));
  return total;
}

inline double bleu(const Tokens& cand, const Tokens& ref) {
  if (cand.empty()) return 0.0;
  const std::size_t order = std::min<std::size_t>(4, cand.size());
  double prod = 1.0;
  for (std::size_t n = 1; n <= order; ++n) {
    prod *= static_cast<double>(clipped(cand, ref, n)) / static_cast<double>(cand.size() - n + 1);
  }
  if (prod == 0.0) return 0.0;
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::pow(prod, 1.0 / static_cast<double>(order));
}

inline double fscore(double p, double r) { return (p == 0.0 && r == 0.0) ? 0.0 : 2 * p * r / (p + r); }

inline double rouge_n(const Tokens& cand, const Tokens& ref, std::size_t n) {
  if (cand.empty() || ref.empty()) return 0.0;
  const auto cg = grams(cand, n);
  const auto rg = grams(ref, n);
  if (cg.empty() || rg.empty()) return (cg.empty() && rg.empty() && cand == ref) ? 1.0 : 0.0;
  const double o = static_cast<double>(clipped(cand, ref, n));
  return fscore(o / static_cast<double>(cg.size()), o / static_cast<double>(rg.size()));
}

// LCS by exhaustive recursion with memo.
inline std::size_t lcs(const Tokens& a, const Tokens& b, std::size_t i, std::size_t j,
                       std::map<std::pair<std::size_t, std::size_t>, std::size_t>& memo) {
  if (i == a.size() || j == b.size()) return 0;
  const auto key = std::make_pair(i, j);
  if (const auto it = memo.find(key); it != memo.end()) return it->second;
  std::size_t v = a[i] == b[j] ? 1 + lcs(a, b, i + 1, j + 1, memo)
                               : std::max(lcs(a, b, i + 1, j, memo), lcs(a, b, i, j + 1, memo));
  memo[key] = v;
  return v;
}

inline double rouge_l(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  const double l = static_cast<double>(lcs(cand, ref, 0, 0, memo));
  return fscore(l / static_cast<double>(cand.size()), l / static_cast<double>(ref.size()));
}

// Alignment rule: two passes (surface form, then stem). Within a pass, a
// candidate token continues the previous token's alignment when the next
// reference position is free and equal, otherwise takes the leftmost free
// equal reference position.
inline double meteor(const Tokens& cand, const Tokens& ref, const Tokens& cand_stem, const Tokens& ref_stem) {
  if (cand.empty() || ref.empty()) return 0.0;
  std::vector<int> al(cand.size(), -1);
  std::vector<bool> busy(ref.size(), false);
  for (int pass = 0; pass < 2; ++pass) {
    const Tokens& c = pass == 0 ? cand : cand_stem;
    const Tokens& r = pass == 0 ? ref : ref_stem;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (al[i] >= 0) continue;
      int pick = -1;
      if (i > 0 && al[i - 1] >= 0) {
        const auto nxt = static_cast<std::size_t>(al[i - 1] + 1);
        if (nxt < r.size() && !busy[nxt] && r[nxt] == c[i]) pick = static_cast<int>(nxt);
      }
      for (std::size_t j = 0; pick < 0 && j < r.size(); ++j) {
        if (!busy[j] && r[j] == c[i]) pick = static_cast<int>(j);
      }
      if (pick >= 0) {
        al[i] = pick;
        busy[static_cast<std::size_t>(pick)] = true;
      }
    }
  }
  int m = 0;
  int chunks = 0;
  for (std::size_t i = 0; i < al.size(); ++i) {
    if (al[i] < 0) continue;
    ++m;
    if (!(i > 0 && al[i - 1] >= 0 && al[i - 1] + 1 == al[i])) ++chunks;
  }
  if (m == 0) return 0.0;
  const double p = static_cast<double>(m) / static_cast<double>(cand.size());
  const double r = static_cast<double>(m) / static_cast<double>(ref.size());
  const double f = 10 * p * r / (r + 9 * p);
  const double frag = static_cast<double>(chunks) / static_cast<double>(m);
  return f * (1.0 - 0.5 * frag * frag * frag);
}

// ---- hashtags over pre-tokenized tags ----

struct Tag {
  Tokens tokens;
  std::string squashed;
};

inline bool hit(const std::vector<Tag>& tags, const std::vector<Tokens>& forms) {
  for (const auto& f : forms) {
    std::string sq;
    for (const auto& t : f) sq += t;
    for (const auto& tag : tags) {
      if (tag.squashed.find(sq) != std::string::npos) return true;
      for (std::size_t i = 0; i + f.size() <= tag.tokens.size(); ++i) {
        bool all = true;
        for (std::size_t k = 0; k < f.size(); ++k) all = all && tag.tokens[i + k] == f[k];
        if (all) return true;
      }
    }
  }
  return false;
}

inline double distinct(const std::vector<Tokens>& per_image, std::size_t n) {
  std::vector<Tokens> all;
  for (const auto& seq : per_image) {
    for (auto& g : grams(seq, n)) all.push_back(g);
  }
  std::vector<Tokens> uniq;
  for (const auto& g : all) {
    if (std::find(uniq.begin(), uniq.end(), g) == uniq.end()) uniq.push_back(g);
  }
  return static_cast<double>(uniq.size()) / static_cast<double>(all.size());
}

}  // namespace oracle
