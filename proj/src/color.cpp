#include "fashionrag/color.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "fashionrag/error.hpp"
#include "fashionrag/text.hpp"
#include "builtin_data.hpp"

namespace fashionrag::color {

namespace {

double srgb_to_linear(double channel) noexcept {
  const double c = channel / 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) noexcept {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

double squared_distance(const RgbTriple& a, const Rgb& p) noexcept {
  const double dr = a.r - p.r;
  const double dg = a.g - p.g;
  const double db = a.b - p.b;
  return dr * dr + dg * dg + db * db;
}

double squared_distance(const RgbTriple& a, const RgbTriple& b) noexcept {
  const double dr = a.r - b.r;
  const double dg = a.g - b.g;
  const double db = a.b - b.b;
  return dr * dr + dg * dg + db * db;
}

// Portable [0,1) double from a 64-bit engine; std distributions differ across
// standard libraries and would break cross-platform determinism.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<RgbTriple> kmeans_plus_plus(const std::vector<Rgb>& pixels, int k,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = pixels.size();
  std::vector<RgbTriple> centers;
  const auto first = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n));
  const Rgb& p0 = pixels[std::min(first, n - 1)];
  centers.push_back({double(p0.r), double(p0.g), double(p0.b)});

  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(centers.back(), pixels[i]));
      total += nearest[i];
    }
    // Every pixel already coincides with a center: further seeds would be duplicates.
    if (total <= 0.0) break;
    const double target = unit_uniform(rng) * total;
    double cumulative = 0.0;
    std::size_t chosen = n;
    for (std::size_t i = 0; i < n; ++i) {
      cumulative += nearest[i];
      if (nearest[i] > 0.0 && cumulative > target) {
        chosen = i;
        break;
      }
    }
    if (chosen == n) {
      // Rounding left target at the very top of the range; take the last candidate.
      for (std::size_t i = n; i-- > 0;) {
        if (nearest[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    const Rgb& p = pixels[chosen];
    centers.push_back({double(p.r), double(p.g), double(p.b)});
  }
  return centers;
}

}  // namespace

double lab_distance(const Lab& x, const Lab& y) noexcept {
  return std::sqrt((x.l - y.l) * (x.l - y.l) + (x.a - y.a) * (x.a - y.a) +
                   (x.b - y.b) * (x.b - y.b));
}

Lab rgb_to_lab(RgbTriple rgb) noexcept {
  const double r = srgb_to_linear(rgb.r);
  const double g = srgb_to_linear(rgb.g);
  const double b = srgb_to_linear(rgb.b);

  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

  // D65 reference white.
  const double fx = lab_f(x / 0.95047);
  const double fy = lab_f(y / 1.00000);
  const double fz = lab_f(z / 1.08883);
  return Lab{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Palette::Palette(std::vector<PaletteEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> names;
  for (const auto& e : entries_) {
    if (e.name.empty()) throw Error(ErrorCode::config_error, "palette entry with empty name");
    if (!names.insert(e.name).second) {
      throw Error(ErrorCode::config_error, "duplicate palette name: " + e.name);
    }
  }
  if (entries_.size() < 16) {
    throw Error(ErrorCode::config_error, "palette needs at least 16 entries, got " +
                                             std::to_string(entries_.size()));
  }
  if (!names.contains("white") || !names.contains("black")) {
    throw Error(ErrorCode::config_error, "palette must contain \"white\" and \"black\"");
  }
}

Palette Palette::parse(std::string_view text) {
  std::vector<PaletteEntry> entries;
  std::size_t line_no = 0;
  for (std::string_view line : text::split_lines(text)) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 4) {
      throw Error(ErrorCode::parse_error,
                  "palette line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    PaletteEntry entry;
    entry.name = std::string(text::trim(fields[0]));
    const auto l = text::parse_double(fields[1]);
    const auto a = text::parse_double(fields[2]);
    const auto b = text::parse_double(fields[3]);
    if (!l || !a || !b) {
      throw Error(ErrorCode::parse_error,
                  "palette line " + std::to_string(line_no) + ": non-numeric Lab coordinate");
    }
    entry.lab = Lab{*l, *a, *b};
    entries.push_back(std::move(entry));
  }
  return Palette(std::move(entries));
}

Palette Palette::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open palette: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const Palette& Palette::builtin() {
  static const Palette palette = parse(data::kPaletteTsv);
  return palette;
}

const PaletteEntry* Palette::find(std::string_view name) const noexcept {
  const auto it = std::find_if(entries_.begin(), entries_.end(),
                               [&](const PaletteEntry& e) { return e.name == name; });
  return it == entries_.end() ? nullptr : &*it;
}

const std::string& name_color(const Lab& lab, const std::vector<PaletteEntry>& entries) {
  if (entries.empty()) throw Error(ErrorCode::config_error, "cannot name a color with an empty palette");
  const PaletteEntry* best = &entries.front();
  double best_d = lab_distance(lab, best->lab);
  for (const auto& e : entries) {
    const double d = lab_distance(lab, e.lab);
    if (d < best_d || (d == best_d && e.name < best->name)) {
      best = &e;
      best_d = d;
    }
  }
  return best->name;
}

PixelSample sample_pixels(const ImageRegion& crop, std::size_t max_samples) {
  const std::size_t count = crop.pixel_count();
  if (count == 0) throw Error(ErrorCode::degenerate_input, "cannot sample an empty crop");
  if (max_samples == 0) throw Error(ErrorCode::degenerate_input, "max_samples must be positive");

  PixelSample sample;
  sample.source_box = crop.rect();
  if (count <= max_samples) {
    sample.pixels.reserve(count);
    for (int y = 0; y < crop.height(); ++y) {
      for (int x = 0; x < crop.width(); ++x) sample.pixels.push_back(crop.at(x, y));
    }
    return sample;
  }
  sample.pixels.reserve(max_samples);
  for (std::size_t i = 0; i < max_samples; ++i) {
    // count > max_samples, so these indices are strictly increasing.
    const auto index = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(i) * count) / max_samples);
    sample.pixels.push_back(crop.at_index(index));
  }
  return sample;
}

KMeansResult kmeans_cluster(const PixelSample& sample, int k, std::uint64_t seed,
                            int max_iterations, double convergence_shift,
                            const KMeansObserver& observer) {
  const auto& pixels = sample.pixels;
  if (pixels.empty()) throw Error(ErrorCode::degenerate_input, "k-means needs at least one pixel");
  if (k < 1) throw Error(ErrorCode::degenerate_input, "k must be at least 1");

  std::vector<RgbTriple> centers = kmeans_plus_plus(pixels, k, seed);
  std::vector<std::size_t> assignment(pixels.size(), 0);
  std::vector<std::size_t> counts;
  KMeansResult result;

  for (int iter = 0; iter < std::max(1, max_iterations); ++iter) {
    // Long double keeps the accumulated SSE stable enough to compare across steps.
    long double sse = 0.0L;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(centers[0], pixels[i]);
      for (std::size_t c = 1; c < centers.size(); ++c) {
        const double d = squared_distance(centers[c], pixels[i]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assignment[i] = best;
      sse += best_d;
    }
    result.sse_trace.push_back(static_cast<double>(sse));
    if (observer) observer(iter, centers, assignment);
    result.iterations = iter + 1;

    std::vector<std::array<std::uint64_t, 3>> sums(centers.size(), {0, 0, 0});
    counts.assign(centers.size(), 0);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      auto& s = sums[assignment[i]];
      s[0] += pixels[i].r;
      s[1] += pixels[i].g;
      s[2] += pixels[i].b;
      ++counts[assignment[i]];
    }

    std::vector<RgbTriple> updated;
    std::vector<std::size_t> kept_counts;
    std::vector<std::size_t> remap(centers.size(), 0);
    double max_shift = 0.0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] == 0) continue;  // empty clusters are dropped, not reseeded
      const double n = static_cast<double>(counts[c]);
      const RgbTriple mean{double(sums[c][0]) / n, double(sums[c][1]) / n, double(sums[c][2]) / n};
      max_shift = std::max(max_shift, std::sqrt(squared_distance(mean, centers[c])));
      remap[c] = updated.size();
      updated.push_back(mean);
      kept_counts.push_back(counts[c]);
    }
    for (auto& a : assignment) a = remap[a];
    centers = std::move(updated);
    counts = std::move(kept_counts);
    if (max_shift < convergence_shift) break;
  }

  const double total = static_cast<double>(pixels.size());
  for (std::size_t c = 0; c < centers.size(); ++c) {
    ColorCluster cluster;
    cluster.centroid_rgb = centers[c];
    cluster.centroid_lab = rgb_to_lab(centers[c]);
    cluster.coverage = static_cast<double>(counts[c]) / total;
    cluster.size = counts[c];
    result.clusters.push_back(cluster);
  }
  std::sort(result.clusters.begin(), result.clusters.end(),
            [](const ColorCluster& a, const ColorCluster& b) {
              if (a.size != b.size) return a.size > b.size;
              return a.centroid_rgb < b.centroid_rgb;
            });
  return result;
}

bool is_near_white(const ColorCluster& c, const ColorConfig& cfg) noexcept {
  return c.centroid_lab.l > cfg.near_white_l;
}

bool is_near_black(const ColorCluster& c, const ColorConfig& cfg) noexcept {
  return c.centroid_lab.l < cfg.near_black_l;
}

ColorDescriptor dominant_colors(const ImageRegion& crop, const ColorConfig& cfg,
                                const Palette& palette) {
  const PixelSample sample = sample_pixels(crop, cfg.max_samples);
  const KMeansResult km =
      kmeans_cluster(sample, cfg.k, cfg.seed, cfg.max_iterations, cfg.convergence_shift);

  std::vector<ColorCluster> survivors;
  for (const auto& c : km.clusters) {
    const bool achromatic_extreme = is_near_white(c, cfg) || is_near_black(c, cfg);
    if (achromatic_extreme && c.coverage < cfg.min_coverage) continue;
    survivors.push_back(c);
  }
  if (survivors.empty()) survivors.push_back(km.clusters.front());

  ColorDescriptor descriptor;
  descriptor.primary = NamedColor{name_color(survivors[0].centroid_lab, palette), survivors[0]};
  // A secondary tone must itself clear the coverage floor; sub-floor specks are noise.
  if (survivors.size() > 1 && survivors[1].coverage >= cfg.min_coverage) {
    descriptor.secondary = NamedColor{name_color(survivors[1].centroid_lab, palette), survivors[1]};
  }
  return descriptor;
}

}  // namespace fashionrag::color
