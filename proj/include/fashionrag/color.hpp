#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fashionrag/image.hpp"

namespace fashionrag::color {

struct RgbTriple {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  friend bool operator==(const RgbTriple&, const RgbTriple&) = default;
  friend auto operator<=>(const RgbTriple&, const RgbTriple&) = default;
};

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const Lab&, const Lab&) = default;
};

double lab_distance(const Lab& x, const Lab& y) noexcept;

// sRGB (8-bit or real-valued channels in [0,255]) -> XYZ (D65) -> CIELAB.
Lab rgb_to_lab(RgbTriple rgb) noexcept;
inline Lab rgb_to_lab(Rgb rgb) noexcept { return rgb_to_lab(RgbTriple{double(rgb.r), double(rgb.g), double(rgb.b)}); }

struct PixelSample {
  std::vector<Rgb> pixels;
  PixelRect source_box;
};

struct ColorCluster {
  RgbTriple centroid_rgb;
  Lab centroid_lab;
  double coverage = 0.0;
  std::size_t size = 0;
};

struct KMeansResult {
  // Sorted by coverage descending, ties by lexicographic centroid.
  std::vector<ColorCluster> clusters;
  // Within-cluster SSE after each assignment step.
  std::vector<double> sse_trace;
  int iterations = 0;
};

struct PaletteEntry {
  std::string name;
  Lab lab;
};

class Palette {
 public:
  Palette() = default;
  // Throws config_error unless names are unique, there are >= 16 entries and
  // both "white" and "black" are present.
  explicit Palette(std::vector<PaletteEntry> entries);

  // `name<TAB>L<TAB>a<TAB>b`, '#' comments and blank lines ignored.
  static Palette parse(std::string_view text);
  static Palette load(const std::filesystem::path& path);
  // The palette shipped in data/palette.tsv, compiled in.
  static const Palette& builtin();

  const std::vector<PaletteEntry>& entries() const noexcept { return entries_; }
  const PaletteEntry* find(std::string_view name) const noexcept;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<PaletteEntry> entries_;
};

// Nearest entry by Euclidean Lab distance; ties go to the smaller name.
// Works on any non-empty entry list (the Palette invariants are not required).
const std::string& name_color(const Lab& lab, const std::vector<PaletteEntry>& entries);
inline const std::string& name_color(const Lab& lab, const Palette& palette) {
  return name_color(lab, palette.entries());
}

struct NamedColor {
  std::string name;
  ColorCluster cluster;
};

struct ColorDescriptor {
  NamedColor primary;
  std::optional<NamedColor> secondary;
};

struct ColorConfig {
  int k = 4;
  std::size_t max_samples = 10000;
  std::uint64_t seed = 42;
  double near_white_l = 92.0;
  double near_black_l = 10.0;
  double min_coverage = 0.06;
  int max_iterations = 50;
  double convergence_shift = 0.5;
};

// All pixels in row-major order when the region holds at most max_samples,
// otherwise exactly max_samples pixels taken at a uniform stride.
PixelSample sample_pixels(const ImageRegion& crop, std::size_t max_samples);

// Called after every assignment step with the centers used and each pixel's
// center index.
using KMeansObserver = std::function<void(int iteration, std::span<const RgbTriple> centers,
                                          std::span<const std::size_t> assignment)>;

KMeansResult kmeans_cluster(const PixelSample& sample, int k, std::uint64_t seed,
                            int max_iterations = 50, double convergence_shift = 0.5,
                            const KMeansObserver& observer = {});

bool is_near_white(const ColorCluster& c, const ColorConfig& cfg) noexcept;
bool is_near_black(const ColorCluster& c, const ColorConfig& cfg) noexcept;

ColorDescriptor dominant_colors(const ImageRegion& crop, const ColorConfig& cfg,
                                const Palette& palette);

}  // namespace fashionrag::color
