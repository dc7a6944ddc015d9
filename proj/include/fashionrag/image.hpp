#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fashionrag {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Half-open integer pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  std::size_t area() const noexcept {
    return width() > 0 && height() > 0
               ? static_cast<std::size_t>(width()) * static_cast<std::size_t>(height())
               : 0;
  }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

// Decoded 8-bit RGB raster, row-major.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});
  Image(int width, int height, std::vector<Rgb> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  const Rgb& at(int x, int y) const { return pixels_[index(x, y)]; }
  Rgb& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const Rgb> pixels() const noexcept { return pixels_; }

  // Paints the rectangle (clamped to the raster) with a solid color.
  void fill(PixelRect rect, Rgb color);

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

// Non-owning view of a rectangular part of an Image. The image must outlive it.
class ImageRegion {
 public:
  ImageRegion(const Image& image, PixelRect rect);
  explicit ImageRegion(const Image& image);

  int width() const noexcept { return rect_.width(); }
  int height() const noexcept { return rect_.height(); }
  std::size_t pixel_count() const noexcept { return rect_.area(); }
  const PixelRect& rect() const noexcept { return rect_; }

  // Pixel at region-local coordinates.
  const Rgb& at(int x, int y) const { return image_->at(rect_.x0 + x, rect_.y0 + y); }

  // Pixel by region-local row-major index.
  const Rgb& at_index(std::size_t i) const {
    const auto w = static_cast<std::size_t>(width());
    return at(static_cast<int>(i % w), static_cast<int>(i / w));
  }

 private:
  const Image* image_;
  PixelRect rect_;
};

// PNG and JPEG are detected by signature, not by extension.
Image read_image(const std::filesystem::path& path);
Image decode_image(std::span<const std::uint8_t> bytes);
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace fashionrag
