#include "fashionrag/image.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "fashionrag/error.hpp"

namespace fashionrag {

Image::Image(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::degenerate_input, "negative image dimensions");
  }
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Image::Image(int width, int height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0 ||
      pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::degenerate_input, "pixel buffer does not match image dimensions");
  }
}

void Image::fill(PixelRect rect, Rgb color) {
  const int x0 = std::clamp(rect.x0, 0, width_);
  const int x1 = std::clamp(rect.x1, 0, width_);
  const int y0 = std::clamp(rect.y0, 0, height_);
  const int y1 = std::clamp(rect.y1, 0, height_);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) at(x, y) = color;
  }
}

ImageRegion::ImageRegion(const Image& image, PixelRect rect) : image_(&image), rect_(rect) {
  if (rect.x0 < 0 || rect.y0 < 0 || rect.x1 > image.width() || rect.y1 > image.height() ||
      rect.x0 > rect.x1 || rect.y0 > rect.y1) {
    throw Error(ErrorCode::degenerate_input, "region lies outside the image");
  }
}

ImageRegion::ImageRegion(const Image& image)
    : ImageRegion(image, PixelRect{0, 0, image.width(), image.height()}) {}

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

struct MemoryReader {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->offset + length > reader->bytes.size()) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, reader->bytes.data() + reader->offset, length);
  reader->offset += length;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw Error(ErrorCode::io_error, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::io_error, "png_create_info_struct failed");
  }

  // State mutated after setjmp lives behind a pointer fixed before it.
  struct State {
    MemoryReader reader;
    std::vector<png_byte> buffer;
    std::vector<png_bytep> rows;
  };
  const auto state = std::make_unique<State>(State{MemoryReader{bytes, 0}, {}, {}});

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::parse_error, "malformed PNG data");
  }

  png_set_read_fn(png, &state->reader, png_read_memory);
  png_read_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  // Alpha is dropped; garments are judged on their stored RGB values.
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const std::size_t stride = png_get_rowbytes(png, info);
  state->buffer.resize(stride * height);
  state->rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) state->rows[y] = state->buffer.data() + y * stride;
  png_read_image(png, state->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  std::vector<Rgb> pixels(static_cast<std::size_t>(width) * height);
  for (png_uint_32 y = 0; y < height; ++y) {
    for (png_uint_32 x = 0; x < width; ++x) {
      const png_byte* p = state->rows[y] + 3 * x;
      pixels[static_cast<std::size_t>(y) * width + x] = Rgb{p[0], p[1], p[2]};
    }
  }
  return Image(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;

  const auto pixels = std::make_unique<std::vector<Rgb>>();
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::parse_error, std::string("malformed JPEG data: ") + err.message);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  const auto width = cinfo.output_width;
  const auto height = cinfo.output_height;
  pixels->resize(static_cast<std::size_t>(width) * height);
  const auto row_buffer = std::make_unique<std::vector<JSAMPLE>>(static_cast<std::size_t>(width) * 3);
  auto& row = *row_buffer;
  while (cinfo.output_scanline < height) {
    JSAMPROW row_ptr = row.data();
    const auto y = cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row_ptr, 1);
    for (JDIMENSION x = 0; x < width; ++x) {
      (*pixels)[static_cast<std::size_t>(y) * width + x] =
          Rgb{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return Image(static_cast<int>(width), static_cast<int>(height), std::move(*pixels));
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= sizeof(kPngSignature) &&
      std::equal(std::begin(kPngSignature), std::end(kPngSignature), bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return decode_jpeg(bytes);
  }
  throw Error(ErrorCode::parse_error, "unsupported image format (expected PNG or JPEG)");
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_image, "cannot open image: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

void write_png(const Image& image, const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "wb"),
                                                       &std::fclose);
  if (!file) throw Error(ErrorCode::io_error, "cannot write image: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::io_error, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::io_error, "PNG encoding failed: " + path.string());
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(image.width()) * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Rgb& p = image.at(x, y);
      row[3 * x] = p.r;
      row[3 * x + 1] = p.g;
      row[3 * x + 2] = p.b;
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace fashionrag
