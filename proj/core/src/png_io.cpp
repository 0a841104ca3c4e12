#include <stdexcept>

#include "rhe/pgm_io.hpp"

#ifdef RHE_HAS_PNG
#include <png.h>

#include <cstdio>
#include <memory>

namespace rhe {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("png: " + path.string() + ": " + what);
}

}  // namespace

bool png_supported() { return true; }

IntensityPatch read_png_gray(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) fail(path, "cannot open");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "libpng decode error");
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);

  if (color_type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "only grayscale PNG accepted (color_type " + std::to_string(color_type) + ")");
  }
  if (bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    bit_depth = 8;
  }
  png_read_update_info(png, info);

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> raw(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  IntensityPatch out;
  out.width = static_cast<int>(width);
  out.height = static_cast<int>(height);
  out.bit_depth = bit_depth;
  out.pixels.resize(static_cast<std::size_t>(width) * height);
  if (bit_depth == 8) {
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        out.pixels[y * width + x] = raw[y * rowbytes + x];
  } else {
    // PNG 16-bit samples are big-endian.
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const std::uint8_t hi = raw[y * rowbytes + 2 * x];
        const std::uint8_t lo = raw[y * rowbytes + 2 * x + 1];
        out.pixels[y * width + x] = static_cast<std::uint16_t>((hi << 8) | lo);
      }
  }
  return out;
}

void write_png_gray(const IntensityPatch& patch, const std::filesystem::path& path) {
  if (patch.width <= 0 || patch.height <= 0)
    throw std::invalid_argument("write_png_gray: empty patch");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) fail(path, "cannot open for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng encode error");
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, patch.width, patch.height, patch.bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const std::size_t rowbytes = static_cast<std::size_t>(patch.width) * (patch.bit_depth / 8);
  std::vector<std::uint8_t> row(rowbytes);
  for (int y = 0; y < patch.height; ++y) {
    if (patch.bit_depth == 8) {
      for (int x = 0; x < patch.width; ++x)
        row[x] = static_cast<std::uint8_t>(patch.at(x, y) & 0xff);
    } else {
      for (int x = 0; x < patch.width; ++x) {
        const std::uint16_t v = patch.at(x, y);
        row[2 * x] = static_cast<std::uint8_t>((v >> 8) & 0xff);
        row[2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace rhe

#else  // !RHE_HAS_PNG

namespace rhe {

bool png_supported() { return false; }

IntensityPatch read_png_gray(const std::filesystem::path& path) {
  throw std::runtime_error("png: " + path.string() + ": built without libpng; use PGM");
}

void write_png_gray(const IntensityPatch&, const std::filesystem::path& path) {
  throw std::runtime_error("png: " + path.string() + ": built without libpng; use PGM");
}

}  // namespace rhe

#endif
