#include "rhe/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rhe {

namespace {

void check_bit_depth(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16)
    throw std::invalid_argument("bit_depth must be 8 or 16, got " + std::to_string(bit_depth));
}

void check_nonempty(const IntensityPatch& patch, const char* op) {
  if (patch.width <= 0 || patch.height <= 0 || patch.pixels.empty())
    throw std::invalid_argument(std::string(op) + ": empty patch");
}

}  // namespace

IntensityPatch make_intensity_patch(int width, int height, int bit_depth,
                                    std::vector<std::uint16_t> pixels) {
  check_bit_depth(bit_depth);
  if (width < 1 || height < 1)
    throw std::invalid_argument("patch dimensions must be at least 1x1");
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw std::invalid_argument("pixel buffer does not match width*height");
  IntensityPatch p{width, height, bit_depth, std::move(pixels)};
  const std::uint16_t maxv = p.max_value();
  for (std::uint16_t v : p.pixels)
    if (v > maxv)
      throw std::invalid_argument("pixel value " + std::to_string(v) + " exceeds max " +
                                  std::to_string(maxv));
  return p;
}

FloatPatch make_float_patch(int width, int height, std::vector<double> values) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("patch dimensions must be at least 1x1");
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw std::invalid_argument("value buffer does not match width*height");
  return FloatPatch{width, height, std::move(values)};
}

Histogram compute_histogram(const IntensityPatch& patch) {
  check_nonempty(patch, "compute_histogram");
  Histogram h;
  h.bin_counts.assign(patch.num_levels(), 0);
  for (std::uint16_t v : patch.pixels) ++h.bin_counts[v];
  return h;
}

IntensityPatch equalize_histogram(const IntensityPatch& patch) {
  check_nonempty(patch, "equalize_histogram");
  const Histogram hist = compute_histogram(patch);
  const std::uint64_t n = static_cast<std::uint64_t>(patch.pixel_count());
  const std::uint32_t levels = patch.num_levels();

  // cdf_min is the cdf at the lowest occupied bin.
  std::uint64_t cdf_min = 0;
  for (std::uint32_t b = 0; b < levels; ++b) {
    if (hist.bin_counts[b] != 0) {
      cdf_min = hist.bin_counts[b];
      break;
    }
  }
  if (n == cdf_min) return patch;  // constant image: identity by decision

  std::vector<std::uint16_t> lut(levels, 0);
  const double denom = static_cast<double>(n - cdf_min);
  const double scale = static_cast<double>(levels - 1);
  std::uint64_t cdf = 0;
  for (std::uint32_t b = 0; b < levels; ++b) {
    cdf += hist.bin_counts[b];
    if (hist.bin_counts[b] == 0) continue;
    const double mapped =
        (static_cast<double>(cdf) - static_cast<double>(cdf_min)) / denom * scale;
    lut[b] = static_cast<std::uint16_t>(std::llround(mapped));
  }

  IntensityPatch out = patch;
  for (auto& v : out.pixels) v = lut[v];
  return out;
}

FloatPatch resize_bilinear(const FloatPatch& patch, int out_width, int out_height) {
  if (patch.width <= 0 || patch.height <= 0)
    throw std::invalid_argument("resize_bilinear: empty patch");
  if (out_width < 1 || out_height < 1)
    throw std::invalid_argument("resize_bilinear: output dimensions must be >= 1");

  FloatPatch out{out_width, out_height,
                 std::vector<double>(static_cast<std::size_t>(out_width) * out_height)};
  const double sx = static_cast<double>(patch.width) / out_width;
  const double sy = static_cast<double>(patch.height) / out_height;

  for (int y = 0; y < out_height; ++y) {
    double src_y = (y + 0.5) * sy - 0.5;
    src_y = std::clamp(src_y, 0.0, static_cast<double>(patch.height - 1));
    const int y0 = static_cast<int>(src_y);
    const int y1 = std::min(y0 + 1, patch.height - 1);
    const double fy = src_y - y0;
    for (int x = 0; x < out_width; ++x) {
      double src_x = (x + 0.5) * sx - 0.5;
      src_x = std::clamp(src_x, 0.0, static_cast<double>(patch.width - 1));
      const int x0 = static_cast<int>(src_x);
      const int x1 = std::min(x0 + 1, patch.width - 1);
      const double fx = src_x - x0;

      const double v00 = patch.at(x0, y0);
      const double v10 = patch.at(x1, y0);
      const double v01 = patch.at(x0, y1);
      const double v11 = patch.at(x1, y1);
      out.at(x, y) = v00 * (1 - fx) * (1 - fy) + v10 * fx * (1 - fy) +
                     v01 * (1 - fx) * fy + v11 * fx * fy;
    }
  }
  return out;
}

FloatPatch normalize(const IntensityPatch& patch) {
  const double inv = 1.0 / patch.max_value();
  FloatPatch out{patch.width, patch.height, std::vector<double>(patch.pixels.size())};
  for (std::size_t i = 0; i < patch.pixels.size(); ++i) out.values[i] = patch.pixels[i] * inv;
  return out;
}

IntensityPatch to_intensity(const FloatPatch& patch, int bit_depth) {
  check_bit_depth(bit_depth);
  IntensityPatch out;
  out.width = patch.width;
  out.height = patch.height;
  out.bit_depth = bit_depth;
  out.pixels.resize(patch.values.size());
  const double scale = static_cast<double>((1u << bit_depth) - 1);
  for (std::size_t i = 0; i < patch.values.size(); ++i) {
    const double v = std::clamp(patch.values[i], 0.0, 1.0);
    out.pixels[i] = static_cast<std::uint16_t>(std::llround(v * scale));
  }
  return out;
}

namespace {

template <typename Patch>
Patch flip_h_impl(const Patch& p) {
  Patch out = p;
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) out.at(x, y) = p.at(p.width - 1 - x, y);
  return out;
}

template <typename Patch>
Patch flip_v_impl(const Patch& p) {
  Patch out = p;
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) out.at(x, y) = p.at(x, p.height - 1 - y);
  return out;
}

}  // namespace

IntensityPatch flip_horizontal(const IntensityPatch& patch) { return flip_h_impl(patch); }
IntensityPatch flip_vertical(const IntensityPatch& patch) { return flip_v_impl(patch); }
FloatPatch flip_horizontal(const FloatPatch& patch) { return flip_h_impl(patch); }
FloatPatch flip_vertical(const FloatPatch& patch) { return flip_v_impl(patch); }

FloatPatch rotate_bilinear(const FloatPatch& patch, double degrees) {
  if (degrees == 0.0) return patch;
  const double rad = degrees * 3.14159265358979323846 / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cx = (patch.width - 1) / 2.0;
  const double cy = (patch.height - 1) / 2.0;

  FloatPatch out{patch.width, patch.height, std::vector<double>(patch.values.size(), 0.0)};
  auto tap = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= patch.width || y >= patch.height) return 0.0;
    return patch.at(x, y);
  };
  for (int y = 0; y < patch.height; ++y) {
    for (int x = 0; x < patch.width; ++x) {
      // Inverse mapping: sample the source at the back-rotated position.
      const double dx = x - cx, dy = y - cy;
      const double src_x = c * dx + s * dy + cx;
      const double src_y = -s * dx + c * dy + cy;
      const int x0 = static_cast<int>(std::floor(src_x));
      const int y0 = static_cast<int>(std::floor(src_y));
      if (x0 < -1 || y0 < -1 || x0 > patch.width - 1 || y0 > patch.height - 1) continue;
      const double fx = src_x - x0, fy = src_y - y0;
      out.at(x, y) = tap(x0, y0) * (1 - fx) * (1 - fy) + tap(x0 + 1, y0) * fx * (1 - fy) +
                     tap(x0, y0 + 1) * (1 - fx) * fy + tap(x0 + 1, y0 + 1) * fx * fy;
    }
  }
  return out;
}

}  // namespace rhe
