#pragma once

#include <cstdint>
#include <vector>

namespace rhe {

// Raw grayscale patch. Pixels are row-major, values in [0, 2^bit_depth - 1];
// bit_depth is 8 or 16.
struct IntensityPatch {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> pixels;

  int pixel_count() const { return width * height; }
  std::uint32_t num_levels() const { return 1u << bit_depth; }
  std::uint16_t max_value() const { return static_cast<std::uint16_t>(num_levels() - 1); }
  std::uint16_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Real-valued patch; after normalize() all values lie in [0,1].
struct FloatPatch {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  int pixel_count() const { return width * height; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

// One count per representable intensity, 2^bit_depth bins.
struct Histogram {
  std::vector<std::uint64_t> bin_counts;
};

IntensityPatch make_intensity_patch(int width, int height, int bit_depth,
                                    std::vector<std::uint16_t> pixels);
FloatPatch make_float_patch(int width, int height, std::vector<double> values);

Histogram compute_histogram(const IntensityPatch& patch);

// Classic discrete histogram equalization:
//   T(v) = round((cdf(v) - cdf_min) / (N - cdf_min) * (L - 1))
// with cdf_min the smallest nonzero cdf value and round half away from zero.
// A constant image (N == cdf_min) is returned unchanged.
IntensityPatch equalize_histogram(const IntensityPatch& patch);

// Half-pixel-center bilinear resize: src = (dst + 0.5) * scale - 0.5, clamped.
// Resizing to the source dimensions is value-exact.
FloatPatch resize_bilinear(const FloatPatch& patch, int out_width, int out_height);

// Divide by (2^bit_depth - 1); output in [0,1].
FloatPatch normalize(const IntensityPatch& patch);

// Clamp to [0,1], scale by (2^bit_depth - 1), round half away from zero.
IntensityPatch to_intensity(const FloatPatch& patch, int bit_depth);

IntensityPatch flip_horizontal(const IntensityPatch& patch);
IntensityPatch flip_vertical(const IntensityPatch& patch);
FloatPatch flip_horizontal(const FloatPatch& patch);
FloatPatch flip_vertical(const FloatPatch& patch);

// Rotate about the image center by `degrees`, bilinear resampling with
// out-of-bounds taps reading 0. Dimensions unchanged; 0 degrees is a copy.
FloatPatch rotate_bilinear(const FloatPatch& patch, double degrees);

}  // namespace rhe
