#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "rhe/image.hpp"
#include "rhe/random_stream.hpp"

using namespace rhe;

namespace {

IntensityPatch random_patch(RandomStream& rng, int bit_depth, int min_side = 2,
                            int max_side = 24) {
  const int w = static_cast<int>(rng.next_below(max_side - min_side + 1)) + min_side;
  const int h = static_cast<int>(rng.next_below(max_side - min_side + 1)) + min_side;
  std::vector<std::uint16_t> pixels(static_cast<std::size_t>(w) * h);
  const std::uint64_t levels = 1ull << bit_depth;
  for (auto& p : pixels) p = static_cast<std::uint16_t>(rng.next_below(levels));
  return make_intensity_patch(w, h, bit_depth, std::move(pixels));
}

}  // namespace

TEST_CASE("histogram counts every pixel once") {
  const IntensityPatch patch = make_intensity_patch(2, 2, 8, {52, 52, 154, 200});
  const Histogram h = compute_histogram(patch);
  REQUIRE(h.bin_counts.size() == 256);
  CHECK(h.bin_counts[52] == 2);
  CHECK(h.bin_counts[154] == 1);
  CHECK(h.bin_counts[200] == 1);
  std::uint64_t total = 0;
  for (auto c : h.bin_counts) total += c;
  CHECK(total == 4);
}

TEST_CASE("equalization maps the worked 2x2 example") {
  const IntensityPatch patch = make_intensity_patch(2, 2, 8, {52, 52, 154, 200});
  const IntensityPatch eq = equalize_histogram(patch);
  CHECK(eq.pixels == std::vector<std::uint16_t>{0, 0, 128, 255});
}

TEST_CASE("equalization leaves a constant image unchanged") {
  for (int bit_depth : {8, 16}) {
    const std::uint16_t level = bit_depth == 8 ? 77 : 12345;
    const IntensityPatch patch =
        make_intensity_patch(3, 2, bit_depth, std::vector<std::uint16_t>(6, level));
    const IntensityPatch eq = equalize_histogram(patch);
    CHECK(eq.pixels == patch.pixels);
  }
}

TEST_CASE("equalization is monotone and spans the full range") {
  RandomStream rng(2024);
  for (int round = 0; round < 50; ++round) {
    const int bit_depth = round % 2 == 0 ? 8 : 16;
    const IntensityPatch patch = random_patch(rng, bit_depth);
    const IntensityPatch eq = equalize_histogram(patch);

    // Monotone: v1 <= v2 implies T(v1) <= T(v2); equal in, equal out.
    std::vector<std::pair<std::uint16_t, std::uint16_t>> pairs;
    for (std::size_t i = 0; i < patch.pixels.size(); ++i)
      pairs.emplace_back(patch.pixels[i], eq.pixels[i]);
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i) {
      CHECK(pairs[i - 1].second <= pairs[i].second);
      if (pairs[i - 1].first == pairs[i].first)
        CHECK(pairs[i - 1].second == pairs[i].second);
    }

    const auto [mn, mx] = std::minmax_element(patch.pixels.begin(), patch.pixels.end());
    if (*mn != *mx) {
      const std::size_t min_at = mn - patch.pixels.begin();
      const std::size_t max_at = mx - patch.pixels.begin();
      CHECK(eq.pixels[min_at] == 0);
      CHECK(eq.pixels[max_at] == patch.max_value());
    }
  }
}

TEST_CASE("equalizing twice moves no pixel by more than one level") {
  RandomStream rng(77);
  for (int round = 0; round < 30; ++round) {
    const IntensityPatch patch = random_patch(rng, round % 2 == 0 ? 8 : 16);
    const IntensityPatch once = equalize_histogram(patch);
    const IntensityPatch twice = equalize_histogram(once);
    for (std::size_t i = 0; i < once.pixels.size(); ++i)
      CHECK(std::abs(int(once.pixels[i]) - int(twice.pixels[i])) <= 1);
  }
}

TEST_CASE("patch construction validates its arguments") {
  CHECK_THROWS_AS(make_intensity_patch(0, 2, 8, {}), std::invalid_argument);
  CHECK_THROWS_AS(make_intensity_patch(2, 2, 12, std::vector<std::uint16_t>(4, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_intensity_patch(2, 2, 8, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(make_intensity_patch(2, 2, 8, {0, 0, 0, 256}), std::invalid_argument);
  CHECK_THROWS_AS(make_float_patch(2, 2, {0.0}), std::invalid_argument);
  CHECK_NOTHROW(make_intensity_patch(2, 2, 16, {0, 0, 0, 65535}));
}

TEST_CASE("identity resize is value-exact") {
  RandomStream rng(5);
  FloatPatch patch = make_float_patch(7, 5, std::vector<double>(35, 0.0));
  for (auto& v : patch.values) v = rng.next_double();
  const FloatPatch same = resize_bilinear(patch, 7, 5);
  CHECK(same.values == patch.values);
}

TEST_CASE("1x2 to 1x3 upsample hits the documented midpoints") {
  const FloatPatch patch = make_float_patch(2, 1, {0.0, 255.0});
  const FloatPatch out = resize_bilinear(patch, 3, 1);
  REQUIRE(out.values.size() == 3);
  CHECK(out.values[0] == doctest::Approx(0.0));
  CHECK(out.values[1] == doctest::Approx(127.5));
  CHECK(out.values[2] == doctest::Approx(255.0));
}

TEST_CASE("downsampling a constant image stays constant") {
  const FloatPatch patch = make_float_patch(16, 16, std::vector<double>(256, 0.625));
  const FloatPatch out = resize_bilinear(patch, 5, 3);
  for (double v : out.values) CHECK(v == doctest::Approx(0.625));
}

TEST_CASE("resize output stays within the input range") {
  RandomStream rng(99);
  FloatPatch patch = make_float_patch(9, 11, std::vector<double>(99, 0.0));
  for (auto& v : patch.values) v = rng.next_uniform(-3.0, 3.0);
  const auto [mn, mx] = std::minmax_element(patch.values.begin(), patch.values.end());
  for (auto [w, h] : {std::pair{4, 4}, {17, 3}, {23, 29}}) {
    const FloatPatch out = resize_bilinear(patch, w, h);
    for (double v : out.values) {
      CHECK(v >= *mn - 1e-12);
      CHECK(v <= *mx + 1e-12);
    }
  }
  CHECK_THROWS_AS(resize_bilinear(patch, 0, 4), std::invalid_argument);
}

TEST_CASE("normalize divides by the level ceiling") {
  const IntensityPatch p8 = make_intensity_patch(2, 1, 8, {0, 255});
  const FloatPatch n8 = normalize(p8);
  CHECK(n8.values[0] == 0.0);
  CHECK(n8.values[1] == 1.0);

  const IntensityPatch p16 = make_intensity_patch(2, 1, 16, {32768, 65535});
  const FloatPatch n16 = normalize(p16);
  CHECK(n16.values[0] == doctest::Approx(32768.0 / 65535.0));
  CHECK(n16.values[1] == 1.0);
}

TEST_CASE("to_intensity clamps, scales, and round-trips") {
  const FloatPatch patch = make_float_patch(5, 1, {-0.5, 0.0, 0.5, 1.0, 1.5});
  const IntensityPatch out = to_intensity(patch, 8);
  CHECK(out.pixels == std::vector<std::uint16_t>{0, 0, 128, 255, 255});

  RandomStream rng(3);
  for (int bit_depth : {8, 16}) {
    IntensityPatch original = random_patch(rng, bit_depth);
    const IntensityPatch back = to_intensity(normalize(original), bit_depth);
    CHECK(back.pixels == original.pixels);
  }
}

TEST_CASE("flips are involutions and move the expected pixels") {
  const IntensityPatch patch = make_intensity_patch(3, 2, 8, {1, 2, 3, 4, 5, 6});
  const IntensityPatch h = flip_horizontal(patch);
  CHECK(h.pixels == std::vector<std::uint16_t>{3, 2, 1, 6, 5, 4});
  const IntensityPatch v = flip_vertical(patch);
  CHECK(v.pixels == std::vector<std::uint16_t>{4, 5, 6, 1, 2, 3});
  CHECK(flip_horizontal(h).pixels == patch.pixels);
  CHECK(flip_vertical(v).pixels == patch.pixels);

  const FloatPatch fp = make_float_patch(2, 2, {0.1, 0.2, 0.3, 0.4});
  CHECK(flip_horizontal(fp).values == std::vector<double>{0.2, 0.1, 0.4, 0.3});
  CHECK(flip_vertical(fp).values == std::vector<double>{0.3, 0.4, 0.1, 0.2});
}

TEST_CASE("zero-degree rotation is an exact copy") {
  RandomStream rng(8);
  FloatPatch patch = make_float_patch(6, 4, std::vector<double>(24, 0.0));
  for (auto& v : patch.values) v = rng.next_double();
  CHECK(rotate_bilinear(patch, 0.0).values == patch.values);
}

TEST_CASE("rotation keeps dimensions, zero-fills corners, and adds no energy") {
  FloatPatch patch = make_float_patch(11, 11, std::vector<double>(121, 1.0));
  const FloatPatch out = rotate_bilinear(patch, 45.0);
  CHECK(out.width == 11);
  CHECK(out.height == 11);
  // The corner source positions fall outside the image, so they read 0.
  CHECK(out.at(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(out.at(10, 10) == doctest::Approx(0.0).epsilon(1e-9));
  // The center is a fixed point of the rotation.
  CHECK(out.at(5, 5) == doctest::Approx(1.0));
  for (double v : out.values) {
    CHECK(v >= -1e-12);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("small-angle rotation pair approximately restores the interior") {
  RandomStream rng(21);
  FloatPatch patch = make_float_patch(32, 32, std::vector<double>(1024, 0.0));
  // Smooth field so bilinear resampling error stays small.
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      patch.at(x, y) = 0.5 + 0.4 * std::sin(x * 0.2) * std::cos(y * 0.17);
  const FloatPatch back = rotate_bilinear(rotate_bilinear(patch, 10.0), -10.0);
  for (int y = 12; y < 20; ++y)
    for (int x = 12; x < 20; ++x)
      CHECK(back.at(x, y) == doctest::Approx(patch.at(x, y)).epsilon(0.02));
}
