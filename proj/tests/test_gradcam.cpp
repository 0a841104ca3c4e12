// Class-activation heatmaps: the channel-weighting formula, normalization,
// scale invariance, the end-to-end path through a real model, and the
// rendered overlay files.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rhe/gradcam.hpp"
#include "rhe/image.hpp"
#include "rhe/model.hpp"
#include "rhe/pgm_io.hpp"
#include "rhe/random_stream.hpp"

using namespace rhe;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "rhe_gradcam_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  RandomStream rng(seed);
  for (auto& v : t.data) v = rng.next_uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("single-channel map with uniform gradient reproduces the hand case") {
  Tensor activations = Tensor::zeros({1, 2, 2});
  activations.data = {1.0, 2.0, 3.0, 4.0};
  Tensor gradients = Tensor::zeros({1, 2, 2});
  gradients.data = {1.0, 1.0, 1.0, 1.0};

  const FloatPatch raw = grad_cam_raw(activations, gradients);
  REQUIRE(raw.width == 2);
  REQUIRE(raw.height == 2);
  CHECK(raw.values == std::vector<double>{1.0, 2.0, 3.0, 4.0});  // alpha = 1

  const Heatmap map = grad_cam_from_activations(activations, gradients);
  CHECK(map.values == std::vector<double>{0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("channel weights are spatial gradient means") {
  // Two channels: alpha_0 = mean(1,1,1,1) = 1, alpha_1 = mean(-2,0,0,2) = 0,
  // so channel 1 must not contribute at all.
  Tensor activations = Tensor::zeros({2, 2, 2});
  activations.data = {1.0, 2.0, 3.0, 4.0, 100.0, 100.0, 100.0, 100.0};
  Tensor gradients = Tensor::zeros({2, 2, 2});
  gradients.data = {1.0, 1.0, 1.0, 1.0, -2.0, 0.0, 0.0, 2.0};

  const FloatPatch raw = grad_cam_raw(activations, gradients);
  CHECK(raw.values == std::vector<double>{1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("negative combined responses clip to zero before normalization") {
  Tensor activations = Tensor::zeros({1, 1, 2});
  activations.data = {5.0, -3.0};
  Tensor gradients = Tensor::zeros({1, 1, 2});
  gradients.data = {-1.0, -1.0};  // alpha = -1 flips the signs

  const FloatPatch raw = grad_cam_raw(activations, gradients);
  CHECK(raw.values == std::vector<double>{0.0, 3.0});
  const Heatmap map = grad_cam_from_activations(activations, gradients);
  CHECK(map.values == std::vector<double>{0.0, 1.0});
}

TEST_CASE("an all-zero heatmap survives normalization unchanged") {
  Tensor activations = Tensor::zeros({2, 3, 3});
  Tensor gradients = random_tensor({2, 3, 3}, 4, -1.0, 1.0);
  const Heatmap map = grad_cam_from_activations(activations, gradients);
  for (double v : map.values) CHECK(v == 0.0);

  FloatPatch zeros{4, 4, std::vector<double>(16, 0.0)};
  const Heatmap normalized = normalize_heatmap(zeros);
  for (double v : normalized.values) CHECK(v == 0.0);
}

TEST_CASE("normalized heatmaps are invariant to gradient scaling") {
  const Tensor activations = random_tensor({3, 5, 5}, 5, 0.0, 2.0);
  Tensor gradients = random_tensor({3, 5, 5}, 6, -1.0, 1.0);
  const Heatmap base = grad_cam_from_activations(activations, gradients);

  Tensor scaled = gradients;
  for (auto& v : scaled.data) v *= 1000.0;
  const Heatmap big = grad_cam_from_activations(activations, scaled);

  REQUIRE(base.values.size() == big.values.size());
  for (std::size_t i = 0; i < base.values.size(); ++i)
    CHECK(base.values[i] == doctest::Approx(big.values[i]).epsilon(1e-12));
}

TEST_CASE("shape contract of the tensor-level entry points") {
  Tensor activations = Tensor::zeros({2, 4, 4});
  Tensor mismatched = Tensor::zeros({2, 4, 5});
  CHECK_THROWS_AS(grad_cam_raw(activations, mismatched), std::invalid_argument);
  Tensor flat = Tensor::zeros({16});
  CHECK_THROWS_AS(grad_cam_raw(flat, flat), std::invalid_argument);
}

TEST_CASE("end-to-end heatmap from a trained-free model") {
  ModelConfig cfg;
  cfg.input_size = 16;
  cfg.conv_channels = {4, 6};
  cfg.num_classes = 3;
  cfg.init_seed = 21;
  const ModelState state = init_model(cfg);

  FloatPatch patch{16, 16, std::vector<double>(256)};
  RandomStream rng(22);
  for (auto& v : patch.values) v = rng.next_double();

  for (int class_index = 0; class_index < 3; ++class_index) {
    const Heatmap map = grad_cam(state, patch, class_index);
    CHECK(map.width == 16);
    CHECK(map.height == 16);
    double max_v = 0.0;
    for (double v : map.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      max_v = std::max(max_v, v);
    }
    CHECK((max_v == 0.0 || max_v == 1.0));  // normalized unless identically zero
  }

  // Earlier blocks give maps at the same patch resolution.
  const Heatmap first_block = grad_cam(state, patch, 0, 0);
  CHECK(first_block.width == 16);
  CHECK(first_block.height == 16);

  CHECK_THROWS_AS(grad_cam(state, patch, 3), std::invalid_argument);
  CHECK_THROWS_AS(grad_cam(state, patch, -1), std::invalid_argument);
  CHECK_THROWS_AS(grad_cam(state, patch, 0, 2), std::invalid_argument);

  FloatPatch wrong{8, 8, std::vector<double>(64, 0.5)};
  CHECK_THROWS_AS(grad_cam(state, wrong, 0), std::invalid_argument);
}

TEST_CASE("distinct classes can disagree about where to look") {
  // Not a theorem, but with a random model and fixed input the class-specific
  // gradients almost surely differ; catching identical maps guards against
  // accidentally ignoring class_index.
  ModelConfig cfg;
  cfg.input_size = 16;
  cfg.conv_channels = {4, 4};
  cfg.num_classes = 2;
  cfg.init_seed = 33;
  const ModelState state = init_model(cfg);

  FloatPatch patch{16, 16, std::vector<double>(256)};
  RandomStream rng(34);
  for (auto& v : patch.values) v = rng.next_double();

  const Heatmap a = grad_cam(state, patch, 0);
  const Heatmap b = grad_cam(state, patch, 1);
  CHECK(a.values != b.values);
}

TEST_CASE("overlay renderer writes the three expected images") {
  const fs::path dir = fresh_dir("overlay");
  FloatPatch patch{12, 10, std::vector<double>(120)};
  RandomStream rng(55);
  for (auto& v : patch.values) v = rng.next_double();
  Heatmap heat{12, 10, std::vector<double>(120)};
  for (std::size_t i = 0; i < heat.values.size(); ++i) heat.values[i] = (i % 12) / 11.0;

  render_overlay(patch, heat, dir / "case0");

  const IntensityPatch input = read_pgm(dir / "case0_input.pgm");
  const IntensityPatch cam = read_pgm(dir / "case0_cam.pgm");
  const IntensityPatch composite = read_pgm(dir / "case0_composite.pgm");

  CHECK(input.width == 12);
  CHECK(input.height == 10);
  CHECK(input.bit_depth == 8);
  CHECK(cam.width == 12);
  CHECK(composite.width == 36);  // input | heatmap | blend
  CHECK(composite.height == 10);

  // Left third of the composite is the input rendering, middle the heatmap.
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) {
      CHECK(composite.at(x, y) == input.at(x, y));
      CHECK(composite.at(x + 12, y) == cam.at(x, y));
    }

  // Right third blends the two fields at half weight.
  const IntensityPatch blend_ref =
      to_intensity(make_float_patch(12, 10,
                                    [&] {
                                      std::vector<double> mixed(120);
                                      for (int i = 0; i < 120; ++i)
                                        mixed[i] = 0.5 * patch.values[i] + 0.5 * heat.values[i];
                                      return mixed;
                                    }()),
                   8);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) CHECK(composite.at(x + 24, y) == blend_ref.at(x, y));
}
