#include "rhe/gradcam.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "rhe/pgm_io.hpp"

namespace rhe {

namespace {

void check_chw(const Tensor& t, const char* name) {
  if (t.shape.size() != 3)
    throw std::invalid_argument(std::string("grad_cam: ") + name + " must be [C,H,W], got " +
                                shape_string(t.shape));
}

}  // namespace

FloatPatch grad_cam_raw(const Tensor& activations, const Tensor& gradients) {
  check_chw(activations, "activations");
  check_chw(gradients, "gradients");
  if (!activations.same_shape(gradients))
    throw std::invalid_argument("grad_cam: activations " + shape_string(activations.shape) +
                                " and gradients " + shape_string(gradients.shape) + " differ");
  const int channels = activations.shape[0];
  const int h = activations.shape[1], w = activations.shape[2];
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  std::vector<double> map(plane, 0.0);
  for (int c = 0; c < channels; ++c) {
    const double* grad = gradients.data.data() + c * plane;
    double alpha = 0.0;
    for (std::size_t i = 0; i < plane; ++i) alpha += grad[i];
    alpha /= static_cast<double>(plane);
    const double* act = activations.data.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) map[i] += alpha * act[i];
  }
  for (double& v : map) v = v > 0.0 ? v : 0.0;
  return make_float_patch(w, h, std::move(map));
}

Heatmap normalize_heatmap(const FloatPatch& map) {
  double mx = 0.0;
  for (double v : map.values) mx = std::max(mx, v);
  if (mx <= 0.0) {
    Heatmap zero = map;
    std::fill(zero.values.begin(), zero.values.end(), 0.0);
    return zero;
  }
  Heatmap out = map;
  for (double& v : out.values) v = std::max(0.0, v) / mx;
  return out;
}

Heatmap grad_cam_from_activations(const Tensor& activations, const Tensor& gradients) {
  return normalize_heatmap(grad_cam_raw(activations, gradients));
}

Heatmap grad_cam(const ModelState& state, const FloatPatch& patch, int class_index,
                 int block_index) {
  const ModelConfig& cfg = state.config;
  if (class_index < 0 || class_index >= cfg.num_classes)
    throw std::invalid_argument("grad_cam: class index " + std::to_string(class_index) +
                                " outside [0," + std::to_string(cfg.num_classes) + ")");
  const int blocks = state.num_blocks();
  if (block_index == -1) block_index = blocks - 1;
  if (block_index < 0 || block_index >= blocks)
    throw std::invalid_argument("grad_cam: block index " + std::to_string(block_index) +
                                " outside [0," + std::to_string(blocks) + ")");
  if (patch.width != cfg.input_size || patch.height != cfg.input_size)
    throw std::invalid_argument("grad_cam: patch size does not match model input");

  Tensor batch = Tensor::zeros({1, 1, cfg.input_size, cfg.input_size});
  std::copy(patch.values.begin(), patch.values.end(), batch.data.begin());

  ForwardCache cache;
  forward(state, batch, &cache);
  Tensor dlogits = Tensor::zeros({1, cfg.num_classes});
  dlogits.data[class_index] = 1.0;  // raw logit, not softmax probability
  const Gradients grads = backward(state, cache, dlogits);

  const Tensor& act4 = cache.relu_out[block_index];
  const Tensor& grad4 = grads.block_activations[block_index];
  Tensor act{{act4.shape[1], act4.shape[2], act4.shape[3]}, act4.data};
  Tensor grad{{grad4.shape[1], grad4.shape[2], grad4.shape[3]}, grad4.data};

  const FloatPatch raw = grad_cam_raw(act, grad);
  return normalize_heatmap(resize_bilinear(raw, cfg.input_size, cfg.input_size));
}

void render_overlay(const FloatPatch& patch, const Heatmap& heatmap,
                    const std::filesystem::path& stem) {
  if (patch.width != heatmap.width || patch.height != heatmap.height)
    throw std::invalid_argument("render_overlay: patch and heatmap dimensions differ");

  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  FloatPatch input = patch;
  for (double& v : input.values) v = clamp01(v);

  FloatPatch composite = make_float_patch(
      3 * patch.width, patch.height, std::vector<double>(3 * patch.values.size(), 0.0));
  for (int y = 0; y < patch.height; ++y)
    for (int x = 0; x < patch.width; ++x) {
      const double in = input.values[static_cast<std::size_t>(y) * patch.width + x];
      const double cam = heatmap.values[static_cast<std::size_t>(y) * patch.width + x];
      double* row = composite.values.data() + static_cast<std::size_t>(y) * composite.width;
      row[x] = in;
      row[patch.width + x] = cam;
      row[2 * patch.width + x] = 0.5 * in + 0.5 * cam;
    }

  const std::string base = stem.string();
  write_pgm(to_intensity(input, 8), base + "_input.pgm");
  write_pgm(to_intensity(heatmap, 8), base + "_cam.pgm");
  write_pgm(to_intensity(composite, 8), base + "_composite.pgm");
}

}  // namespace rhe
