#pragma once

#include <filesystem>

#include "rhe/model.hpp"

namespace rhe {

// A heatmap is a FloatPatch with values in [0,1] and the dimensions of the
// patch that was classified.
using Heatmap = FloatPatch;

// ReLU(sum_k alpha_k A^k) where alpha_k is the spatial mean of gradients over
// channel k. activations/gradients are [C,H,W]; the result keeps H x W.
FloatPatch grad_cam_raw(const Tensor& activations, const Tensor& gradients);

// Divides by the maximum value; an all-zero map stays all-zero.
Heatmap normalize_heatmap(const FloatPatch& map);

// normalize(grad_cam_raw(...)), at activation resolution.
Heatmap grad_cam_from_activations(const Tensor& activations, const Tensor& gradients);

// Heatmap for one input patch: backpropagates the raw logit of class_index to
// the post-ReLU activation map of the chosen conv block (default: the last
// one), reduces channels by gradient-weighted sum, upsamples bilinearly to
// the input size, then normalizes. Throws on bad class or block index.
Heatmap grad_cam(const ModelState& state, const FloatPatch& patch, int class_index,
                 int block_index = -1);

// Writes <stem>_input.pgm, <stem>_cam.pgm and <stem>_composite.pgm (input |
// heatmap | 0.5 blend side by side), all 8-bit. patch values are clamped to
// [0,1].
void render_overlay(const FloatPatch& patch, const Heatmap& heatmap,
                    const std::filesystem::path& stem);

}  // namespace rhe
