#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhe/augment.hpp"
#include "rhe/dataset.hpp"
#include "rhe/tensor.hpp"

namespace rhe {

// Compact scratch CNN: per block a 3x3 same-padding convolution, ReLU and
// 2x2 max pool, then global average pooling and a linear head.
struct ModelConfig {
  int input_size = 224;                     // desk preset uses 64
  std::vector<int> conv_channels = {8, 16, 32};
  int num_classes = 2;
  std::uint64_t init_seed = 0;
};

void validate(const ModelConfig& cfg);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 3.2e-6;            // desk preset uses 1e-3
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

struct AdamSlot {
  Tensor m;
  Tensor v;
  std::int64_t t = 0;
};

// Parameters live in declaration order: conv weight and bias per block, then
// head weight [num_classes, last_channels] and head bias. The checkpoint
// format serializes them in exactly this order.
struct ModelState {
  ModelConfig config;
  std::vector<Tensor> params;
  std::vector<AdamSlot> adam;
  std::uint64_t step_serial = 0;  // bumped by adam_step; detects stale caches

  int num_blocks() const { return static_cast<int>(config.conv_channels.size()); }
  Tensor& conv_weight(int block) { return params[2 * block]; }
  Tensor& conv_bias(int block) { return params[2 * block + 1]; }
  Tensor& head_weight() { return params[params.size() - 2]; }
  Tensor& head_bias() { return params[params.size() - 1]; }
  const Tensor& conv_weight(int block) const { return params[2 * block]; }
  const Tensor& conv_bias(int block) const { return params[2 * block + 1]; }
  const Tensor& head_weight() const { return params[params.size() - 2]; }
  const Tensor& head_bias() const { return params[params.size() - 1]; }
};

// Weights uniform in (-sqrt(1/fan_in), +sqrt(1/fan_in)) from init_seed,
// biases zero, Adam moments zero.
ModelState init_model(const ModelConfig& cfg);

struct ForwardCache {
  Tensor input;                      // [B,1,S,S]
  std::vector<Tensor> conv_out;      // pre-ReLU, per block
  std::vector<Tensor> relu_out;      // post-ReLU, per block (Grad-CAM target)
  std::vector<Tensor> pool_out;      // per block
  std::vector<std::vector<int>> pool_argmax;  // flat input index per pooled cell
  Tensor gap;                        // [B, C_last]
  std::uint64_t step_serial = 0;
};

// batch is [B,1,S,S] with values in [0,1]. Returns logits [B,num_classes];
// fills cache when given (required for backward and Grad-CAM).
Tensor forward(const ModelState& state, const Tensor& batch, ForwardCache* cache = nullptr);

struct LossResult {
  double loss = 0.0;
  Tensor dlogits;  // exact gradient of the mean weighted loss
};

// Mean over the batch of w_label * (-log softmax(logits)[label]), softmax
// computed with max subtraction.
LossResult weighted_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                                  const ClassWeights& weights);

struct Gradients {
  std::vector<Tensor> params;             // parallel to ModelState::params
  std::vector<Tensor> block_activations;  // d loss / d relu_out, per block
};

// Exact analytic gradients. Max pool routes to the argmax position (first
// occurrence on ties); the ReLU gate uses pre-activation > 0. Throws
// std::logic_error when the cache does not match the state's step serial.
Gradients backward(const ModelState& state, const ForwardCache& cache, const Tensor& dlogits);

// Adam with coupled L2 decay: g += weight_decay * theta before the moment
// updates; t is incremented before bias correction.
void adam_step(ModelState& state, const Gradients& grads, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;            // 1-based
  double train_loss = 0.0;  // mean per-item weighted loss
  double val_accuracy = 0.0;  // NaN when the dataset has no validation split
};

struct TrainResult {
  ModelState state;
  std::vector<EpochRecord> epochs;
  AugmentStats augment_stats;  // aggregated over all training items
};

// Full training loop: per epoch, shuffle the train split with the run
// stream, augment each item with a stream derived from (seed, running item
// counter), batch, forward/loss/backward/adam_step. No early stopping; the
// final-epoch state is returned.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const AugmentationConfig& aug_cfg, const std::vector<LabeledPatch>& dataset,
                  const TaskSpec& task);

struct Predictions {
  std::vector<int> classes;
  std::vector<std::vector<double>> probabilities;
};

// Deterministic evaluation: eval pipeline (HE only when p_rhe == 1), argmax
// of softmax with the lowest index winning ties.
Predictions predict(const ModelState& state, const std::vector<IntensityPatch>& patches,
                    const AugmentationConfig& aug_cfg);
Predictions predict(const ModelState& state, const std::vector<const LabeledPatch*>& items,
                    const AugmentationConfig& aug_cfg);

}  // namespace rhe
