#include "rhe/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rhe {

namespace {

void check_labels(const std::vector<int>& labels, int num_classes) {
  for (int y : labels)
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("label " + std::to_string(y) + " outside [0," +
                                  std::to_string(num_classes) + ")");
}

// Copies one h x w plane into the middle of a zero-padded (h+2) x (w+2)
// buffer, so the 3x3 kernels below run branch-free over the interior.
void pad_plane(const double* src, int h, int w, std::vector<double>& padded) {
  const int pw = w + 2;
  padded.assign(static_cast<std::size_t>(h + 2) * pw, 0.0);
  for (int y = 0; y < h; ++y)
    std::copy(src + static_cast<std::size_t>(y) * w, src + static_cast<std::size_t>(y + 1) * w,
              padded.begin() + static_cast<std::size_t>(y + 1) * pw + 1);
}

// 3x3 same-padding convolution over one item, [C_in,H,W] -> [C_out,H,W].
void conv3x3_forward(const double* in, int c_in, int h, int w, const double* weights,
                     const double* bias, int c_out, double* out) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int pw = w + 2;
  for (int oc = 0; oc < c_out; ++oc)
    std::fill(out + oc * plane, out + (oc + 1) * plane, bias[oc]);

  std::vector<double> padded;
  for (int ic = 0; ic < c_in; ++ic) {
    pad_plane(in + ic * plane, h, w, padded);
    for (int oc = 0; oc < c_out; ++oc) {
      const double* k = weights + (static_cast<std::size_t>(oc) * c_in + ic) * 9;
      const double k0 = k[0], k1 = k[1], k2 = k[2], k3 = k[3], k4 = k[4], k5 = k[5], k6 = k[6],
                   k7 = k[7], k8 = k[8];
      double* dst_plane = out + oc * plane;
      for (int y = 0; y < h; ++y) {
        const double* r0 = padded.data() + static_cast<std::size_t>(y) * pw;
        const double* r1 = r0 + pw;
        const double* r2 = r1 + pw;
        double* dst = dst_plane + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
          dst[x] += k0 * r0[x] + k1 * r0[x + 1] + k2 * r0[x + 2] + k3 * r1[x] + k4 * r1[x + 1] +
                    k5 * r1[x + 2] + k6 * r2[x] + k7 * r2[x + 1] + k8 * r2[x + 2];
      }
    }
  }
}

// Gradient wrt the convolution input for one item: correlate the output
// gradient with the 180-degree-rotated kernel.
void conv3x3_backward_input(const double* dout, int c_out, int h, int w,
                            const double* weights, int c_in, double* din) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int pw = w + 2;
  std::fill(din, din + static_cast<std::size_t>(c_in) * plane, 0.0);

  std::vector<double> padded;
  for (int oc = 0; oc < c_out; ++oc) {
    pad_plane(dout + oc * plane, h, w, padded);
    for (int ic = 0; ic < c_in; ++ic) {
      const double* k = weights + (static_cast<std::size_t>(oc) * c_in + ic) * 9;
      const double k0 = k[8], k1 = k[7], k2 = k[6], k3 = k[5], k4 = k[4], k5 = k[3], k6 = k[2],
                   k7 = k[1], k8 = k[0];
      double* dst_plane = din + ic * plane;
      for (int y = 0; y < h; ++y) {
        const double* r0 = padded.data() + static_cast<std::size_t>(y) * pw;
        const double* r1 = r0 + pw;
        const double* r2 = r1 + pw;
        double* dst = dst_plane + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
          dst[x] += k0 * r0[x] + k1 * r0[x + 1] + k2 * r0[x + 2] + k3 * r1[x] + k4 * r1[x + 1] +
                    k5 * r1[x + 2] + k6 * r2[x] + k7 * r2[x + 1] + k8 * r2[x + 2];
      }
    }
  }
}

// Accumulates weight/bias gradients for one item.
void conv3x3_backward_params(const double* dout, int c_out, int h, int w, const double* in,
                             int c_in, double* dweights, double* dbias) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int pw = w + 2;
  std::vector<double> padded;
  for (int ic = 0; ic < c_in; ++ic) {
    pad_plane(in + ic * plane, h, w, padded);
    for (int oc = 0; oc < c_out; ++oc) {
      const double* dout_plane = dout + oc * plane;
      double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, a5 = 0.0, a6 = 0.0, a7 = 0.0,
             a8 = 0.0;
      for (int y = 0; y < h; ++y) {
        const double* r0 = padded.data() + static_cast<std::size_t>(y) * pw;
        const double* r1 = r0 + pw;
        const double* r2 = r1 + pw;
        const double* g = dout_plane + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
          const double gv = g[x];
          a0 += gv * r0[x];
          a1 += gv * r0[x + 1];
          a2 += gv * r0[x + 2];
          a3 += gv * r1[x];
          a4 += gv * r1[x + 1];
          a5 += gv * r1[x + 2];
          a6 += gv * r2[x];
          a7 += gv * r2[x + 1];
          a8 += gv * r2[x + 2];
        }
      }
      double* dk = dweights + (static_cast<std::size_t>(oc) * c_in + ic) * 9;
      dk[0] += a0;
      dk[1] += a1;
      dk[2] += a2;
      dk[3] += a3;
      dk[4] += a4;
      dk[5] += a5;
      dk[6] += a6;
      dk[7] += a7;
      dk[8] += a8;
    }
  }
  for (int oc = 0; oc < c_out; ++oc) {
    const double* dout_plane = dout + oc * plane;
    double bsum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) bsum += dout_plane[i];
    dbias[oc] += bsum;
  }
}

std::vector<double> softmax_row(const double* logits, int n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) mx = std::max(mx, logits[i]);
  std::vector<double> p(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (int i = 0; i < n; ++i) p[i] /= sum;
  return p;
}

}  // namespace

void validate(const ModelConfig& cfg) {
  if (cfg.num_classes < 2) throw std::invalid_argument("model: num_classes must be >= 2");
  if (cfg.conv_channels.empty())
    throw std::invalid_argument("model: at least one conv block required");
  for (int c : cfg.conv_channels)
    if (c < 1) throw std::invalid_argument("model: conv channels must be >= 1");
  const int blocks = static_cast<int>(cfg.conv_channels.size());
  if (blocks > 20) throw std::invalid_argument("model: too many conv blocks");
  const int stride = 1 << blocks;
  if (cfg.input_size < stride || cfg.input_size % stride != 0)
    throw std::invalid_argument("model: input_size " + std::to_string(cfg.input_size) +
                                " must be divisible by 2^" + std::to_string(blocks));
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (cfg.weight_decay < 0.0) throw std::invalid_argument("train: weight_decay must be >= 0");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) ||
      !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0))
    throw std::invalid_argument("train: adam betas must be in [0,1)");
  if (!(cfg.adam_eps > 0.0)) throw std::invalid_argument("train: adam_eps must be > 0");
}

ModelState init_model(const ModelConfig& cfg) {
  validate(cfg);
  ModelState state;
  state.config = cfg;

  RandomStream rng(cfg.init_seed);
  auto uniform_tensor = [&](std::vector<int> shape, int fan_in) {
    Tensor t = Tensor::zeros(std::move(shape));
    const double bound = std::sqrt(1.0 / fan_in);
    for (auto& v : t.data) v = rng.next_uniform(-bound, bound);
    return t;
  };

  int in_ch = 1;
  for (int oc : cfg.conv_channels) {
    state.params.push_back(uniform_tensor({oc, in_ch, 3, 3}, in_ch * 9));
    state.params.push_back(Tensor::zeros({oc}));
    in_ch = oc;
  }
  state.params.push_back(uniform_tensor({cfg.num_classes, in_ch}, in_ch));
  state.params.push_back(Tensor::zeros({cfg.num_classes}));

  state.adam.resize(state.params.size());
  for (std::size_t i = 0; i < state.params.size(); ++i) {
    state.adam[i].m = Tensor::zeros(state.params[i].shape);
    state.adam[i].v = Tensor::zeros(state.params[i].shape);
  }
  return state;
}

Tensor forward(const ModelState& state, const Tensor& batch, ForwardCache* cache) {
  const ModelConfig& cfg = state.config;
  if (batch.shape.size() != 4 || batch.shape[1] != 1 || batch.shape[2] != cfg.input_size ||
      batch.shape[3] != cfg.input_size)
    throw std::invalid_argument("forward: input: expected [B,1," +
                                std::to_string(cfg.input_size) + "," +
                                std::to_string(cfg.input_size) + "], got " +
                                shape_string(batch.shape));
  const int b_count = batch.shape[0];
  const int blocks = state.num_blocks();

  if (cache) {
    *cache = ForwardCache{};
    cache->input = batch;
    cache->step_serial = state.step_serial;
  }

  Tensor current = batch;
  int c_in = 1, size = cfg.input_size;
  for (int k = 0; k < blocks; ++k) {
    const int c_out = cfg.conv_channels[k];
    const std::size_t in_plane = static_cast<std::size_t>(size) * size;
    Tensor conv = Tensor::zeros({b_count, c_out, size, size});
    for (int b = 0; b < b_count; ++b)
      conv3x3_forward(current.data.data() + b * c_in * in_plane, c_in, size, size,
                      state.conv_weight(k).data.data(), state.conv_bias(k).data.data(), c_out,
                      conv.data.data() + b * c_out * in_plane);

    Tensor relu = conv;
    for (auto& v : relu.data) v = v > 0.0 ? v : 0.0;

    const int half = size / 2;
    Tensor pooled = Tensor::zeros({b_count, c_out, half, half});
    std::vector<int> argmax(pooled.numel());
    const std::size_t out_plane = static_cast<std::size_t>(half) * half;
    for (int b = 0; b < b_count; ++b)
      for (int c = 0; c < c_out; ++c) {
        const double* src = relu.data.data() + (static_cast<std::size_t>(b) * c_out + c) * in_plane;
        double* dst = pooled.data.data() + (static_cast<std::size_t>(b) * c_out + c) * out_plane;
        int* amx = argmax.data() + (static_cast<std::size_t>(b) * c_out + c) * out_plane;
        for (int y = 0; y < half; ++y)
          for (int x = 0; x < half; ++x) {
            // First occurrence wins ties, in row-major scan order.
            int best_idx = (2 * y) * size + 2 * x;
            double best = src[best_idx];
            const int cands[3] = {(2 * y) * size + 2 * x + 1, (2 * y + 1) * size + 2 * x,
                                  (2 * y + 1) * size + 2 * x + 1};
            for (int idx : cands)
              if (src[idx] > best) {
                best = src[idx];
                best_idx = idx;
              }
            dst[y * half + x] = best;
            amx[y * half + x] = best_idx;
          }
      }

    if (cache) {
      cache->conv_out.push_back(std::move(conv));
      cache->relu_out.push_back(std::move(relu));
      cache->pool_out.push_back(pooled);
      cache->pool_argmax.push_back(std::move(argmax));
    }
    current = std::move(pooled);
    c_in = c_out;
    size = half;
  }

  // Global average pool then linear head.
  const std::size_t spatial = static_cast<std::size_t>(size) * size;
  Tensor gap = Tensor::zeros({b_count, c_in});
  for (int b = 0; b < b_count; ++b)
    for (int c = 0; c < c_in; ++c) {
      const double* src = current.data.data() + (static_cast<std::size_t>(b) * c_in + c) * spatial;
      double acc = 0.0;
      for (std::size_t i = 0; i < spatial; ++i) acc += src[i];
      gap.data[static_cast<std::size_t>(b) * c_in + c] = acc / static_cast<double>(spatial);
    }

  const Tensor& hw = state.head_weight();
  const Tensor& hb = state.head_bias();
  Tensor logits = Tensor::zeros({b_count, cfg.num_classes});
  for (int b = 0; b < b_count; ++b)
    for (int j = 0; j < cfg.num_classes; ++j) {
      double acc = hb.data[j];
      for (int c = 0; c < c_in; ++c)
        acc += hw.data[static_cast<std::size_t>(j) * c_in + c] *
               gap.data[static_cast<std::size_t>(b) * c_in + c];
      logits.data[static_cast<std::size_t>(b) * cfg.num_classes + j] = acc;
    }

  if (cache) cache->gap = std::move(gap);
  return logits;
}

LossResult weighted_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                                  const ClassWeights& weights) {
  if (logits.shape.size() != 2) throw std::invalid_argument("loss: logits must be [B,C]");
  const int b_count = logits.shape[0], classes = logits.shape[1];
  if (static_cast<int>(labels.size()) != b_count)
    throw std::invalid_argument("loss: labels size does not match batch");
  if (static_cast<int>(weights.weights.size()) != classes)
    throw std::invalid_argument("loss: weights size does not match classes");
  check_labels(labels, classes);

  LossResult result;
  result.dlogits = Tensor::zeros(logits.shape);
  const double inv_b = 1.0 / b_count;
  for (int b = 0; b < b_count; ++b) {
    const double* row = logits.data.data() + static_cast<std::size_t>(b) * classes;
    const std::vector<double> p = softmax_row(row, classes);
    const int y = labels[b];
    const double w = weights.weights[y];
    // -log p[y] via the max-subtracted form to avoid log(0) overflow.
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < classes; ++j) mx = std::max(mx, row[j]);
    double lse = 0.0;
    for (int j = 0; j < classes; ++j) lse += std::exp(row[j] - mx);
    result.loss += w * (std::log(lse) - (row[y] - mx)) * inv_b;

    double* drow = result.dlogits.data.data() + static_cast<std::size_t>(b) * classes;
    for (int j = 0; j < classes; ++j) drow[j] = w * inv_b * (p[j] - (j == y ? 1.0 : 0.0));
  }
  return result;
}

Gradients backward(const ModelState& state, const ForwardCache& cache, const Tensor& dlogits) {
  if (cache.step_serial != state.step_serial)
    throw std::logic_error("backward: cache is stale (state was updated after forward)");
  const ModelConfig& cfg = state.config;
  const int blocks = state.num_blocks();
  if (static_cast<int>(cache.relu_out.size()) != blocks)
    throw std::logic_error("backward: cache does not match model");
  const int b_count = cache.input.shape[0];
  if (dlogits.shape != std::vector<int>{b_count, cfg.num_classes})
    throw std::invalid_argument("backward: dlogits shape mismatch");

  Gradients grads;
  grads.params.resize(state.params.size());
  for (std::size_t i = 0; i < state.params.size(); ++i)
    grads.params[i] = Tensor::zeros(state.params[i].shape);
  grads.block_activations.resize(blocks);

  const int c_last = cfg.conv_channels.back();
  const int last_size = cfg.input_size >> blocks;
  const std::size_t last_spatial = static_cast<std::size_t>(last_size) * last_size;

  // Head: dW = dlogits^T . gap, db = column sums, dgap = dlogits . W.
  Tensor dgap = Tensor::zeros({b_count, c_last});
  {
    Tensor& dhw = grads.params[grads.params.size() - 2];
    Tensor& dhb = grads.params[grads.params.size() - 1];
    const Tensor& hw = state.head_weight();
    for (int b = 0; b < b_count; ++b)
      for (int j = 0; j < cfg.num_classes; ++j) {
        const double g = dlogits.data[static_cast<std::size_t>(b) * cfg.num_classes + j];
        dhb.data[j] += g;
        for (int c = 0; c < c_last; ++c) {
          dhw.data[static_cast<std::size_t>(j) * c_last + c] +=
              g * cache.gap.data[static_cast<std::size_t>(b) * c_last + c];
          dgap.data[static_cast<std::size_t>(b) * c_last + c] +=
              g * hw.data[static_cast<std::size_t>(j) * c_last + c];
        }
      }
  }

  // GAP spreads its gradient uniformly over the pooled map.
  Tensor dpool = Tensor::zeros({b_count, c_last, last_size, last_size});
  const double inv_spatial = 1.0 / static_cast<double>(last_spatial);
  for (int b = 0; b < b_count; ++b)
    for (int c = 0; c < c_last; ++c) {
      const double g = dgap.data[static_cast<std::size_t>(b) * c_last + c] * inv_spatial;
      double* dst = dpool.data.data() + (static_cast<std::size_t>(b) * c_last + c) * last_spatial;
      for (std::size_t i = 0; i < last_spatial; ++i) dst[i] = g;
    }

  for (int k = blocks - 1; k >= 0; --k) {
    const int c_out = cfg.conv_channels[k];
    const int c_in = k == 0 ? 1 : cfg.conv_channels[k - 1];
    const int size = cfg.input_size >> k;
    const int half = size / 2;
    const std::size_t in_plane = static_cast<std::size_t>(size) * size;
    const std::size_t out_plane = static_cast<std::size_t>(half) * half;

    // Max pool: route the gradient to the stored argmax position.
    Tensor drelu = Tensor::zeros({b_count, c_out, size, size});
    for (int b = 0; b < b_count; ++b)
      for (int c = 0; c < c_out; ++c) {
        const std::size_t base = (static_cast<std::size_t>(b) * c_out + c);
        const double* g = dpool.data.data() + base * out_plane;
        const int* amx = cache.pool_argmax[k].data() + base * out_plane;
        double* dst = drelu.data.data() + base * in_plane;
        for (std::size_t i = 0; i < out_plane; ++i) dst[amx[i]] += g[i];
      }
    grads.block_activations[k] = drelu;

    // ReLU gate on the pre-activation.
    Tensor dconv = std::move(drelu);
    const Tensor& conv = cache.conv_out[k];
    for (std::size_t i = 0; i < dconv.data.size(); ++i)
      if (!(conv.data[i] > 0.0)) dconv.data[i] = 0.0;

    const Tensor& block_input = k == 0 ? cache.input : cache.pool_out[k - 1];
    Tensor& dw = grads.params[2 * k];
    Tensor& db = grads.params[2 * k + 1];
    for (int b = 0; b < b_count; ++b)
      conv3x3_backward_params(dconv.data.data() + b * c_out * in_plane, c_out, size, size,
                              block_input.data.data() + b * c_in * in_plane, c_in,
                              dw.data.data(), db.data.data());

    if (k > 0) {
      Tensor dinput = Tensor::zeros({b_count, c_in, size, size});
      for (int b = 0; b < b_count; ++b)
        conv3x3_backward_input(dconv.data.data() + b * c_out * in_plane, c_out, size, size,
                               state.conv_weight(k).data.data(), c_in,
                               dinput.data.data() + b * c_in * in_plane);
      dpool = std::move(dinput);
    }
  }
  return grads;
}

void adam_step(ModelState& state, const Gradients& grads, const TrainConfig& cfg) {
  validate(cfg);
  if (grads.params.size() != state.params.size())
    throw std::invalid_argument("adam_step: gradient count mismatch");

  for (std::size_t i = 0; i < state.params.size(); ++i) {
    Tensor& theta = state.params[i];
    AdamSlot& slot = state.adam[i];
    if (!grads.params[i].same_shape(theta))
      throw std::invalid_argument("adam_step: gradient shape mismatch at param " +
                                  std::to_string(i));
    slot.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(slot.t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(slot.t));
    for (std::size_t j = 0; j < theta.data.size(); ++j) {
      const double g = grads.params[i].data[j] + cfg.weight_decay * theta.data[j];
      slot.m.data[j] = cfg.adam_beta1 * slot.m.data[j] + (1.0 - cfg.adam_beta1) * g;
      slot.v.data[j] = cfg.adam_beta2 * slot.v.data[j] + (1.0 - cfg.adam_beta2) * g * g;
      const double m_hat = slot.m.data[j] / bc1;
      const double v_hat = slot.v.data[j] / bc2;
      theta.data[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
  ++state.step_serial;
}

namespace {

Tensor batch_from_patches(const std::vector<FloatPatch>& items, int input_size) {
  const int b_count = static_cast<int>(items.size());
  Tensor batch = Tensor::zeros({b_count, 1, input_size, input_size});
  const std::size_t plane = static_cast<std::size_t>(input_size) * input_size;
  for (int b = 0; b < b_count; ++b) {
    if (items[b].width != input_size || items[b].height != input_size)
      throw std::invalid_argument("batch: item size does not match model input");
    std::copy(items[b].values.begin(), items[b].values.end(), batch.data.begin() + b * plane);
  }
  return batch;
}

double eval_accuracy(const ModelState& state, const std::vector<const LabeledPatch*>& items,
                     const AugmentationConfig& aug_cfg, const TaskSpec& task) {
  const Predictions pred = predict(state, items, aug_cfg);
  int hits = 0;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (pred.classes[i] == map_label(items[i]->pathology, task)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(items.size());
}

}  // namespace

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const AugmentationConfig& aug_cfg, const std::vector<LabeledPatch>& dataset,
                  const TaskSpec& task) {
  validate(model_cfg);
  validate(train_cfg);
  validate(aug_cfg);
  if (aug_cfg.target_size != model_cfg.input_size)
    throw std::invalid_argument("train: augmentation target_size must equal model input_size");

  const auto train_items = select_split(dataset, Split::TRAIN);
  if (train_items.empty()) throw std::invalid_argument("train: dataset has no TRAIN split");
  const auto val_items = select_split(dataset, Split::VALIDATION);

  const ClassWeights weights = compute_class_weights(class_counts(dataset, Split::TRAIN, task));

  TrainResult result;
  result.state = init_model(model_cfg);
  ModelState& state = result.state;

  RandomStream run_stream(train_cfg.seed);
  const std::size_t n = train_items.size();
  std::vector<std::size_t> order(n);
  std::uint64_t item_counter = 0;

  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = run_stream.next_below(i + 1);
      std::swap(order[i], order[j]);
    }

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += train_cfg.batch_size) {
      const std::size_t stop = std::min(n, start + train_cfg.batch_size);
      std::vector<FloatPatch> images;
      std::vector<int> labels;
      images.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const LabeledPatch& item = *train_items[order[i]];
        // Per-item child stream keyed by the running item counter, so batch
        // assembly could be parallelized without changing any draw.
        RandomStream item_stream(RandomStream::mix(train_cfg.seed, item_counter++));
        images.push_back(apply_pipeline(item.image, aug_cfg, item_stream, /*training=*/true,
                                        &result.augment_stats));
        labels.push_back(map_label(item.pathology, task));
      }
      ForwardCache cache;
      const Tensor batch = batch_from_patches(images, model_cfg.input_size);
      const Tensor logits = forward(state, batch, &cache);
      const LossResult loss = weighted_cross_entropy(logits, labels, weights);
      const Gradients grads = backward(state, cache, loss.dlogits);
      adam_step(state, grads, train_cfg);
      loss_sum += loss.loss * static_cast<double>(stop - start);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(n);
    record.val_accuracy = val_items.empty()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : eval_accuracy(state, val_items, aug_cfg, task);
    result.epochs.push_back(record);
  }
  return result;
}

Predictions predict(const ModelState& state, const std::vector<IntensityPatch>& patches,
                    const AugmentationConfig& aug_cfg) {
  std::vector<const IntensityPatch*> ptrs;
  ptrs.reserve(patches.size());
  for (const auto& p : patches) ptrs.push_back(&p);

  Predictions out;
  RandomStream unused(0);  // eval path consumes no draws
  const int chunk = 16;
  for (std::size_t start = 0; start < ptrs.size(); start += chunk) {
    const std::size_t stop = std::min(ptrs.size(), start + chunk);
    std::vector<FloatPatch> images;
    images.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i)
      images.push_back(apply_pipeline(*ptrs[i], aug_cfg, unused, /*training=*/false));
    const Tensor logits = forward(state, batch_from_patches(images, state.config.input_size));
    const int classes = state.config.num_classes;
    for (std::size_t b = 0; b < stop - start; ++b) {
      const double* row = logits.data.data() + b * classes;
      std::vector<double> p = softmax_row(row, classes);
      int best = 0;
      for (int j = 1; j < classes; ++j)
        if (p[j] > p[best]) best = j;  // lowest index wins ties
      out.classes.push_back(best);
      out.probabilities.push_back(std::move(p));
    }
  }
  return out;
}

Predictions predict(const ModelState& state, const std::vector<const LabeledPatch*>& items,
                    const AugmentationConfig& aug_cfg) {
  std::vector<IntensityPatch> patches;
  patches.reserve(items.size());
  for (const auto* item : items) patches.push_back(item->image);
  return predict(state, patches, aug_cfg);
}

}  // namespace rhe
