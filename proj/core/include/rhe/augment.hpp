#pragma once

#include <cstdint>
#include <utility>

#include "rhe/image.hpp"
#include "rhe/random_stream.hpp"

namespace rhe {

// Probabilities and parameters of the stochastic training pipeline. p_rhe is
// the probability that a patch is histogram-equalized, the quantity the
// experiment sweeps over.
struct AugmentationConfig {
  double p_hflip = 0.5;
  double p_vflip = 0.5;
  double p_rotate = 0.5;
  double rotate_max_degrees = 25.0;
  double p_erase = 0.1;
  std::pair<double, double> erase_area_range{0.02, 0.2};
  std::pair<double, double> erase_aspect_range{0.3, 3.3};
  double p_rhe = 0.0;
  int target_size = 224;  // desk preset uses 64
};

// Throws std::invalid_argument when a probability or range is out of bounds.
void validate(const AugmentationConfig& cfg);

// Per-call application counters, aggregated by the trainer for run logs.
struct AugmentStats {
  std::uint64_t rhe_applied = 0;
  std::uint64_t hflip_applied = 0;
  std::uint64_t vflip_applied = 0;
  std::uint64_t rotate_applied = 0;
  std::uint64_t erase_applied = 0;

  AugmentStats& operator+=(const AugmentStats& o) {
    rhe_applied += o.rhe_applied;
    hflip_applied += o.hflip_applied;
    vflip_applied += o.vflip_applied;
    rotate_applied += o.rotate_applied;
    erase_applied += o.erase_applied;
    return *this;
  }
};

// Each random_* transform consumes exactly one Bernoulli draw, plus parameter
// draws only when it fires.
IntensityPatch random_histogram_equalization(const IntensityPatch& patch, double p_rhe,
                                             RandomStream& rng, bool* applied = nullptr);
IntensityPatch random_horizontal_flip(const IntensityPatch& patch, double p, RandomStream& rng,
                                      bool* applied = nullptr);
IntensityPatch random_vertical_flip(const IntensityPatch& patch, double p, RandomStream& rng,
                                    bool* applied = nullptr);
FloatPatch random_horizontal_flip(const FloatPatch& patch, double p, RandomStream& rng,
                                  bool* applied = nullptr);
FloatPatch random_vertical_flip(const FloatPatch& patch, double p, RandomStream& rng,
                                bool* applied = nullptr);

// Angle is uniform in [-max_degrees, +max_degrees]; a drawn angle of exactly
// 0 bypasses resampling.
FloatPatch random_rotation(const FloatPatch& patch, double p, double max_degrees,
                           RandomStream& rng, bool* applied = nullptr);

// Zhong-style random erasing: sample an area fraction and a log-uniform
// aspect ratio, zero-fill the derived rectangle. An attempt fits only if the
// rectangle lies inside the patch and its realized pixel fraction stays in
// area_range; after 10 misses the patch is returned unchanged.
FloatPatch random_erasing(const FloatPatch& patch, double p,
                          std::pair<double, double> area_range,
                          std::pair<double, double> aspect_range, RandomStream& rng,
                          bool* applied = nullptr);

// Training order: RHE on raw intensities, horizontal flip, vertical flip,
// normalize, rotation, resize to target_size^2, erasing. Draws are consumed
// in that order. Evaluation (training == false) consumes no draws: HE is
// applied deterministically iff p_rhe == 1, then normalize + resize.
FloatPatch apply_pipeline(const IntensityPatch& patch, const AugmentationConfig& cfg,
                          RandomStream& rng, bool training, AugmentStats* stats = nullptr);

}  // namespace rhe
