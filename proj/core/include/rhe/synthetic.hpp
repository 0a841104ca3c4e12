#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "rhe/dataset.hpp"
#include "rhe/random_stream.hpp"

namespace rhe {

// Desk-scale stand-in for a calcification-patch corpus. Class archetypes
// differ in blob count, size, clustering, and brightness; the test split
// draws its per-image gamma from a wider range than training, so models must
// tolerate a contrast shift they never saw raw at train time.
struct SyntheticParams {
  int width = 64;
  int height = 64;
  int bit_depth = 16;
  // Per-class counts ordered MALIGNANT, BENIGN, BENIGN_WITHOUT_CALLBACK.
  std::array<int, 3> train_counts{100, 100, 100};
  std::array<int, 3> validation_counts{0, 0, 0};
  std::array<int, 3> test_counts{50, 50, 50};
  std::pair<double, double> train_gamma{0.7, 1.4};
  std::pair<double, double> test_gamma{0.5, 1.8};
  std::pair<double, double> contrast_scale{0.6, 1.0};
};

void validate(const SyntheticParams& params);

// Generation trace for one patch; the mask and pre-gamma field exist so tests
// can check blob statistics against the generator's own bookkeeping.
struct SyntheticPatch {
  IntensityPatch image;
  FloatPatch pre_gamma;             // after contrast scale, before gamma
  std::vector<std::uint8_t> blob_mask;  // 1 where blob contribution is significant
};

SyntheticPatch generate_synthetic_patch(PathologyLabel label, const SyntheticParams& params,
                                        std::pair<double, double> gamma_range,
                                        RandomStream& rng);

// Deterministic for a fixed (params, seed); items are generated in split
// order (train, validation, test) and class order (malignant, benign,
// benign-without-callback) from one sequential stream.
std::vector<LabeledPatch> generate_synthetic_dataset(const SyntheticParams& params,
                                                     std::uint64_t seed);

// Materializes the dataset as PGM files plus a manifest.csv under out_dir.
// Returns the manifest path.
std::filesystem::path write_synthetic_dataset(const std::vector<LabeledPatch>& dataset,
                                              const std::filesystem::path& out_dir);

}  // namespace rhe
