#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rhe/augment.hpp"
#include "rhe/dataset.hpp"
#include "rhe/model.hpp"
#include "rhe/stats.hpp"
#include "rhe/synthetic.hpp"

namespace rhe {

// Presets fix the scale knobs: `paper` is the published protocol (224x224
// inputs, lr 3.2e-6); `desk` shrinks to 64x64 at lr 1e-3 so a full sweep
// finishes on a laptop CPU. Individual config keys still override either.
enum class Preset { PAPER, DESK };

Preset parse_preset(const std::string& text);

// Either a manifest on disk or an in-memory synthetic corpus.
struct DataConfig {
  bool use_synthetic = true;
  std::filesystem::path manifest;
  std::filesystem::path root;  // base for manifest-relative paths
  SyntheticParams synthetic;
  std::uint64_t synthetic_seed = 7;
};

struct ExperimentConfig {
  TaskSpec task = make_task(TaskKind::TWO_CLASS);
  std::vector<double> p_values{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  int runs_per_p = 5;
  std::uint64_t base_seed = 1;
  // Single-run commands (train, gradcam) use one probability and one seed.
  double p_single = 0.0;
  std::uint64_t seed_single = 1;
  int jobs = 1;
  ModelConfig model;
  TrainConfig train;
  AugmentationConfig augment;
  DataConfig data;
  std::filesystem::path output_dir = "out";
  std::filesystem::path checkpoint;  // input for the gradcam command
  int gradcam_count = 3;
};

ExperimentConfig default_config(Preset preset);

// Reads a JSON config; keys override the preset's defaults. Unknown keys at
// any level are rejected. out_override, when nonempty, replaces output_dir.
ExperimentConfig load_experiment_config(const std::filesystem::path& path, Preset preset,
                                        const std::filesystem::path& out_override = {});

void validate(const ExperimentConfig& cfg);

// Manifest load or deterministic synthetic generation, per cfg.data.
std::vector<LabeledPatch> load_dataset(const ExperimentConfig& cfg);

struct RunOutcome {
  double p = 0.0;
  int run_index = 0;
  std::uint64_t seed = 0;
  MetricSample metrics;  // test-split accuracy and macro-F1, rounded to 1e-6
  std::vector<EpochRecord> epochs;
  AugmentStats augment_stats;
  ModelState state;
};

// One training run at probability p with the given seed; the seed drives
// both initialization and data order.
RunOutcome run_single(const ExperimentConfig& cfg, const std::vector<LabeledPatch>& dataset,
                      double p, int run_index, std::uint64_t seed);

// Writes epochs.csv, metrics.json and model.ckpt into dir.
void write_run_outputs(const ExperimentConfig& cfg, const RunOutcome& outcome,
                       const std::filesystem::path& dir);

void cmd_synth(const ExperimentConfig& cfg, std::ostream& log);
void cmd_train(const ExperimentConfig& cfg, std::ostream& log);
void cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);
void cmd_gradcam(const ExperimentConfig& cfg, std::ostream& log);

// Fixed-point decimal formatting used by every report writer, so identical
// configs yield byte-identical files.
std::string format_fixed(double value, int decimals);
std::string format_probability(double p);
double round6(double value);

}  // namespace rhe
