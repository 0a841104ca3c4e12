#include "rhe/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rhe/checkpoint.hpp"
#include "rhe/gradcam.hpp"
#include "rhe/pgm_io.hpp"

namespace rhe {

using ordered_json = nlohmann::ordered_json;

namespace {

// Seed tag separating weight initialization from the data-order stream.
constexpr std::uint64_t kInitTag = 0x696e6974;  // "init"

void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return key == k; }) == allowed.end())
      throw std::invalid_argument("config: unknown key \"" + key + "\" in " + context);
  }
}

std::pair<double, double> read_range(const nlohmann::json& value, const std::string& context) {
  if (!value.is_array() || value.size() != 2)
    throw std::invalid_argument("config: " + context + " must be a [lo, hi] pair");
  return {value[0].get<double>(), value[1].get<double>()};
}

std::array<int, 3> read_counts(const nlohmann::json& value, const std::string& context) {
  if (!value.is_array() || value.size() != 3)
    throw std::invalid_argument("config: " + context +
                                " must list three per-class counts "
                                "(malignant, benign, benign_without_callback)");
  return {value[0].get<int>(), value[1].get<int>(), value[2].get<int>()};
}

void apply_model_overrides(const nlohmann::json& obj, ModelConfig& cfg) {
  check_keys(obj, {"input_size", "conv_channels"}, "model");
  if (obj.contains("input_size")) cfg.input_size = obj.at("input_size").get<int>();
  if (obj.contains("conv_channels"))
    cfg.conv_channels = obj.at("conv_channels").get<std::vector<int>>();
}

void apply_train_overrides(const nlohmann::json& obj, TrainConfig& cfg) {
  check_keys(obj,
             {"epochs", "batch_size", "learning_rate", "weight_decay", "adam_beta1",
              "adam_beta2", "adam_eps"},
             "train");
  if (obj.contains("epochs")) cfg.epochs = obj.at("epochs").get<int>();
  if (obj.contains("batch_size")) cfg.batch_size = obj.at("batch_size").get<int>();
  if (obj.contains("learning_rate")) cfg.learning_rate = obj.at("learning_rate").get<double>();
  if (obj.contains("weight_decay")) cfg.weight_decay = obj.at("weight_decay").get<double>();
  if (obj.contains("adam_beta1")) cfg.adam_beta1 = obj.at("adam_beta1").get<double>();
  if (obj.contains("adam_beta2")) cfg.adam_beta2 = obj.at("adam_beta2").get<double>();
  if (obj.contains("adam_eps")) cfg.adam_eps = obj.at("adam_eps").get<double>();
}

void apply_augment_overrides(const nlohmann::json& obj, AugmentationConfig& cfg) {
  check_keys(obj,
             {"p_hflip", "p_vflip", "p_rotate", "rotate_max_degrees", "p_erase", "erase_area",
              "erase_aspect"},
             "augment");
  if (obj.contains("p_hflip")) cfg.p_hflip = obj.at("p_hflip").get<double>();
  if (obj.contains("p_vflip")) cfg.p_vflip = obj.at("p_vflip").get<double>();
  if (obj.contains("p_rotate")) cfg.p_rotate = obj.at("p_rotate").get<double>();
  if (obj.contains("rotate_max_degrees"))
    cfg.rotate_max_degrees = obj.at("rotate_max_degrees").get<double>();
  if (obj.contains("p_erase")) cfg.p_erase = obj.at("p_erase").get<double>();
  if (obj.contains("erase_area")) cfg.erase_area_range = read_range(obj.at("erase_area"), "erase_area");
  if (obj.contains("erase_aspect"))
    cfg.erase_aspect_range = read_range(obj.at("erase_aspect"), "erase_aspect");
}

void apply_synthetic_overrides(const nlohmann::json& obj, DataConfig& data) {
  check_keys(obj,
             {"seed", "width", "height", "bit_depth", "train_counts", "validation_counts",
              "test_counts", "train_gamma", "test_gamma", "contrast_scale"},
             "data.synthetic");
  SyntheticParams& p = data.synthetic;
  if (obj.contains("seed")) data.synthetic_seed = obj.at("seed").get<std::uint64_t>();
  if (obj.contains("width")) p.width = obj.at("width").get<int>();
  if (obj.contains("height")) p.height = obj.at("height").get<int>();
  if (obj.contains("bit_depth")) p.bit_depth = obj.at("bit_depth").get<int>();
  if (obj.contains("train_counts"))
    p.train_counts = read_counts(obj.at("train_counts"), "train_counts");
  if (obj.contains("validation_counts"))
    p.validation_counts = read_counts(obj.at("validation_counts"), "validation_counts");
  if (obj.contains("test_counts")) p.test_counts = read_counts(obj.at("test_counts"), "test_counts");
  if (obj.contains("train_gamma")) p.train_gamma = read_range(obj.at("train_gamma"), "train_gamma");
  if (obj.contains("test_gamma")) p.test_gamma = read_range(obj.at("test_gamma"), "test_gamma");
  if (obj.contains("contrast_scale"))
    p.contrast_scale = read_range(obj.at("contrast_scale"), "contrast_scale");
}

void apply_data_overrides(const nlohmann::json& obj, const std::filesystem::path& config_dir,
                          DataConfig& data) {
  check_keys(obj, {"manifest", "root", "synthetic"}, "data");
  if (obj.contains("manifest") && obj.contains("synthetic"))
    throw std::invalid_argument("config: data must use either manifest or synthetic, not both");
  if (obj.contains("manifest")) {
    data.use_synthetic = false;
    std::filesystem::path manifest = obj.at("manifest").get<std::string>();
    if (manifest.is_relative()) manifest = config_dir / manifest;
    data.manifest = manifest;
    data.root = manifest.parent_path();
    if (obj.contains("root")) {
      std::filesystem::path root = obj.at("root").get<std::string>();
      data.root = root.is_relative() ? config_dir / root : root;
    }
  } else {
    if (obj.contains("root"))
      throw std::invalid_argument("config: data.root requires data.manifest");
    data.use_synthetic = true;
    if (obj.contains("synthetic")) apply_synthetic_overrides(obj.at("synthetic"), data);
  }
}

std::ofstream open_text(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: keep \n on every platform
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::string metric_cell(const SummaryStat& s) {
  return format_fixed(s.mean, 4) + " (" + format_fixed(s.sd, 4) + ")";
}

ordered_json ttest_block(const std::vector<double>& baseline, const std::vector<double>& other) {
  ordered_json block;
  try {
    const TTestResult r = t_test(baseline, other, TTestVariant::POOLED);
    block["t"] = round6(r.t_statistic);
    block["df"] = round6(r.degrees_of_freedom);
    block["p_value"] = round6(r.p_value);
  } catch (const std::invalid_argument& e) {
    block["error"] = e.what();
  }
  return block;
}

}  // namespace

Preset parse_preset(const std::string& text) {
  if (text == "paper") return Preset::PAPER;
  if (text == "desk") return Preset::DESK;
  throw std::invalid_argument("unknown preset \"" + text + "\" (expected desk or paper)");
}

ExperimentConfig default_config(Preset preset) {
  ExperimentConfig cfg;  // field initializers carry the published protocol
  if (preset == Preset::DESK) {
    cfg.model.input_size = 64;
    cfg.model.conv_channels = {8, 16, 32, 64};
    cfg.train.learning_rate = 1e-3;
    cfg.train.epochs = 75;
    cfg.train.batch_size = 8;
  }
  cfg.augment.target_size = cfg.model.input_size;
  cfg.model.num_classes = cfg.task.num_classes();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, Preset preset,
                                        const std::filesystem::path& out_override) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");

  check_keys(root,
             {"task", "p_values", "runs_per_p", "base_seed", "p", "seed", "jobs", "output_dir",
              "model", "train", "augment", "data", "checkpoint", "gradcam_count"},
             "top level");

  ExperimentConfig cfg = default_config(preset);
  const std::filesystem::path config_dir = path.parent_path();

  if (root.contains("task")) cfg.task = make_task(parse_task(root.at("task").get<std::string>()));
  if (root.contains("p_values")) cfg.p_values = root.at("p_values").get<std::vector<double>>();
  if (root.contains("runs_per_p")) cfg.runs_per_p = root.at("runs_per_p").get<int>();
  if (root.contains("base_seed")) cfg.base_seed = root.at("base_seed").get<std::uint64_t>();
  cfg.seed_single = cfg.base_seed;
  if (root.contains("p")) cfg.p_single = root.at("p").get<double>();
  if (root.contains("seed")) cfg.seed_single = root.at("seed").get<std::uint64_t>();
  if (root.contains("jobs")) cfg.jobs = root.at("jobs").get<int>();
  if (root.contains("output_dir")) {
    std::filesystem::path out = root.at("output_dir").get<std::string>();
    cfg.output_dir = out.is_relative() ? config_dir / out : out;
  }
  if (root.contains("model")) apply_model_overrides(root.at("model"), cfg.model);
  if (root.contains("train")) apply_train_overrides(root.at("train"), cfg.train);
  if (root.contains("augment")) apply_augment_overrides(root.at("augment"), cfg.augment);
  if (root.contains("data")) apply_data_overrides(root.at("data"), config_dir, cfg.data);
  if (root.contains("checkpoint")) {
    std::filesystem::path ckpt = root.at("checkpoint").get<std::string>();
    cfg.checkpoint = ckpt.is_relative() ? config_dir / ckpt : ckpt;
  }
  if (root.contains("gradcam_count")) cfg.gradcam_count = root.at("gradcam_count").get<int>();

  if (!out_override.empty()) cfg.output_dir = out_override;
  cfg.model.num_classes = cfg.task.num_classes();
  cfg.augment.target_size = cfg.model.input_size;
  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.p_values.empty()) throw std::invalid_argument("config: p_values must be nonempty");
  for (double p : cfg.p_values)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("config: p value " + std::to_string(p) + " outside [0,1]");
  if (!(cfg.p_single >= 0.0 && cfg.p_single <= 1.0))
    throw std::invalid_argument("config: p outside [0,1]");
  if (cfg.runs_per_p < 1) throw std::invalid_argument("config: runs_per_p must be >= 1");
  if (cfg.jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
  if (cfg.gradcam_count < 1) throw std::invalid_argument("config: gradcam_count must be >= 1");
  validate(cfg.model);
  validate(cfg.train);
  validate(cfg.augment);
  if (cfg.data.use_synthetic) validate(cfg.data.synthetic);
}

std::vector<LabeledPatch> load_dataset(const ExperimentConfig& cfg) {
  if (cfg.data.use_synthetic)
    return generate_synthetic_dataset(cfg.data.synthetic, cfg.data.synthetic_seed);
  return load_manifest(cfg.data.manifest, cfg.data.root);
}

RunOutcome run_single(const ExperimentConfig& cfg, const std::vector<LabeledPatch>& dataset,
                      double p, int run_index, std::uint64_t seed) {
  ModelConfig model_cfg = cfg.model;
  model_cfg.init_seed = RandomStream::mix(seed, kInitTag);
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = seed;
  AugmentationConfig aug_cfg = cfg.augment;
  aug_cfg.p_rhe = p;

  RunOutcome outcome;
  outcome.p = p;
  outcome.run_index = run_index;
  outcome.seed = seed;

  TrainResult result = train(model_cfg, train_cfg, aug_cfg, dataset, cfg.task);
  outcome.epochs = std::move(result.epochs);
  outcome.augment_stats = result.augment_stats;
  outcome.state = std::move(result.state);

  const auto test_items = select_split(dataset, Split::TEST);
  if (test_items.empty()) throw std::invalid_argument("run: dataset has no TEST split");
  const Predictions pred = predict(outcome.state, test_items, aug_cfg);
  std::vector<int> labels;
  labels.reserve(test_items.size());
  for (const auto* item : test_items) labels.push_back(map_label(item->pathology, cfg.task));

  outcome.metrics.accuracy = round6(accuracy(pred.classes, labels));
  outcome.metrics.f1 = round6(f1_score(pred.classes, labels, cfg.task.num_classes()));
  outcome.metrics.seed = seed;
  return outcome;
}

void write_run_outputs(const ExperimentConfig& cfg, const RunOutcome& outcome,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    auto out = open_text(dir / "epochs.csv");
    out << "# task=" << to_string(cfg.task.kind) << " p=" << format_probability(outcome.p)
        << " seed=" << outcome.seed << " epochs=" << cfg.train.epochs
        << " batch_size=" << cfg.train.batch_size
        << " learning_rate=" << format_fixed(cfg.train.learning_rate, 10)
        << " weight_decay=" << format_fixed(cfg.train.weight_decay, 10) << "\n";
    out << "epoch,train_loss,val_accuracy\n";
    for (const EpochRecord& e : outcome.epochs)
      out << e.epoch << "," << format_fixed(e.train_loss, 6) << ","
          << format_fixed(e.val_accuracy, 6) << "\n";
  }

  {
    ordered_json m;
    m["task"] = to_string(cfg.task.kind);
    m["p"] = outcome.p;
    m["run"] = outcome.run_index;
    m["seed"] = outcome.seed;
    m["accuracy"] = outcome.metrics.accuracy;
    m["f1"] = outcome.metrics.f1;
    m["epochs"] = static_cast<int>(outcome.epochs.size());
    m["final_train_loss"] = round6(outcome.epochs.back().train_loss);
    m["rhe_applied_count"] = outcome.augment_stats.rhe_applied;
    m["hflip_applied_count"] = outcome.augment_stats.hflip_applied;
    m["vflip_applied_count"] = outcome.augment_stats.vflip_applied;
    m["rotate_applied_count"] = outcome.augment_stats.rotate_applied;
    m["erase_applied_count"] = outcome.augment_stats.erase_applied;
    auto out = open_text(dir / "metrics.json");
    out << m.dump(2) << "\n";
  }

  save_checkpoint(outcome.state, dir / "model.ckpt");
}

void cmd_synth(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.data.use_synthetic)
    throw std::invalid_argument("synth: config selects a manifest, nothing to generate");
  const auto dataset = generate_synthetic_dataset(cfg.data.synthetic, cfg.data.synthetic_seed);
  const auto manifest = write_synthetic_dataset(dataset, cfg.output_dir);

  for (Split split : {Split::TRAIN, Split::VALIDATION, Split::TEST}) {
    std::size_t total = 0;
    std::string detail;
    for (PathologyLabel label :
         {PathologyLabel::MALIGNANT, PathologyLabel::BENIGN,
          PathologyLabel::BENIGN_WITHOUT_CALLBACK}) {
      std::size_t count = 0;
      for (const auto& item : dataset)
        if (item.split == split && item.pathology == label) ++count;
      total += count;
      if (!detail.empty()) detail += ", ";
      detail += std::string(to_string(label)) + "=" + std::to_string(count);
    }
    log << to_string(split) << ": " << total << " (" << detail << ")\n";
  }
  log << "manifest: " << manifest.string() << "\n";
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  const auto dataset = load_dataset(cfg);
  const RunOutcome outcome = run_single(cfg, dataset, cfg.p_single, 0, cfg.seed_single);
  write_run_outputs(cfg, outcome, cfg.output_dir);
  log << "p=" << format_probability(outcome.p) << " seed=" << outcome.seed
      << " accuracy=" << format_fixed(outcome.metrics.accuracy, 6)
      << " f1=" << format_fixed(outcome.metrics.f1, 6) << "\n";
}

void cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  const auto dataset = load_dataset(cfg);

  struct Job {
    double p;
    int run_index;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double p : cfg.p_values)
    for (int r = 0; r < cfg.runs_per_p; ++r)
      jobs.push_back({p, r, cfg.base_seed + static_cast<std::uint64_t>(r)});

  std::vector<RunOutcome> outcomes(jobs.size());
  std::vector<std::string> failures(jobs.size());
  const int workers = std::min<int>(cfg.jobs, static_cast<int>(jobs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const Job& job = jobs[i];
      try {
        outcomes[i] = run_single(cfg, dataset, job.p, job.run_index, job.seed);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
        const Job& job = jobs[i];
        try {
          outcomes[i] = run_single(cfg, dataset, job.p, job.run_index, job.seed);
        } catch (const std::exception& e) {
          failures[i] = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (!failures[i].empty())
      throw std::runtime_error("sweep: run p=" + format_probability(jobs[i].p) +
                               " seed=" + std::to_string(jobs[i].seed) +
                               " failed: " + failures[i]);

  std::filesystem::create_directories(cfg.output_dir);
  const std::string task_name = to_string(cfg.task.kind);

  {
    auto out = open_text(cfg.output_dir / "runs.csv");
    out << "task,p,run,seed,accuracy,f1\n";
    for (const RunOutcome& o : outcomes)
      out << task_name << "," << format_probability(o.p) << "," << o.run_index << "," << o.seed
          << "," << format_fixed(o.metrics.accuracy, 6) << "," << format_fixed(o.metrics.f1, 6)
          << "\n";
  }

  std::vector<RunAggregate> aggregates;
  {
    auto out = open_text(cfg.output_dir / "summary.csv");
    out << "task,p,accuracy,f1\n";
    std::size_t idx = 0;
    for (double p : cfg.p_values) {
      std::vector<MetricSample> samples;
      for (int r = 0; r < cfg.runs_per_p; ++r) samples.push_back(outcomes[idx++].metrics);
      if (samples.size() < 2) {
        // A single run has no spread; print it as mean with zero sd.
        RunAggregate a;
        a.accuracy = {samples[0].accuracy, 0.0};
        a.f1 = {samples[0].f1, 0.0};
        aggregates.push_back(a);
      } else {
        aggregates.push_back(aggregate_runs(samples));
      }
      out << task_name << "," << format_probability(p) << "," << metric_cell(aggregates.back().accuracy)
          << "," << metric_cell(aggregates.back().f1) << "\n";
    }
  }

  {
    ordered_json report;
    report["task"] = task_name;
    report["variant"] = "pooled";
    report["baseline_p"] = cfg.p_values.front();
    report["comparisons"] = ordered_json::array();

    auto metric_values = [&](std::size_t p_index, bool f1) {
      std::vector<double> values;
      for (int r = 0; r < cfg.runs_per_p; ++r) {
        const MetricSample& m = outcomes[p_index * cfg.runs_per_p + r].metrics;
        values.push_back(f1 ? m.f1 : m.accuracy);
      }
      return values;
    };
    const std::vector<double> base_acc = metric_values(0, false);
    const std::vector<double> base_f1 = metric_values(0, true);
    for (std::size_t pi = 1; pi < cfg.p_values.size(); ++pi) {
      ordered_json entry;
      entry["p"] = cfg.p_values[pi];
      if (cfg.runs_per_p >= 2) {
        entry["accuracy"] = ttest_block(base_acc, metric_values(pi, false));
        entry["f1"] = ttest_block(base_f1, metric_values(pi, true));
      } else {
        entry["error"] = "need at least 2 runs per p";
      }
      report["comparisons"].push_back(entry);
    }
    auto out = open_text(cfg.output_dir / "ttests.json");
    out << report.dump(2) << "\n";
  }

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string dir_name =
        "p" + format_probability(jobs[i].p) + "_run" + std::to_string(jobs[i].run_index);
    write_run_outputs(cfg, outcomes[i], cfg.output_dir / dir_name);
  }

  for (std::size_t pi = 0; pi < cfg.p_values.size(); ++pi)
    log << task_name << " p=" << format_probability(cfg.p_values[pi])
        << " accuracy=" << metric_cell(aggregates[pi].accuracy)
        << " f1=" << metric_cell(aggregates[pi].f1) << "\n";
}

void cmd_gradcam(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.checkpoint.empty())
    throw std::invalid_argument("gradcam: config needs a checkpoint path");
  const ModelState state = load_checkpoint(cfg.checkpoint);
  if (state.config.num_classes != cfg.task.num_classes())
    throw std::invalid_argument("gradcam: checkpoint has " +
                                std::to_string(state.config.num_classes) +
                                " classes but the task expects " +
                                std::to_string(cfg.task.num_classes()));

  AugmentationConfig aug_cfg = cfg.augment;
  aug_cfg.p_rhe = cfg.p_single;
  aug_cfg.target_size = state.config.input_size;

  const auto dataset = load_dataset(cfg);
  auto items = select_split(dataset, Split::TEST);
  if (items.empty()) throw std::invalid_argument("gradcam: dataset has no TEST split");
  if (static_cast<int>(items.size()) > cfg.gradcam_count)
    items.resize(cfg.gradcam_count);

  std::filesystem::create_directories(cfg.output_dir);
  const auto class_names = cfg.task.class_names();
  RandomStream unused(0);
  for (const LabeledPatch* item : items) {
    const FloatPatch input = apply_pipeline(item->image, aug_cfg, unused, /*training=*/false);
    const Predictions pred = predict(state, std::vector<IntensityPatch>{item->image}, aug_cfg);
    const int predicted = pred.classes[0];
    const int truth = map_label(item->pathology, cfg.task);
    const Heatmap map = grad_cam(state, input, predicted);
    const std::string stem =
        item->source_id + "_" + class_names[truth] + "_" + class_names[predicted];
    render_overlay(input, map, cfg.output_dir / stem);
    log << stem << "_cam.pgm\n";
  }
}

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

std::string format_probability(double p) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%g", p);
  return buffer;
}

double round6(double value) {
  if (std::isnan(value)) return value;
  return std::round(value * 1e6) / 1e6;
}

}  // namespace rhe
