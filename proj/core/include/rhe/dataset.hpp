#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rhe/image.hpp"

namespace rhe {

enum class PathologyLabel { MALIGNANT, BENIGN, BENIGN_WITHOUT_CALLBACK };
enum class Split { TRAIN, VALIDATION, TEST };

PathologyLabel parse_pathology(const std::string& text);
Split parse_split(const std::string& text);
const char* to_string(PathologyLabel label);
const char* to_string(Split split);

enum class TaskKind { TWO_CLASS, THREE_CLASS };

// TWO_CLASS folds malignant and benign into a single follow-up class;
// THREE_CLASS keeps the pathology labels as-is.
struct TaskSpec {
  TaskKind kind = TaskKind::TWO_CLASS;

  int num_classes() const { return kind == TaskKind::TWO_CLASS ? 2 : 3; }
  std::vector<std::string> class_names() const;
};

TaskSpec make_task(TaskKind kind);
TaskKind parse_task(const std::string& text);
const char* to_string(TaskKind kind);

struct LabeledPatch {
  IntensityPatch image;
  PathologyLabel pathology = PathologyLabel::BENIGN;
  Split split = Split::TRAIN;
  std::string source_id;
};

int map_label(PathologyLabel pathology, const TaskSpec& task);

// Inverse-frequency weights w_c = N_total / (C * N_c); they satisfy
// sum_c w_c * N_c == N_total.
struct ClassWeights {
  std::vector<double> weights;
};

ClassWeights compute_class_weights(const std::vector<int>& counts);

// CSV manifest with required header `path,pathology,split`; paths resolve
// against data_root. Rows with unknown labels, bad fields, or unreadable
// files raise an error naming the offending row.
std::vector<LabeledPatch> load_manifest(const std::filesystem::path& manifest_path,
                                        const std::filesystem::path& data_root);

std::vector<const LabeledPatch*> select_split(const std::vector<LabeledPatch>& dataset,
                                              Split split);
std::vector<int> class_counts(const std::vector<LabeledPatch>& dataset, Split split,
                              const TaskSpec& task);

}  // namespace rhe
