#include "rhe/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rhe/pgm_io.hpp"

namespace rhe {

PathologyLabel parse_pathology(const std::string& text) {
  if (text == "MALIGNANT") return PathologyLabel::MALIGNANT;
  if (text == "BENIGN") return PathologyLabel::BENIGN;
  if (text == "BENIGN_WITHOUT_CALLBACK") return PathologyLabel::BENIGN_WITHOUT_CALLBACK;
  throw std::invalid_argument("unknown pathology '" + text + "'");
}

Split parse_split(const std::string& text) {
  if (text == "TRAIN") return Split::TRAIN;
  if (text == "VALIDATION") return Split::VALIDATION;
  if (text == "TEST") return Split::TEST;
  throw std::invalid_argument("unknown split '" + text + "'");
}

const char* to_string(PathologyLabel label) {
  switch (label) {
    case PathologyLabel::MALIGNANT: return "MALIGNANT";
    case PathologyLabel::BENIGN: return "BENIGN";
    case PathologyLabel::BENIGN_WITHOUT_CALLBACK: return "BENIGN_WITHOUT_CALLBACK";
  }
  return "?";
}

const char* to_string(Split split) {
  switch (split) {
    case Split::TRAIN: return "TRAIN";
    case Split::VALIDATION: return "VALIDATION";
    case Split::TEST: return "TEST";
  }
  return "?";
}

std::vector<std::string> TaskSpec::class_names() const {
  if (kind == TaskKind::TWO_CLASS) return {"FOLLOW_UP", "NO_FOLLOW_UP"};
  return {"MALIGNANT", "BENIGN", "BENIGN_WITHOUT_CALLBACK"};
}

TaskSpec make_task(TaskKind kind) { return TaskSpec{kind}; }

TaskKind parse_task(const std::string& text) {
  std::string upper = text;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (upper == "TWO_CLASS") return TaskKind::TWO_CLASS;
  if (upper == "THREE_CLASS") return TaskKind::THREE_CLASS;
  throw std::invalid_argument("unknown task '" + text + "'");
}

const char* to_string(TaskKind kind) {
  return kind == TaskKind::TWO_CLASS ? "two_class" : "three_class";
}

int map_label(PathologyLabel pathology, const TaskSpec& task) {
  if (task.kind == TaskKind::TWO_CLASS)
    return pathology == PathologyLabel::BENIGN_WITHOUT_CALLBACK ? 1 : 0;
  switch (pathology) {
    case PathologyLabel::MALIGNANT: return 0;
    case PathologyLabel::BENIGN: return 1;
    case PathologyLabel::BENIGN_WITHOUT_CALLBACK: return 2;
  }
  return -1;
}

ClassWeights compute_class_weights(const std::vector<int>& counts) {
  if (counts.empty()) throw std::invalid_argument("compute_class_weights: no classes");
  long long total = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] <= 0)
      throw std::invalid_argument("compute_class_weights: class " + std::to_string(c) +
                                  " has no samples");
    total += counts[c];
  }
  ClassWeights w;
  w.weights.resize(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c)
    w.weights[c] = static_cast<double>(total) /
                   (static_cast<double>(counts.size()) * counts[c]);
  return w;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<LabeledPatch> load_manifest(const std::filesystem::path& manifest_path,
                                        const std::filesystem::path& data_root) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("manifest: cannot open " + manifest_path.string());

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("manifest: " + manifest_path.string() + ": empty file");
  if (trim(line) != "path,pathology,split")
    throw std::runtime_error("manifest: " + manifest_path.string() +
                             ": first line must be the header 'path,pathology,split'");

  std::vector<LabeledPatch> dataset;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_row(line);
    auto fail = [&](const std::string& what) -> std::runtime_error {
      return std::runtime_error("manifest: " + manifest_path.string() + ": row " +
                                std::to_string(row) + ": " + what);
    };
    if (fields.size() != 3) throw fail("expected 3 fields, got " + std::to_string(fields.size()));

    LabeledPatch item;
    const std::string rel = trim(fields[0]);
    if (rel.empty()) throw fail("empty path");
    try {
      item.pathology = parse_pathology(trim(fields[1]));
      item.split = parse_split(trim(fields[2]));
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
    const std::filesystem::path full = data_root / rel;
    try {
      item.image = read_patch(full);
    } catch (const std::exception& e) {
      throw fail(e.what());
    }
    item.source_id = std::filesystem::path(rel).stem().string();
    dataset.push_back(std::move(item));
  }
  return dataset;
}

std::vector<const LabeledPatch*> select_split(const std::vector<LabeledPatch>& dataset,
                                              Split split) {
  std::vector<const LabeledPatch*> out;
  for (const auto& item : dataset)
    if (item.split == split) out.push_back(&item);
  return out;
}

std::vector<int> class_counts(const std::vector<LabeledPatch>& dataset, Split split,
                              const TaskSpec& task) {
  std::vector<int> counts(task.num_classes(), 0);
  for (const auto& item : dataset)
    if (item.split == split) ++counts[map_label(item.pathology, task)];
  return counts;
}

}  // namespace rhe
