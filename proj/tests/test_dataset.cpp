// Dataset plumbing: label/split/task parsing, class weighting, PGM round
// trips, manifest loading with row-addressed errors, and the synthetic
// corpus generator.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "rhe/dataset.hpp"
#include "rhe/pgm_io.hpp"
#include "rhe/random_stream.hpp"
#include "rhe/synthetic.hpp"

using namespace rhe;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "rhe_dataset_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

IntensityPatch random_patch(int width, int height, int bit_depth, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<std::uint16_t> pixels(static_cast<std::size_t>(width) * height);
  for (auto& v : pixels) v = static_cast<std::uint16_t>(rng.next_below(1ull << bit_depth));
  return make_intensity_patch(width, height, bit_depth, std::move(pixels));
}

std::string error_of(const std::function<void()>& call) {
  try {
    call();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("pathology, split, and task names parse and round-trip") {
  CHECK(parse_pathology("MALIGNANT") == PathologyLabel::MALIGNANT);
  CHECK(parse_pathology("BENIGN") == PathologyLabel::BENIGN);
  CHECK(parse_pathology("BENIGN_WITHOUT_CALLBACK") == PathologyLabel::BENIGN_WITHOUT_CALLBACK);
  CHECK_THROWS_AS(parse_pathology("benign?"), std::invalid_argument);

  for (auto label : {PathologyLabel::MALIGNANT, PathologyLabel::BENIGN,
                     PathologyLabel::BENIGN_WITHOUT_CALLBACK})
    CHECK(parse_pathology(to_string(label)) == label);

  for (auto split : {Split::TRAIN, Split::VALIDATION, Split::TEST})
    CHECK(parse_split(to_string(split)) == split);
  CHECK_THROWS_AS(parse_split("train?"), std::invalid_argument);

  CHECK(parse_task("two_class") == TaskKind::TWO_CLASS);
  CHECK(parse_task("TWO_CLASS") == TaskKind::TWO_CLASS);
  CHECK(parse_task("three_class") == TaskKind::THREE_CLASS);
  CHECK_THROWS_AS(parse_task("four_class"), std::invalid_argument);
  CHECK(std::string(to_string(TaskKind::TWO_CLASS)) == "two_class");
}

TEST_CASE("two-class task folds follow-up pathologies together") {
  const TaskSpec two = make_task(TaskKind::TWO_CLASS);
  CHECK(two.num_classes() == 2);
  CHECK(map_label(PathologyLabel::MALIGNANT, two) == 0);
  CHECK(map_label(PathologyLabel::BENIGN, two) == 0);
  CHECK(map_label(PathologyLabel::BENIGN_WITHOUT_CALLBACK, two) == 1);
  CHECK(two.class_names() == std::vector<std::string>{"FOLLOW_UP", "NO_FOLLOW_UP"});

  const TaskSpec three = make_task(TaskKind::THREE_CLASS);
  CHECK(three.num_classes() == 3);
  CHECK(map_label(PathologyLabel::MALIGNANT, three) == 0);
  CHECK(map_label(PathologyLabel::BENIGN, three) == 1);
  CHECK(map_label(PathologyLabel::BENIGN_WITHOUT_CALLBACK, three) == 2);
}

TEST_CASE("class weights are inverse-frequency and rebalance exactly") {
  SUBCASE("imbalanced two-class example") {
    const ClassWeights w = compute_class_weights({855, 382});
    CHECK(w.weights[0] == doctest::Approx(0.7233918128654971).epsilon(1e-12));
    CHECK(w.weights[1] == doctest::Approx(1.6191099476439791).epsilon(1e-12));
    // Weighted sample mass equals the unweighted total.
    CHECK(w.weights[0] * 855 + w.weights[1] * 382 == doctest::Approx(1237.0).epsilon(1e-12));
  }
  SUBCASE("balanced classes get unit weight") {
    const ClassWeights w = compute_class_weights({100, 100, 100});
    for (double v : w.weights) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("three-class imbalance") {
    const ClassWeights w = compute_class_weights({10, 20, 30});
    CHECK(w.weights[0] == doctest::Approx(60.0 / 30.0).epsilon(1e-12));
    CHECK(w.weights[1] == doctest::Approx(60.0 / 60.0).epsilon(1e-12));
    CHECK(w.weights[2] == doctest::Approx(60.0 / 90.0).epsilon(1e-12));
  }
  SUBCASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(compute_class_weights({}), std::invalid_argument);
    CHECK_THROWS_AS(compute_class_weights({5, 0}), std::invalid_argument);
    CHECK_THROWS_AS(compute_class_weights({-1, 5}), std::invalid_argument);
  }
}

TEST_CASE("pgm files round-trip bit-exactly at both depths") {
  const fs::path dir = fresh_dir("pgm_roundtrip");
  for (int depth : {8, 16}) {
    const IntensityPatch patch = random_patch(13, 7, depth, 100 + depth);
    const fs::path file = dir / ("rt_" + std::to_string(depth) + ".pgm");
    write_pgm(patch, file);
    const IntensityPatch back = read_pgm(file);
    CHECK(back.width == patch.width);
    CHECK(back.height == patch.height);
    CHECK(back.bit_depth == depth);
    CHECK(back.pixels == patch.pixels);
  }
}

TEST_CASE("16-bit pgm samples are stored big-endian") {
  const fs::path dir = fresh_dir("pgm_endian");
  const fs::path file = dir / "one.pgm";
  write_pgm(make_intensity_patch(1, 1, 16, {0x0102}), file);

  std::ifstream in(file, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() >= 2);
  CHECK(static_cast<unsigned char>(bytes[bytes.size() - 2]) == 0x01);
  CHECK(static_cast<unsigned char>(bytes[bytes.size() - 1]) == 0x02);
  CHECK(bytes.rfind("P5\n1 1\n65535\n", 0) == 0);  // canonical header
}

TEST_CASE("pgm reader accepts comments and flexible whitespace") {
  const fs::path dir = fresh_dir("pgm_comments");
  const fs::path file = dir / "commented.pgm";
  {
    std::ofstream out(file, std::ios::binary);
    out << "P5 # magic\n# a full comment line\n 3 # width\n2\n255\n";
    for (int i = 0; i < 6; ++i) out.put(static_cast<char>(10 * i));
  }
  const IntensityPatch patch = read_pgm(file);
  CHECK(patch.width == 3);
  CHECK(patch.height == 2);
  CHECK(patch.bit_depth == 8);
  CHECK(patch.pixels == std::vector<std::uint16_t>{0, 10, 20, 30, 40, 50});
}

TEST_CASE("pgm reader rejects malformed files") {
  const fs::path dir = fresh_dir("pgm_bad");

  const fs::path ascii = dir / "ascii.pgm";
  std::ofstream(ascii, std::ios::binary) << "P2\n2 2\n255\n0 1 2 3\n";
  CHECK(error_of([&] { read_pgm(ascii); }).find("magic") != std::string::npos);

  const fs::path truncated = dir / "truncated.pgm";
  std::ofstream(truncated, std::ios::binary) << "P5\n4 4\n255\nab";
  CHECK(error_of([&] { read_pgm(truncated); }).find("truncated") != std::string::npos);

  const fs::path header = dir / "header.pgm";
  std::ofstream(header, std::ios::binary) << "P5\n4\n";
  CHECK(error_of([&] { read_pgm(header); }).find("missing") != std::string::npos);

  const fs::path maxval = dir / "maxval.pgm";
  std::ofstream(maxval, std::ios::binary) << "P5\n1 1\n70000\nxx";
  CHECK(error_of([&] { read_pgm(maxval); }).find("maxval") != std::string::npos);

  CHECK_THROWS_AS(read_pgm(dir / "absent.pgm"), std::runtime_error);
}

TEST_CASE("manifest loads rows, resolves paths, and derives source ids") {
  const fs::path dir = fresh_dir("manifest_ok");
  fs::create_directories(dir / "sub");
  write_pgm(random_patch(8, 8, 8, 1), dir / "a.pgm");
  write_pgm(random_patch(8, 8, 16, 2), dir / "sub" / "b.pgm");
  write_pgm(random_patch(8, 8, 8, 3), dir / "c.pgm");
  {
    std::ofstream out(dir / "manifest.csv");
    out << "path,pathology,split\n"
        << "a.pgm,MALIGNANT,TRAIN\n"
        << "\n"  // blank rows are skipped
        << " sub/b.pgm , BENIGN , VALIDATION \n"
        << "c.pgm,BENIGN_WITHOUT_CALLBACK,TEST\n";
  }

  const auto dataset = load_manifest(dir / "manifest.csv", dir);
  REQUIRE(dataset.size() == 3);
  CHECK(dataset[0].pathology == PathologyLabel::MALIGNANT);
  CHECK(dataset[0].split == Split::TRAIN);
  CHECK(dataset[0].source_id == "a");
  CHECK(dataset[1].pathology == PathologyLabel::BENIGN);
  CHECK(dataset[1].split == Split::VALIDATION);
  CHECK(dataset[1].source_id == "b");
  CHECK(dataset[1].image.bit_depth == 16);
  CHECK(dataset[2].split == Split::TEST);

  const auto train = select_split(dataset, Split::TRAIN);
  REQUIRE(train.size() == 1);
  CHECK(train[0] == &dataset[0]);

  const TaskSpec two = make_task(TaskKind::TWO_CLASS);
  CHECK(class_counts(dataset, Split::TRAIN, two) == std::vector<int>{1, 0});
  CHECK(class_counts(dataset, Split::TEST, two) == std::vector<int>{0, 1});
  const TaskSpec three = make_task(TaskKind::THREE_CLASS);
  CHECK(class_counts(dataset, Split::VALIDATION, three) == std::vector<int>{0, 1, 0});
}

TEST_CASE("manifest errors name the offending row") {
  const fs::path dir = fresh_dir("manifest_bad");
  write_pgm(random_patch(4, 4, 8, 9), dir / "ok.pgm");

  auto write_manifest = [&](const std::string& body) {
    std::ofstream out(dir / "m.csv");
    out << body;
  };
  auto load_error = [&] { return error_of([&] { load_manifest(dir / "m.csv", dir); }); };

  write_manifest("");
  CHECK(load_error().find("empty file") != std::string::npos);

  write_manifest("path,label,split\n");
  CHECK(load_error().find("header") != std::string::npos);

  write_manifest("path,pathology,split\nok.pgm,MALIGNANT,TRAIN\nok.pgm,MALIGNANT\n");
  CHECK(load_error().find("row 3") != std::string::npos);

  write_manifest("path,pathology,split\nok.pgm,POSITIVE,TRAIN\n");
  const std::string pathology_error = load_error();
  CHECK(pathology_error.find("row 2") != std::string::npos);
  CHECK(pathology_error.find("POSITIVE") != std::string::npos);

  write_manifest("path,pathology,split\nok.pgm,MALIGNANT,HOLDOUT\n");
  CHECK(load_error().find("HOLDOUT") != std::string::npos);

  write_manifest("path,pathology,split\nmissing.pgm,MALIGNANT,TRAIN\n");
  const std::string missing_error = load_error();
  CHECK(missing_error.find("row 2") != std::string::npos);
  CHECK(missing_error.find("missing.pgm") != std::string::npos);

  write_manifest("path,pathology,split\n,MALIGNANT,TRAIN\n");
  CHECK(load_error().find("empty path") != std::string::npos);

  CHECK_THROWS_AS(load_manifest(dir / "nope.csv", dir), std::runtime_error);
}

TEST_CASE("synthetic dataset is deterministic in params and seed") {
  SyntheticParams params;
  params.train_counts = {4, 4, 4};
  params.validation_counts = {1, 1, 1};
  params.test_counts = {2, 2, 2};

  const auto a = generate_synthetic_dataset(params, 42);
  const auto b = generate_synthetic_dataset(params, 42);
  const auto c = generate_synthetic_dataset(params, 43);

  REQUIRE(a.size() == 21);
  REQUIRE(b.size() == a.size());
  bool identical = true, all_match_c = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    identical = identical && a[i].image.pixels == b[i].image.pixels &&
                a[i].source_id == b[i].source_id;
    all_match_c = all_match_c && a[i].image.pixels == c[i].image.pixels;
  }
  CHECK(identical);
  CHECK_FALSE(all_match_c);  // a different seed must change the corpus
}

TEST_CASE("synthetic dataset respects counts, order, and naming") {
  SyntheticParams params;
  params.train_counts = {3, 2, 1};
  params.validation_counts = {0, 0, 0};
  params.test_counts = {1, 1, 2};

  const auto dataset = generate_synthetic_dataset(params, 7);
  REQUIRE(dataset.size() == 10);

  // Split-major, class-minor order: malignant, benign, benign-without-callback.
  CHECK(dataset[0].split == Split::TRAIN);
  CHECK(dataset[0].pathology == PathologyLabel::MALIGNANT);
  CHECK(dataset[0].source_id == "train_MALIGNANT_0");
  CHECK(dataset[2].source_id == "train_MALIGNANT_2");
  CHECK(dataset[3].pathology == PathologyLabel::BENIGN);
  CHECK(dataset[5].pathology == PathologyLabel::BENIGN_WITHOUT_CALLBACK);
  CHECK(dataset[6].split == Split::TEST);
  CHECK(dataset[9].source_id == "test_BENIGN_WITHOUT_CALLBACK_1");

  const TaskSpec three = make_task(TaskKind::THREE_CLASS);
  CHECK(class_counts(dataset, Split::TRAIN, three) == std::vector<int>{3, 2, 1});
  CHECK(class_counts(dataset, Split::TEST, three) == std::vector<int>{1, 1, 2});

  for (const auto& item : dataset) {
    CHECK(item.image.width == params.width);
    CHECK(item.image.height == params.height);
    CHECK(item.image.bit_depth == 16);
  }
}

TEST_CASE("synthetic blobs brighten the masked region against the background") {
  SyntheticParams params;
  RandomStream rng(11);
  for (auto label : {PathologyLabel::MALIGNANT, PathologyLabel::BENIGN,
                     PathologyLabel::BENIGN_WITHOUT_CALLBACK}) {
    double diff_sum = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
      const SyntheticPatch patch =
          generate_synthetic_patch(label, params, params.train_gamma, rng);
      REQUIRE(patch.blob_mask.size() == static_cast<std::size_t>(params.width) * params.height);

      double in_sum = 0.0, out_sum = 0.0;
      int in_n = 0, out_n = 0;
      for (std::size_t i = 0; i < patch.blob_mask.size(); ++i) {
        const double v = patch.pre_gamma.values[i];
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        if (patch.blob_mask[i]) {
          in_sum += v;
          ++in_n;
        } else {
          out_sum += v;
          ++out_n;
        }
      }
      REQUIRE(in_n > 0);
      REQUIRE(out_n > 0);
      diff_sum += in_sum / in_n - out_sum / out_n;
    }
    const double mean_diff = diff_sum / 30.0;
    // Markers of the follow-up classes are much brighter than background;
    // the no-callback class is dimmer but still positive on average.
    if (label == PathologyLabel::BENIGN_WITHOUT_CALLBACK)
      CHECK(mean_diff > 0.004);
    else
      CHECK(mean_diff > 0.04);
  }
}

TEST_CASE("synthetic parameter validation") {
  SyntheticParams params;
  CHECK_NOTHROW(validate(params));

  auto broken = [](auto mutate) {
    SyntheticParams p;
    mutate(p);
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
  };
  broken([](SyntheticParams& p) { p.width = 16; });
  broken([](SyntheticParams& p) { p.bit_depth = 12; });
  broken([](SyntheticParams& p) { p.train_counts = {-1, 5, 5}; });
  broken([](SyntheticParams& p) { p.train_gamma = {1.4, 0.7}; });
  broken([](SyntheticParams& p) { p.contrast_scale = {0.0, 1.0}; });
}

TEST_CASE("written synthetic corpus loads back through the manifest") {
  SyntheticParams params;
  params.train_counts = {2, 1, 1};
  params.validation_counts = {0, 0, 0};
  params.test_counts = {1, 1, 1};
  const auto dataset = generate_synthetic_dataset(params, 99);

  const fs::path dir = fresh_dir("synthetic_written");
  const fs::path manifest = write_synthetic_dataset(dataset, dir);
  CHECK(manifest == dir / "manifest.csv");

  const auto loaded = load_manifest(manifest, dir);
  REQUIRE(loaded.size() == dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    CHECK(loaded[i].image.pixels == dataset[i].image.pixels);
    CHECK(loaded[i].image.bit_depth == dataset[i].image.bit_depth);
    CHECK(loaded[i].pathology == dataset[i].pathology);
    CHECK(loaded[i].split == dataset[i].split);
    CHECK(loaded[i].source_id == dataset[i].source_id);
  }
}
