#include "rhe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rhe/pgm_io.hpp"

namespace rhe {

namespace {

void check_pair(std::pair<double, double> r, const char* name) {
  if (!(r.first > 0.0 && r.second >= r.first))
    throw std::invalid_argument(std::string("synthetic: ") + name +
                                " must be an ordered positive pair");
}

// Separable Gaussian blur with reflected borders.
FloatPatch gaussian_blur(const FloatPatch& src, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;

  auto reflect = [](int i, int n) {
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - i - 1;
    return i;
  };

  FloatPatch tmp{src.width, src.height, std::vector<double>(src.values.size())};
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * src.at(reflect(x + i, src.width), y);
      tmp.at(x, y) = acc;
    }
  FloatPatch out{src.width, src.height, std::vector<double>(src.values.size())};
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * tmp.at(x, reflect(y + i, src.height));
      out.at(x, y) = acc;
    }
  return out;
}

struct Blob {
  double cx, cy;
  double sigma_x, sigma_y;
  double angle;  // orientation of the anisotropy axes
  double amplitude;
};

void add_blob(FloatPatch& field, const Blob& b) {
  const double c = std::cos(b.angle), s = std::sin(b.angle);
  const int reach_x = static_cast<int>(std::ceil(4.0 * std::max(b.sigma_x, b.sigma_y)));
  const int x_lo = std::max(0, static_cast<int>(b.cx) - reach_x);
  const int x_hi = std::min(field.width - 1, static_cast<int>(b.cx) + reach_x);
  const int y_lo = std::max(0, static_cast<int>(b.cy) - reach_x);
  const int y_hi = std::min(field.height - 1, static_cast<int>(b.cy) + reach_x);
  for (int y = y_lo; y <= y_hi; ++y)
    for (int x = x_lo; x <= x_hi; ++x) {
      const double dx = x - b.cx, dy = y - b.cy;
      const double u = c * dx + s * dy;
      const double v = -s * dx + c * dy;
      const double e = 0.5 * (u * u / (b.sigma_x * b.sigma_x) + v * v / (b.sigma_y * b.sigma_y));
      if (e > 12.0) continue;
      field.at(x, y) += b.amplitude * std::exp(-e);
    }
}

// Archetype parameters per class: blob count, size, brightness, clustering.
std::vector<Blob> draw_blobs(PathologyLabel label, int width, int height, RandomStream& rng) {
  std::vector<Blob> blobs;
  const double margin = 8.0;
  auto place = [&](double lo_x, double hi_x, double lo_y, double hi_y) {
    return std::pair<double, double>{rng.next_uniform(lo_x, hi_x), rng.next_uniform(lo_y, hi_y)};
  };

  switch (label) {
    case PathologyLabel::BENIGN_WITHOUT_CALLBACK: {
      // 1-2 large smooth round blobs, gentle brightness.
      const int n = 1 + static_cast<int>(rng.next_below(2));
      for (int i = 0; i < n; ++i) {
        auto [cx, cy] = place(margin, width - margin, margin, height - margin);
        const double sigma = rng.next_uniform(3.0, 5.0);
        blobs.push_back({cx, cy, sigma, sigma, 0.0, rng.next_uniform(0.08, 0.18)});
      }
      break;
    }
    case PathologyLabel::BENIGN: {
      // 2-5 medium round blobs, moderate brightness.
      const int n = 2 + static_cast<int>(rng.next_below(4));
      for (int i = 0; i < n; ++i) {
        auto [cx, cy] = place(margin, width - margin, margin, height - margin);
        const double sigma = rng.next_uniform(2.0, 3.0);
        blobs.push_back({cx, cy, sigma, sigma, 0.0, rng.next_uniform(0.35, 0.70)});
      }
      break;
    }
    case PathologyLabel::MALIGNANT: {
      // 6-15 small irregular blobs clustered within a 10 px radius, with
      // strongly varied amplitudes.
      const int n = 6 + static_cast<int>(rng.next_below(10));
      const auto [ccx, ccy] = place(12.0, width - 12.0, 12.0, height - 12.0);
      for (int i = 0; i < n; ++i) {
        const double r = 10.0 * std::sqrt(rng.next_double());
        const double theta = rng.next_uniform(0.0, 2.0 * 3.14159265358979323846);
        const double cx = std::clamp(ccx + r * std::cos(theta), 1.0, width - 2.0);
        const double cy = std::clamp(ccy + r * std::sin(theta), 1.0, height - 2.0);
        blobs.push_back({cx, cy, rng.next_uniform(0.8, 1.5), rng.next_uniform(0.8, 1.5),
                         rng.next_uniform(0.0, 3.14159265358979323846),
                         rng.next_uniform(0.30, 0.75)});
      }
      break;
    }
  }
  return blobs;
}

}  // namespace

void validate(const SyntheticParams& params) {
  if (params.width < 24 || params.height < 24)
    throw std::invalid_argument("synthetic: patch size must be at least 24x24");
  if (params.bit_depth != 8 && params.bit_depth != 16)
    throw std::invalid_argument("synthetic: bit_depth must be 8 or 16");
  for (int c : params.train_counts)
    if (c < 0) throw std::invalid_argument("synthetic: negative train count");
  for (int c : params.validation_counts)
    if (c < 0) throw std::invalid_argument("synthetic: negative validation count");
  for (int c : params.test_counts)
    if (c < 0) throw std::invalid_argument("synthetic: negative test count");
  check_pair(params.train_gamma, "train_gamma");
  check_pair(params.test_gamma, "test_gamma");
  check_pair(params.contrast_scale, "contrast_scale");
}

SyntheticPatch generate_synthetic_patch(PathologyLabel label, const SyntheticParams& params,
                                        std::pair<double, double> gamma_range,
                                        RandomStream& rng) {
  const int w = params.width, h = params.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;

  // Background: blurred white noise re-centered at mid intensities. The
  // blur keeps it smooth at the blob scale, so equalization stretches
  // contrast without shredding the texture into pixel noise.
  FloatPatch noise{w, h, std::vector<double>(n)};
  for (auto& v : noise.values) v = rng.next_double();
  FloatPatch bg = gaussian_blur(noise, 5.0);
  double mean = 0.0, var = 0.0;
  for (double v : bg.values) mean += v;
  mean /= static_cast<double>(n);
  for (double v : bg.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(std::max(var, 1e-12));
  for (auto& v : bg.values) v = 0.42 + 0.05 * ((v - mean) / sd);

  // Faint sharp distractor bumps, drawn identically for every class: a few
  // scattered singles plus one or two tight clusters that imitate the spatial
  // statistics of a calcification cluster at low amplitude. In raw intensities
  // they stay below the marker blobs of the bright classes, but any
  // rank-preserving contrast stretch promotes them into the same visual band
  // as true markers, so every class grows spurious findings there.
  auto add_distractor = [&](double cx, double cy) {
    add_blob(bg, {cx, cy, rng.next_uniform(0.9, 1.8), rng.next_uniform(0.9, 1.8),
                  rng.next_uniform(0.0, 3.14159265358979323846),
                  rng.next_uniform(0.05, 0.15)});
  };
  const int n_scatter = 3 + static_cast<int>(rng.next_below(4));
  for (int i = 0; i < n_scatter; ++i)
    add_distractor(rng.next_uniform(3.0, w - 3.0), rng.next_uniform(3.0, h - 3.0));
  const int n_clusters = 1 + static_cast<int>(rng.next_below(2));
  for (int c = 0; c < n_clusters; ++c) {
    const double ccx = rng.next_uniform(8.0, w - 8.0);
    const double ccy = rng.next_uniform(8.0, h - 8.0);
    const int n_dots = 4 + static_cast<int>(rng.next_below(5));
    for (int i = 0; i < n_dots; ++i) {
      const double r = 8.0 * std::sqrt(rng.next_double());
      const double theta = rng.next_uniform(0.0, 2.0 * 3.14159265358979323846);
      add_distractor(std::clamp(ccx + r * std::cos(theta), 1.0, w - 2.0),
                     std::clamp(ccy + r * std::sin(theta), 1.0, h - 2.0));
    }
  }

  FloatPatch blob_field{w, h, std::vector<double>(n, 0.0)};
  for (const Blob& b : draw_blobs(label, w, h, rng)) add_blob(blob_field, b);

  SyntheticPatch out;
  out.blob_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.blob_mask[i] = blob_field.values[i] > 0.02 ? 1 : 0;

  const double contrast = rng.next_uniform(params.contrast_scale.first,
                                           params.contrast_scale.second);
  const double gamma = rng.next_uniform(gamma_range.first, gamma_range.second);

  out.pre_gamma = FloatPatch{w, h, std::vector<double>(n)};
  FloatPatch final_field{w, h, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::clamp(contrast * (bg.values[i] + blob_field.values[i]), 0.0, 1.0);
    out.pre_gamma.values[i] = v;
    final_field.values[i] = std::pow(v, gamma);
  }
  out.image = to_intensity(final_field, params.bit_depth);
  return out;
}

std::vector<LabeledPatch> generate_synthetic_dataset(const SyntheticParams& params,
                                                     std::uint64_t seed) {
  validate(params);
  RandomStream rng(seed);
  std::vector<LabeledPatch> dataset;

  const PathologyLabel classes[3] = {PathologyLabel::MALIGNANT, PathologyLabel::BENIGN,
                                     PathologyLabel::BENIGN_WITHOUT_CALLBACK};
  struct SplitPlan {
    Split split;
    const std::array<int, 3>* counts;
    std::pair<double, double> gamma;
    const char* tag;
  };
  const SplitPlan plans[3] = {
      {Split::TRAIN, &params.train_counts, params.train_gamma, "train"},
      {Split::VALIDATION, &params.validation_counts, params.train_gamma, "val"},
      {Split::TEST, &params.test_counts, params.test_gamma, "test"},
  };

  for (const auto& plan : plans) {
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < (*plan.counts)[c]; ++i) {
        LabeledPatch item;
        item.image = generate_synthetic_patch(classes[c], params, plan.gamma, rng).image;
        item.pathology = classes[c];
        item.split = plan.split;
        item.source_id = std::string(plan.tag) + "_" + to_string(classes[c]) + "_" +
                         std::to_string(i);
        dataset.push_back(std::move(item));
      }
    }
  }
  return dataset;
}

std::filesystem::path write_synthetic_dataset(const std::vector<LabeledPatch>& dataset,
                                              const std::filesystem::path& out_dir) {
  const auto patches_dir = out_dir / "patches";
  std::filesystem::create_directories(patches_dir);

  const auto manifest_path = out_dir / "manifest.csv";
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest)
    throw std::runtime_error("synthetic: cannot write " + manifest_path.string());
  manifest << "path,pathology,split\n";
  for (const auto& item : dataset) {
    const std::string rel = "patches/" + item.source_id + ".pgm";
    write_pgm(item.image, out_dir / rel);
    manifest << rel << "," << to_string(item.pathology) << "," << to_string(item.split) << "\n";
  }
  if (!manifest) throw std::runtime_error("synthetic: manifest write failed");
  return manifest_path;
}

}  // namespace rhe
