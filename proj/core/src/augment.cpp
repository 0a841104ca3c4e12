#include "rhe/augment.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rhe {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument(std::string(name) + " must be in [0,1], got " +
                                std::to_string(p));
}

void check_range(std::pair<double, double> r, const char* name) {
  if (!(r.first > 0.0 && r.second >= r.first))
    throw std::invalid_argument(std::string(name) + " must be an ordered positive pair");
}

void note(bool fired, bool* applied) {
  if (applied) *applied = fired;
}

}  // namespace

void validate(const AugmentationConfig& cfg) {
  check_probability(cfg.p_hflip, "p_hflip");
  check_probability(cfg.p_vflip, "p_vflip");
  check_probability(cfg.p_rotate, "p_rotate");
  check_probability(cfg.p_erase, "p_erase");
  check_probability(cfg.p_rhe, "p_rhe");
  if (cfg.rotate_max_degrees < 0.0)
    throw std::invalid_argument("rotate_max_degrees must be >= 0");
  check_range(cfg.erase_area_range, "erase_area_range");
  check_range(cfg.erase_aspect_range, "erase_aspect_range");
  if (cfg.target_size < 1) throw std::invalid_argument("target_size must be >= 1");
}

IntensityPatch random_histogram_equalization(const IntensityPatch& patch, double p_rhe,
                                             RandomStream& rng, bool* applied) {
  check_probability(p_rhe, "p_rhe");
  const bool fire = rng.bernoulli(p_rhe);
  note(fire, applied);
  return fire ? equalize_histogram(patch) : patch;
}

IntensityPatch random_horizontal_flip(const IntensityPatch& patch, double p, RandomStream& rng,
                                      bool* applied) {
  check_probability(p, "p");
  const bool fire = rng.bernoulli(p);
  note(fire, applied);
  return fire ? flip_horizontal(patch) : patch;
}

IntensityPatch random_vertical_flip(const IntensityPatch& patch, double p, RandomStream& rng,
                                    bool* applied) {
  check_probability(p, "p");
  const bool fire = rng.bernoulli(p);
  note(fire, applied);
  return fire ? flip_vertical(patch) : patch;
}

FloatPatch random_horizontal_flip(const FloatPatch& patch, double p, RandomStream& rng,
                                  bool* applied) {
  check_probability(p, "p");
  const bool fire = rng.bernoulli(p);
  note(fire, applied);
  return fire ? flip_horizontal(patch) : patch;
}

FloatPatch random_vertical_flip(const FloatPatch& patch, double p, RandomStream& rng,
                                bool* applied) {
  check_probability(p, "p");
  const bool fire = rng.bernoulli(p);
  note(fire, applied);
  return fire ? flip_vertical(patch) : patch;
}

FloatPatch random_rotation(const FloatPatch& patch, double p, double max_degrees,
                           RandomStream& rng, bool* applied) {
  check_probability(p, "p");
  if (max_degrees < 0.0) throw std::invalid_argument("max_degrees must be >= 0");
  const bool fire = rng.bernoulli(p);
  note(fire, applied);
  if (!fire) return patch;
  const double angle = rng.next_uniform(-max_degrees, max_degrees);
  return rotate_bilinear(patch, angle);
}

FloatPatch random_erasing(const FloatPatch& patch, double p,
                          std::pair<double, double> area_range,
                          std::pair<double, double> aspect_range, RandomStream& rng,
                          bool* applied) {
  check_probability(p, "p");
  check_range(area_range, "area_range");
  check_range(aspect_range, "aspect_range");
  if (patch.width * patch.height <= 1)
    throw std::invalid_argument("random_erasing: patch must be larger than 1x1");

  const bool fire = rng.bernoulli(p);
  note(false, applied);
  if (!fire) return patch;

  const double total = static_cast<double>(patch.width) * patch.height;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double area_frac = rng.next_uniform(area_range.first, area_range.second);
    const double aspect = std::exp(
        rng.next_uniform(std::log(aspect_range.first), std::log(aspect_range.second)));
    const double target = area_frac * total;
    const int eh = static_cast<int>(std::llround(std::sqrt(target * aspect)));
    const int ew = static_cast<int>(std::llround(std::sqrt(target / aspect)));
    if (eh < 1 || ew < 1 || eh > patch.height || ew > patch.width) continue;
    // The rounded rectangle must still realize a fraction inside area_range.
    const double realized = static_cast<double>(eh) * ew / total;
    if (realized < area_range.first || realized > area_range.second) continue;

    const int top = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(patch.height - eh + 1)));
    const int left = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(patch.width - ew + 1)));
    FloatPatch out = patch;
    for (int y = top; y < top + eh; ++y)
      for (int x = left; x < left + ew; ++x) out.at(x, y) = 0.0;
    note(true, applied);
    return out;
  }
  return patch;  // 10 unfittable samples: documented skip
}

FloatPatch apply_pipeline(const IntensityPatch& patch, const AugmentationConfig& cfg,
                          RandomStream& rng, bool training, AugmentStats* stats) {
  validate(cfg);

  if (!training) {
    // Deterministic evaluation path: HE only under the always-equalize rule.
    const IntensityPatch& base = patch;
    if (cfg.p_rhe == 1.0) {
      FloatPatch f = normalize(equalize_histogram(base));
      return resize_bilinear(f, cfg.target_size, cfg.target_size);
    }
    return resize_bilinear(normalize(base), cfg.target_size, cfg.target_size);
  }

  bool fired = false;
  IntensityPatch raw = random_histogram_equalization(patch, cfg.p_rhe, rng, &fired);
  if (stats && fired) ++stats->rhe_applied;
  raw = random_horizontal_flip(raw, cfg.p_hflip, rng, &fired);
  if (stats && fired) ++stats->hflip_applied;
  raw = random_vertical_flip(raw, cfg.p_vflip, rng, &fired);
  if (stats && fired) ++stats->vflip_applied;

  FloatPatch img = normalize(raw);
  img = random_rotation(img, cfg.p_rotate, cfg.rotate_max_degrees, rng, &fired);
  if (stats && fired) ++stats->rotate_applied;
  img = resize_bilinear(img, cfg.target_size, cfg.target_size);
  img = random_erasing(img, cfg.p_erase, cfg.erase_area_range, cfg.erase_aspect_range, rng,
                       &fired);
  if (stats && fired) ++stats->erase_applied;
  return img;
}

}  // namespace rhe
