#pragma once

#include <filesystem>

#include "rhe/model.hpp"

namespace rhe {

// Binary checkpoint holding the architecture and trained parameters (not the
// optimizer slots). Layout, all integers little-endian:
//   bytes 0-3   magic "RHEB"
//   u32         format version (1)
//   u32         input_size
//   u32         number of conv blocks
//   u32 x B     output channels per block
//   u32         num_classes
//   u64         init_seed
//   f64 x N     parameter tensors, flattened row-major, in parameter order
//               (conv weight 0, conv bias 0, ..., head weight, head bias)
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);

// Throws std::runtime_error on bad magic, version, truncation, or trailing
// bytes.
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace rhe
