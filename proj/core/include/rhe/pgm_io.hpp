#pragma once

#include <filesystem>

#include "rhe/image.hpp"

namespace rhe {

// Binary PGM (P5). Writes maxval 255 for 8-bit and 65535 for 16-bit patches;
// 16-bit samples are big-endian per the PGM standard. The writer emits a
// canonical header so identical patches produce identical bytes.
void write_pgm(const IntensityPatch& patch, const std::filesystem::path& path);

IntensityPatch read_pgm(const std::filesystem::path& path);

// Dispatches on extension: ".png" goes to the PNG reader (when built with
// libpng), everything else is treated as PGM.
IntensityPatch read_patch(const std::filesystem::path& path);

bool png_supported();

// Grayscale PNG; throws if the build has no libpng or the file is not an
// 8/16-bit grayscale PNG.
IntensityPatch read_png_gray(const std::filesystem::path& path);
void write_png_gray(const IntensityPatch& patch, const std::filesystem::path& path);

}  // namespace rhe
