#pragma once

#include <filesystem>

#include "poresim/imagecore.hpp"

namespace poresim {

// 8-bit gray or RGB PNG. Alpha is dropped, 16-bit is reduced, palettes are
// expanded. Values are mapped to [0,1] by v/255.
Raster read_png(const std::filesystem::path& path);

// Writes round(clamp(v,0,1) * 255). The file is written to a temporary
// sibling and renamed into place.
void write_png(const std::filesystem::path& path, const Raster& img);

}  // namespace poresim
