#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace poresim {

// Writes to "<path>.tmp" and renames over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

std::string read_text(const std::filesystem::path& path);

}  // namespace poresim
