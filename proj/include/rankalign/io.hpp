#pragma once

#include <filesystem>
#include <string>

namespace rankalign {

// Whole-file helpers that throw IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace rankalign
