#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace caasr {

// Writes content to path via a sibling temp file followed by an atomic rename,
// so readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Splits on '\n'; a trailing newline does not produce an empty final line.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace caasr
