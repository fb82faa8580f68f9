#pragma once

#include <string>
#include <vector>

namespace idrr {

// Writes via a temp file in the same directory, then renames into place.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

std::vector<std::string> read_lines(const std::string& path);

}  // namespace idrr
