#pragma once

#include <string>

namespace tor {

/// Read a whole file. Throws IoError when the file cannot be opened.
std::string read_text_file(const std::string& path);

/// Write a whole file, creating parent directories. Throws IoError.
void write_text_file(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);

/// Create a directory and its parents if missing.
void ensure_dir(const std::string& path);

}  // namespace tor
