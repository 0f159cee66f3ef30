#pragma once

#include <filesystem>
#include <string>

#include "gatebench/digest.hpp"

namespace gatebench {

std::string read_text_file(const std::filesystem::path& path);

// Creates parent directories. Output bytes are exactly `content`.
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Pretty JSON with sorted keys and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& doc);
Json read_json_file(const std::filesystem::path& path);

}  // namespace gatebench
