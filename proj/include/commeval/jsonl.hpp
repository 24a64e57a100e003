#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace commeval::jsonl {

using nlohmann::json;

// Invokes `fn(line_number, line)` for every line of the file (1-based,
// trailing '\r' removed). Throws IoError if the file cannot be opened.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

// Parses every non-blank line as JSON; throws Error naming the line on failure.
std::vector<json> read_all(const std::filesystem::path& path);

std::string dump_line(const json& record);

// Writes to a temporary file beside `path` and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace commeval::jsonl
