#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace confkit::jsonl {

using json = nlohmann::json;

/// Parse a line-delimited JSON file. Blank lines are skipped; a malformed
/// line raises an error naming the file and 1-based line number.
std::vector<json> read(const std::filesystem::path& path);

/// Visit each record with its 1-based line number.
void for_each(const std::filesystem::path& path,
              const std::function<void(const json&, size_t)>& fn);

/// Write one object per line. Keys are emitted in sorted order, so output is
/// byte-stable for identical inputs.
void write(const std::filesystem::path& path, const std::vector<json>& records);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace confkit::jsonl
