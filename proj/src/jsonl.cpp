#include "confkit/jsonl.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace confkit::jsonl {

void for_each(const std::filesystem::path& path,
              const std::function<void(const json&, size_t)>& fn) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded()) {
      throw std::runtime_error(path.string() + " line " + std::to_string(lineno) +
                               ": malformed JSON");
    }
    fn(rec, lineno);
  }
}

std::vector<json> read(const std::filesystem::path& path) {
  std::vector<json> out;
  for_each(path, [&](const json& rec, size_t) { out.push_back(rec); });
  return out;
}

void write(const std::filesystem::path& path, const std::vector<json>& records) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  for (const json& rec : records) {
    out << rec.dump() << '\n';
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << content;
}

}  // namespace confkit::jsonl
