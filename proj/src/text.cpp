#include "confkit/text.hpp"

#include <cctype>

namespace confkit::text {

std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    // U+2018/U+2019 -> ', U+201C/U+201D -> "
    if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80) {
      unsigned char c2 = static_cast<unsigned char>(s[i + 2]);
      if (c2 == 0x98 || c2 == 0x99) {
        out.push_back('\'');
        i += 2;
        continue;
      }
      if (c2 == 0x9C || c2 == 0x9D) {
        out.push_back('"');
        i += 2;
        continue;
      }
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = false;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      in_ws = true;
      continue;
    }
    if (in_ws && !out.empty()) out.push_back(' ');
    in_ws = false;
    out.push_back(ch);
  }
  return out;
}

std::string normalize_answer(std::string_view s) {
  std::string out = collapse_whitespace(trim(fold(s)));
  while (!out.empty()) {
    char c = out.back();
    if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?') {
      out.pop_back();
    } else {
      break;
    }
  }
  return trim(out);
}

bool contains_fold(std::string_view haystack, std::string_view needle) {
  return fold(haystack).find(fold(needle)) != std::string::npos;
}

}  // namespace confkit::text
