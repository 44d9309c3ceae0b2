#pragma once

#include <string>
#include <string_view>

namespace confkit::text {

/// ASCII lowercase; UTF-8 curly quotes are mapped to their ASCII forms so
/// pattern tables written with straight quotes match model output.
std::string fold(std::string_view s);

std::string trim(std::string_view s);

/// Collapse runs of whitespace to single spaces.
std::string collapse_whitespace(std::string_view s);

/// Canonical answer form: fold, trim, collapse whitespace, strip terminal
/// punctuation. Used by the normalized-match oracle and rule-based grading.
std::string normalize_answer(std::string_view s);

/// Case-insensitive substring test (needle folded against folded haystack).
bool contains_fold(std::string_view haystack, std::string_view needle);

}  // namespace confkit::text
