#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace changegpt {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
bool iequals(std::string_view a, std::string_view b);

/// Lowercases and replaces every non-alphanumeric run with a single space,
/// padded with one leading and trailing space for whole-word searches.
std::string normalize_words(std::string_view s);

}  // namespace changegpt
