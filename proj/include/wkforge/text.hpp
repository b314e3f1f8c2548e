#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wkforge::text {

std::string_view trim(std::string_view s);

// Collapses every run of ASCII whitespace into one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

std::string ascii_lower(std::string_view s);

bool is_valid_utf8(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

// Lowercased alphanumeric word tokens; any other ASCII byte separates tokens.
// Non-ASCII bytes are kept inside tokens.
std::vector<std::string> word_tokens(std::string_view s);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

} // namespace wkforge::text
