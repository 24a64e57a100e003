#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace commeval::text {

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);
std::string to_lower_ascii(std::string_view s);

// Splits on runs of ASCII whitespace; never yields empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);

// Collapses internal whitespace runs to one space and trims both ends.
std::string collapse_whitespace(std::string_view s);

// Number of Unicode scalar values in a UTF-8 string. Invalid bytes count as one each.
std::size_t utf8_length(std::string_view s);

bool is_ascii_space(char c);

}  // namespace commeval::text
