#include "commeval/text.hpp"

#include "commeval/error.hpp"

namespace commeval {

IdMismatchError::IdMismatchError(std::vector<std::string> only_left,
                                 std::vector<std::string> only_right)
    : Error([&] {
        std::string msg = "id sets differ";
        auto list = [&](const char* label, const std::vector<std::string>& ids) {
          if (ids.empty()) return;
          msg += "; ";
          msg += label;
          msg += ":";
          std::size_t shown = 0;
          for (const auto& id : ids) {
            if (shown++ == 10) {
              msg += " ... (" + std::to_string(ids.size()) + " total)";
              break;
            }
            msg += " " + id;
          }
        };
        list("only in predictions", only_left);
        list("only in references", only_right);
        return msg;
      }()),
      only_left_(std::move(only_left)),
      only_right_(std::move(only_right)) {}

BackendError::BackendError(std::string item_id, const std::string& what)
    : Error("backend failure on '" + item_id + "': " + what), item_id_(std::move(item_id)) {}

namespace text {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim_right(std::string_view s) {
  while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
  return trim_right(s);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_ascii_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_ascii_space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  for (const auto& piece : split_whitespace(s)) {
    if (!out.empty()) out += ' ';
    out += piece;
  }
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t width = 1;
    if (c >= 0xF0 && c < 0xF8) width = 4;
    else if (c >= 0xE0) width = c < 0xF0 ? 3 : 1;
    else if (c >= 0xC0) width = 2;
    if (i + width > s.size()) width = 1;
    for (std::size_t k = 1; k < width; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        width = 1;
        break;
      }
    }
    i += width;
    ++n;
  }
  return n;
}

}  // namespace text
}  // namespace commeval
