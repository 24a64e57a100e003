#include <cctype>

#include "commeval/rebuild.hpp"
#include "commeval/text.hpp"

namespace commeval::rebuild {
namespace {

std::string_view strip_markers(std::string_view line) {
  line = text::trim(line);
  for (bool changed = true; changed && !line.empty();) {
    changed = false;
    for (std::string_view marker : {"/**", "/*", "//", "#", "*"}) {
      if (line.starts_with(marker) && !line.starts_with("*/")) {
        line.remove_prefix(marker.size());
        line = text::trim(line);
        changed = true;
        break;
      }
    }
    if (line.ends_with("*/")) {
      line.remove_suffix(2);
      line = text::trim(line);
      changed = true;
    }
  }
  return line;
}

std::string strip_quotes(std::string s) {
  while (s.size() >= 2) {
    const char first = s.front();
    if ((first == '"' || first == '\'' || first == '`') && s.back() == first) {
      s = std::string(text::trim(std::string_view(s).substr(1, s.size() - 2)));
    } else {
      break;
    }
  }
  return s;
}

bool has_word_character(std::string_view s) {
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) return true;
  }
  return false;
}

}  // namespace

std::string first_sentence(std::string_view input) {
  for (std::size_t i = 0; i < input.size(); ++i) {
    const char c = input[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == input.size() || text::is_ascii_space(input[i + 1]))) {
      return std::string(text::trim(input.substr(0, i + 1)));
    }
  }
  return std::string(text::trim(input));
}

std::string postprocess_comment(std::string_view raw, const PostprocessOptions& options) {
  std::string joined;
  std::string_view rest = raw;
  while (true) {
    const auto nl = rest.find('\n');
    const auto line = strip_markers(rest.substr(0, nl));
    if (!line.empty()) {
      if (!joined.empty()) joined += ' ';
      joined.append(line);
    }
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  auto out = strip_quotes(text::collapse_whitespace(joined));
  if (options.first_sentence_only) out = first_sentence(out);
  if (out.empty() && has_word_character(raw)) out = text::collapse_whitespace(raw);
  return out;
}

}  // namespace commeval::rebuild
