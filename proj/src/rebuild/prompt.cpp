#include "commeval/rebuild.hpp"

namespace commeval::rebuild {
namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  if (count_occurrences(text_, kCodePlaceholder) != 1) {
    throw InvalidArgument("prompt template must contain [Code Snippet Content] exactly once");
  }
  if (count_occurrences(text_, kLanguagePlaceholder) == 0) {
    throw InvalidArgument("prompt template must contain [PL]");
  }
}

std::string PromptTemplate::render(const Language& language, std::string_view code) const {
  if (code.empty()) throw InvalidArgument("render_prompt: code is empty");
  const auto display = language.display_name();
  std::string out;
  out.reserve(text_.size() + code.size() + 2 * display.size());
  std::string_view rest(text_);
  while (!rest.empty()) {
    const auto pl = rest.find(kLanguagePlaceholder);
    const auto cs = rest.find(kCodePlaceholder);
    const auto next = std::min(pl, cs);
    if (next == std::string_view::npos) {
      out.append(rest);
      break;
    }
    out.append(rest.substr(0, next));
    if (next == pl) {
      out.append(display);
      rest.remove_prefix(next + kLanguagePlaceholder.size());
    } else {
      out.append(code);
      rest.remove_prefix(next + kCodePlaceholder.size());
    }
  }
  return out;
}

std::string render_prompt(const Language& language, std::string_view code) {
  static const PromptTemplate kDefault;
  return kDefault.render(language, code);
}

void GenerationParams::validate() const {
  if (model.empty()) throw InvalidArgument("generation params: model is empty");
  if (max_tokens < 1) throw InvalidArgument("generation params: max_tokens must be >= 1");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidArgument("generation params: top_p must be in (0, 1]");
  if (!(temperature >= 0.0)) throw InvalidArgument("generation params: temperature must be >= 0");
}

}  // namespace commeval::rebuild
