#include "commeval/tokenize.hpp"

#include "commeval/error.hpp"
#include "commeval/text.hpp"

namespace commeval {
namespace {

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 0x21 && u <= 0x2F) || (u >= 0x3A && u <= 0x40) || (u >= 0x5B && u <= 0x60) ||
         (u >= 0x7B && u <= 0x7E);
}

std::vector<std::string> split_punctuation(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    const bool punct = is_ascii_punct(word[i]);
    const std::size_t start = i;
    while (i < word.size() && is_ascii_punct(word[i]) == punct) ++i;
    out.emplace_back(word.substr(start, i - start));
  }
  return out;
}

}  // namespace

TokenSeq tokenize(std::string_view input, std::string_view tokenizer_id) {
  TokenSeq seq;
  seq.tokenizer_id = std::string(tokenizer_id);
  if (tokenizer_id == kWhitespaceTokenizer) {
    seq.tokens = text::split_whitespace(input);
  } else if (tokenizer_id == kDefaultTokenizer) {
    for (const auto& word : text::split_whitespace(text::to_lower_ascii(input))) {
      for (auto& piece : split_punctuation(word)) seq.tokens.push_back(std::move(piece));
    }
  } else {
    throw InvalidArgument("unknown tokenizer '" + std::string(tokenizer_id) + "'");
  }
  return seq;
}

TokenSeq make_tokens(std::vector<std::string> tokens, std::string tokenizer_id) {
  std::erase(tokens, std::string());
  return {std::move(tokens), std::move(tokenizer_id)};
}

}  // namespace commeval
