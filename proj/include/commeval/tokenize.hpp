#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace commeval {

struct TokenSeq {
  std::vector<std::string> tokens;
  std::string tokenizer_id;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

inline constexpr std::string_view kDefaultTokenizer = "default";
inline constexpr std::string_view kWhitespaceTokenizer = "whitespace";

// "default": ASCII-lowercase, detach runs of ASCII punctuation as their own
// tokens, split on whitespace. "whitespace": split on whitespace only.
// Throws InvalidArgument for any other id.
TokenSeq tokenize(std::string_view text, std::string_view tokenizer_id = kDefaultTokenizer);

// Test helper: wraps already-split tokens.
TokenSeq make_tokens(std::vector<std::string> tokens, std::string tokenizer_id = "pretokenized");

}  // namespace commeval
