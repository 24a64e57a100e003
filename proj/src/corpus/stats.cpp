#include <algorithm>
#include <unordered_set>

#include "commeval/corpus.hpp"
#include "commeval/text.hpp"

namespace commeval {
namespace {

class LengthAccumulator {
 public:
  void add(const std::vector<std::string>& tokens) {
    lengths_.push_back(tokens.size());
    total_ += tokens.size();
    vocabulary_.insert(tokens.begin(), tokens.end());
  }

  LengthStats finish() {
    LengthStats s;
    s.pair_count = lengths_.size();
    s.total_tokens = total_;
    s.unique_words = vocabulary_.size();
    if (lengths_.empty()) return s;
    s.mean_comment_len = static_cast<double>(total_) / static_cast<double>(lengths_.size());
    std::sort(lengths_.begin(), lengths_.end());
    const std::size_t mid = lengths_.size() / 2;
    s.median_comment_len = lengths_.size() % 2 == 1
                               ? static_cast<double>(lengths_[mid])
                               : (static_cast<double>(lengths_[mid - 1]) + lengths_[mid]) / 2.0;
    return s;
  }

 private:
  std::vector<std::size_t> lengths_;
  std::size_t total_ = 0;
  std::unordered_set<std::string> vocabulary_;
};

}  // namespace

CorpusStats corpus_stats(const EvalCorpus& corpus) {
  LengthAccumulator overall;
  std::map<std::string, LengthAccumulator> by_language;
  for (const auto& pair : corpus) {
    const auto tokens = text::split_whitespace(pair.comment);
    overall.add(tokens);
    by_language[pair.language.tag()].add(tokens);
  }
  CorpusStats stats;
  stats.overall = overall.finish();
  for (auto& [tag, acc] : by_language) stats.per_language.emplace(tag, acc.finish());
  return stats;
}

nlohmann::json to_json(const CorpusStats& stats) {
  auto one = [](const LengthStats& s) {
    return nlohmann::json{{"pair_count", s.pair_count},
                          {"total_tokens", s.total_tokens},
                          {"mean_comment_len", s.mean_comment_len},
                          {"median_comment_len", s.median_comment_len},
                          {"unique_words", s.unique_words}};
  };
  auto out = one(stats.overall);
  out["tokenizer_id"] = stats.tokenizer_id;
  auto& langs = out["per_language"] = nlohmann::json::object();
  for (const auto& [tag, s] : stats.per_language) langs[tag] = one(s);
  return out;
}

}  // namespace commeval
