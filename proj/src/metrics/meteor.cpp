#include <cmath>
#include <limits>
#include <unordered_map>

#include "commeval/ngram.hpp"

namespace commeval {
namespace {

constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();

class ChunkMinimizer {
 public:
  ChunkMinimizer(std::span<const std::string> cand, std::span<const std::string> ref,
                 std::size_t node_budget)
      : cand_(cand), ref_(ref), budget_(node_budget), used_(ref.size(), false) {
    std::unordered_map<std::string_view, std::size_t> word_ids;
    auto id_of = [&](std::string_view w) {
      return word_ids.try_emplace(w, word_ids.size()).first->second;
    };
    cand_word_.reserve(cand.size());
    for (const auto& w : cand) cand_word_.push_back(id_of(w));
    positions_.resize(word_ids.size());
    for (std::size_t j = 0; j < ref.size(); ++j) {
      auto it = word_ids.find(ref[j]);
      if (it != word_ids.end()) positions_[it->second].push_back(j);
    }
    skips_.assign(word_ids.size(), 0);
    std::vector<std::size_t> cand_count(word_ids.size(), 0);
    for (auto w : cand_word_) ++cand_count[w];
    for (std::size_t w = 0; w < word_ids.size(); ++w) {
      const auto available = positions_[w].size();
      target_ += std::min(cand_count[w], available);
      skips_[w] = cand_count[w] > available ? cand_count[w] - available : 0;
    }
  }

  MeteorAlignment solve() {
    best_chunks_ = greedy_chunks();
    std::fill(used_.begin(), used_.end(), false);
    if (target_ > 0 && best_chunks_ > 1) search(0, kUnmatched, 0);
    return {target_, target_ == 0 ? 0 : best_chunks_};
  }

 private:
  // Left to right: extend the current chunk when possible, otherwise start at
  // the unused reference position that opens the longest contiguous run.
  std::size_t greedy_chunks() {
    std::size_t chunks = 0;
    std::size_t prev = kUnmatched;
    for (std::size_t i = 0; i < cand_.size(); ++i) {
      const auto w = cand_word_[i];
      std::size_t pick = kUnmatched;
      if (prev != kUnmatched && prev + 1 < ref_.size() && !used_[prev + 1] &&
          ref_[prev + 1] == cand_[i]) {
        pick = prev + 1;
      } else {
        std::size_t best_run = 0;
        for (auto j : positions_[w]) {
          if (used_[j]) continue;
          std::size_t run = 1;
          while (i + run < cand_.size() && j + run < ref_.size() && !used_[j + run] &&
                 cand_[i + run] == ref_[j + run]) {
            ++run;
          }
          if (run > best_run) {
            best_run = run;
            pick = j;
          }
        }
        if (pick != kUnmatched) ++chunks;
      }
      if (pick != kUnmatched) used_[pick] = true;
      prev = pick;
    }
    return chunks;
  }

  void search(std::size_t i, std::size_t prev, std::size_t chunks) {
    if (nodes_++ >= budget_ || chunks >= best_chunks_) return;
    if (i == cand_.size()) {
      best_chunks_ = chunks;
      return;
    }
    const auto w = cand_word_[i];
    if (prev != kUnmatched && prev + 1 < ref_.size() && !used_[prev + 1] &&
        ref_[prev + 1] == cand_[i]) {
      used_[prev + 1] = true;
      search(i + 1, prev + 1, chunks);
      used_[prev + 1] = false;
    }
    for (auto j : positions_[w]) {
      if (used_[j] || (prev != kUnmatched && j == prev + 1)) continue;
      used_[j] = true;
      search(i + 1, j, chunks + 1);
      used_[j] = false;
    }
    if (skips_[w] > 0) {
      --skips_[w];
      search(i + 1, kUnmatched, chunks);
      ++skips_[w];
    }
  }

  std::span<const std::string> cand_;
  std::span<const std::string> ref_;
  std::size_t budget_;
  std::vector<bool> used_;
  std::vector<std::size_t> cand_word_;
  std::vector<std::vector<std::size_t>> positions_;
  std::vector<std::size_t> skips_;
  std::size_t target_ = 0;
  std::size_t best_chunks_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace

MeteorAlignment meteor_align(std::span<const std::string> candidate,
                             std::span<const std::string> reference, std::size_t node_budget) {
  return ChunkMinimizer(candidate, reference, node_budget).solve();
}

double meteor(const TokenSeq& candidate, const TokenSeq& reference) {
  const auto [m, chunks] = meteor_align(candidate.tokens, reference.tokens);
  if (m == 0) return 0.0;
  const double matches = static_cast<double>(m);
  const double precision = matches / static_cast<double>(candidate.size());
  const double recall = matches / static_cast<double>(reference.size());
  const double fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
  const double fragmentation = static_cast<double>(chunks) / matches;
  const double penalty = 0.5 * fragmentation * fragmentation * fragmentation;
  return fmean * (1.0 - penalty);
}

}  // namespace commeval
