#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "commeval/error.hpp"
#include "commeval/ngram.hpp"

namespace commeval {
namespace {

using Gram = std::span<const std::string>;

struct GramLess {
  bool operator()(Gram a, Gram b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
};

using GramCounts = std::map<Gram, std::size_t, GramLess>;

GramCounts count_grams(const std::vector<std::string>& tokens, std::size_t n) {
  GramCounts counts;
  if (tokens.size() < n) return counts;
  const Gram all(tokens);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[all.subspan(i, n)];
  return counts;
}

std::size_t closest_reference_length(std::size_t cand_len, std::span<const TokenSeq> refs) {
  std::size_t best = refs.front().size();
  auto gap = [&](std::size_t len) {
    return len > cand_len ? len - cand_len : cand_len - len;
  };
  for (const auto& ref : refs) {
    const auto len = ref.size();
    if (gap(len) < gap(best) || (gap(len) == gap(best) && len < best)) best = len;
  }
  return best;
}

}  // namespace

void NgramCounts::accumulate(const NgramCounts& other) {
  if (matches.size() < other.matches.size()) {
    matches.resize(other.matches.size());
    totals.resize(other.totals.size());
  }
  for (std::size_t n = 0; n < other.matches.size(); ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
}

NgramCounts ngram_counts(const TokenSeq& candidate, std::span<const TokenSeq> references,
                         int max_n) {
  if (max_n < 1) throw InvalidArgument("bleu: max_n must be >= 1");
  if (references.empty()) throw InvalidArgument("bleu: at least one reference is required");
  NgramCounts out;
  out.candidate_length = candidate.size();
  out.reference_length = closest_reference_length(candidate.size(), references);
  for (int n = 1; n <= max_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    const auto cand = count_grams(candidate.tokens, un);
    GramCounts max_ref;
    for (const auto& ref : references) {
      for (const auto& [gram, count] : count_grams(ref.tokens, un)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    }
    std::size_t clipped = 0;
    for (const auto& [gram, count] : cand) {
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    out.matches.push_back(clipped);
    out.totals.push_back(candidate.size() >= un ? candidate.size() - un + 1 : 0);
  }
  return out;
}

double bleu_from_counts(const NgramCounts& counts, BleuSmoothing smoothing) {
  if (counts.candidate_length == 0 || counts.matches.empty()) return 0.0;
  const double weight = 1.0 / static_cast<double>(counts.matches.size());
  double log_sum = 0.0;
  for (std::size_t n = 0; n < counts.matches.size(); ++n) {
    double num = static_cast<double>(counts.matches[n]);
    double den = static_cast<double>(counts.totals[n]);
    if (smoothing == BleuSmoothing::add_one) {
      num += 1.0;
      den += 1.0;
    }
    if (num == 0.0 || den == 0.0) return 0.0;
    log_sum += weight * std::log(num / den);
  }
  const double c = static_cast<double>(counts.candidate_length);
  const double r = static_cast<double>(counts.reference_length);
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * std::exp(log_sum);
}

double bleu(const TokenSeq& candidate, std::span<const TokenSeq> references, int max_n,
            BleuSmoothing smoothing) {
  return bleu_from_counts(ngram_counts(candidate, references, max_n), smoothing);
}

double bleu(const TokenSeq& candidate, const TokenSeq& reference, int max_n,
            BleuSmoothing smoothing) {
  return bleu(candidate, std::span<const TokenSeq>(&reference, 1), max_n, smoothing);
}

}  // namespace commeval
