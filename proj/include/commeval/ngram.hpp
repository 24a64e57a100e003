#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "commeval/corpus.hpp"
#include "commeval/tokenize.hpp"

namespace commeval {

enum class BleuSmoothing { none, add_one };

// Clipped n-gram matches and candidate n-gram totals for n = 1..max_n.
struct NgramCounts {
  std::vector<std::size_t> matches;
  std::vector<std::size_t> totals;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;  // closest reference length, ties to the shorter

  void accumulate(const NgramCounts& other);
};

NgramCounts ngram_counts(const TokenSeq& candidate, std::span<const TokenSeq> references,
                         int max_n = 4);

// BLEU from (possibly pooled) counts: geometric mean of the modified
// precisions with uniform weights, times the brevity penalty.
double bleu_from_counts(const NgramCounts& counts, BleuSmoothing smoothing);

// Sentence BLEU. An empty candidate scores 0.
double bleu(const TokenSeq& candidate, std::span<const TokenSeq> references, int max_n = 4,
            BleuSmoothing smoothing = BleuSmoothing::none);
double bleu(const TokenSeq& candidate, const TokenSeq& reference, int max_n = 4,
            BleuSmoothing smoothing = BleuSmoothing::none);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// ROUGE-L F-measure; beta weights recall.
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference, double beta = 1.0);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Exact-unigram alignment with the maximum number of matches and, among
// those, the fewest chunks. The left-to-right greedy alignment seeds a
// branch-and-bound search; `node_budget` caps the search on pathological
// inputs, in which case the best alignment found so far is returned.
MeteorAlignment meteor_align(std::span<const std::string> candidate,
                             std::span<const std::string> reference,
                             std::size_t node_budget = 200000);

double meteor(const TokenSeq& candidate, const TokenSeq& reference);

// Equality after trimming surrounding whitespace; no tokenization.
bool exact_match(std::string_view candidate, std::string_view reference);

struct ReferenceEvalOptions {
  std::string tokenizer_id = std::string(kDefaultTokenizer);
  int max_n = 4;
  BleuSmoothing sentence_smoothing = BleuSmoothing::add_one;
  double rouge_beta = 1.0;
};

struct PairScores {
  std::string id;
  double bleu = 0.0;
  double rouge_l = 0.0;
  double meteor = 0.0;
  bool exact_match = false;
};

struct RefMetricAggregate {
  double corpus_bleu = 0.0;
  double mean_sentence_bleu = 0.0;
  double mean_rouge_l = 0.0;
  double mean_meteor = 0.0;
  double em_rate = 0.0;
};

struct RefMetricReport {
  std::vector<PairScores> per_pair;  // reference corpus order
  RefMetricAggregate aggregate;
  std::string tokenizer_id;
};

// Joins predictions and references on id; throws IdMismatchError when the id
// sets differ.
RefMetricReport evaluate_reference_based(const EvalCorpus& predictions,
                                         const EvalCorpus& references,
                                         const ReferenceEvalOptions& options = {});

// One line per pair followed by one {"aggregate": ...} line.
std::string to_jsonl(const RefMetricReport& report);
std::string summary_table(const RefMetricReport& report);

}  // namespace commeval
