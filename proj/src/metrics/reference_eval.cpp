#include <fmt/format.h>

#include "commeval/jsonl.hpp"
#include "commeval/ngram.hpp"
#include "commeval/text.hpp"

namespace commeval {

bool exact_match(std::string_view candidate, std::string_view reference) {
  return text::trim(candidate) == text::trim(reference);
}

RefMetricReport evaluate_reference_based(const EvalCorpus& predictions,
                                         const EvalCorpus& references,
                                         const ReferenceEvalOptions& options) {
  require_same_ids(predictions, references);
  RefMetricReport report;
  report.tokenizer_id = options.tokenizer_id;
  report.per_pair.reserve(references.size());

  NgramCounts pooled;
  double sum_bleu = 0.0;
  double sum_rouge = 0.0;
  double sum_meteor = 0.0;
  std::size_t exact = 0;
  for (const auto& ref_pair : references) {
    const auto& pred_pair = *predictions.find(ref_pair.id);
    const auto cand = tokenize(pred_pair.comment, options.tokenizer_id);
    const auto ref = tokenize(ref_pair.comment, options.tokenizer_id);
    const std::span<const TokenSeq> refs(&ref, 1);

    const auto counts = ngram_counts(cand, refs, options.max_n);
    pooled.accumulate(counts);

    PairScores scores;
    scores.id = ref_pair.id;
    scores.bleu = bleu_from_counts(counts, options.sentence_smoothing);
    scores.rouge_l = rouge_l(cand, ref, options.rouge_beta);
    scores.meteor = meteor(cand, ref);
    scores.exact_match = exact_match(pred_pair.comment, ref_pair.comment);

    sum_bleu += scores.bleu;
    sum_rouge += scores.rouge_l;
    sum_meteor += scores.meteor;
    exact += scores.exact_match ? 1 : 0;
    report.per_pair.push_back(std::move(scores));
  }

  if (!references.empty()) {
    const auto n = static_cast<double>(references.size());
    auto& agg = report.aggregate;
    agg.corpus_bleu = bleu_from_counts(pooled, BleuSmoothing::none);
    agg.mean_sentence_bleu = sum_bleu / n;
    agg.mean_rouge_l = sum_rouge / n;
    agg.mean_meteor = sum_meteor / n;
    agg.em_rate = static_cast<double>(exact) / n;
  }
  return report;
}

std::string to_jsonl(const RefMetricReport& report) {
  std::string out;
  for (const auto& p : report.per_pair) {
    out += jsonl::dump_line({{"id", p.id},
                             {"bleu", p.bleu},
                             {"rouge_l", p.rouge_l},
                             {"meteor", p.meteor},
                             {"exact_match", p.exact_match}});
  }
  const auto& a = report.aggregate;
  out += jsonl::dump_line({{"aggregate",
                            {{"pairs", report.per_pair.size()},
                             {"tokenizer", report.tokenizer_id},
                             {"corpus_bleu", a.corpus_bleu},
                             {"mean_sentence_bleu", a.mean_sentence_bleu},
                             {"mean_rouge_l", a.mean_rouge_l},
                             {"mean_meteor", a.mean_meteor},
                             {"em_rate", a.em_rate}}}});
  return out;
}

std::string summary_table(const RefMetricReport& report) {
  const auto& a = report.aggregate;
  std::string out;
  out += fmt::format("{:<22}{:>10}\n", "metric", "value");
  out += fmt::format("{:<22}{:>10}\n", "pairs", report.per_pair.size());
  out += fmt::format("{:<22}{:>10.2f}\n", "BLEU (corpus)", 100.0 * a.corpus_bleu);
  out += fmt::format("{:<22}{:>10.2f}\n", "BLEU (sentence mean)", 100.0 * a.mean_sentence_bleu);
  out += fmt::format("{:<22}{:>10.2f}\n", "ROUGE-L", 100.0 * a.mean_rouge_l);
  out += fmt::format("{:<22}{:>10.2f}\n", "METEOR", 100.0 * a.mean_meteor);
  out += fmt::format("{:<22}{:>10.2f}\n", "EM", 100.0 * a.em_rate);
  return out;
}

}  // namespace commeval
