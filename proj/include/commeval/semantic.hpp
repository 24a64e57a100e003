#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "commeval/corpus.hpp"
#include "commeval/embedding.hpp"

namespace commeval {

// dot(u, v) / (|u| |v|). Throws InvalidArgument on a dimension mismatch or
// an all-zero vector.
double cosine_similarity(std::span<const float> u, std::span<const float> v);
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

struct UseScore {
  std::vector<std::pair<std::string, double>> per_pair;  // reference corpus order
  double mean = 0.0;
  std::string backend_id;
};

// Cosine between each prediction's comment embedding and its reference's.
UseScore use_score(const EvalCorpus& predictions, const EvalCorpus& references,
                   EmbeddingBackend& backend, const EmbedOptions& options = {});
// Separate backends for the two sides, e.g. two precomputed vector files.
UseScore use_score(const EvalCorpus& predictions, const EvalCorpus& references,
                   EmbeddingBackend& prediction_backend, EmbeddingBackend& reference_backend,
                   const EmbedOptions& options = {});

// 1 + (number of other entries scoring >= the target). Ties rank the
// target below the tied distractors.
std::size_t rank_of_target(std::span<const double> similarities, std::size_t target_index);

// Mean of 1/rank over one batch of queries.
double mean_reciprocal_rank(std::span<const std::size_t> ranks);

enum class SimilarityFunction { cosine, inner_product };

struct MrrOptions {
  std::size_t batch_size = 1000;
  std::optional<std::uint64_t> seed;  // shuffle before partitioning when set
  bool drop_partial_batch = false;
  SimilarityFunction similarity = SimilarityFunction::cosine;
  EmbedOptions embed;
};

struct RankEntry {
  std::string id;
  std::size_t rank = 0;
};

struct MrrResult {
  double mrr = 0.0;
  std::vector<double> batch_scores;
  std::vector<RankEntry> ranks;  // partition order
  std::size_t batch_size = 0;
  std::size_t dropped_batches = 0;
  std::size_t dropped_pairs = 0;
  std::optional<std::uint64_t> seed;
  std::string backend_id;
};

// Code-search MRR: every comment queries the codes of its batch, the paired
// code is the ground truth and the rest are distractors. The final score is
// the unweighted mean of the batch scores.
MrrResult mrr(const EvalCorpus& corpus, EmbeddingBackend& backend, const MrrOptions& options = {});

// Same computation over already-embedded rows; row i of `queries` pairs
// with row i of `codes`.
MrrResult mrr_from_embeddings(const EmbeddingMatrix& queries, const EmbeddingMatrix& codes,
                              const MrrOptions& options = {});

// Seeded Fisher-Yates permutation of [0, n), identical across platforms.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

nlohmann::json to_json(const UseScore& score);
nlohmann::json to_json(const MrrResult& result);

}  // namespace commeval
