#include <cmath>
#include <random>

#include "commeval/error.hpp"
#include "commeval/semantic.hpp"
#include "commeval/simd/kernels.hpp"

namespace commeval {

using nlohmann::json;

std::size_t rank_of_target(std::span<const double> similarities, std::size_t target_index) {
  if (target_index >= similarities.size()) throw InvalidArgument("rank_of_target: index out of range");
  const double target = similarities[target_index];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < similarities.size(); ++j) {
    if (j != target_index && similarities[j] >= target) ++rank;
  }
  return rank;
}

double mean_reciprocal_rank(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw InvalidArgument("mean_reciprocal_rank: no ranks");
  double sum = 0.0;
  for (const auto r : ranks) {
    if (r == 0) throw InvalidArgument("mean_reciprocal_rank: ranks start at 1");
    sum += 1.0 / static_cast<double>(r);
  }
  return sum / static_cast<double>(ranks.size());
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

namespace {

std::vector<double> inverse_norms(const EmbeddingMatrix& m, std::size_t begin, std::size_t end,
                                  const std::vector<std::size_t>& order) {
  const auto& kernels = simd::active_kernels();
  std::vector<double> out;
  out.reserve(end - begin);
  for (std::size_t k = begin; k < end; ++k) {
    const auto r = order[k];
    const double sq = kernels.squared_norm(m.row(r).data(), m.dim());
    if (sq == 0.0) throw BackendError(m.id(r), "zero-norm embedding");
    out.push_back(1.0 / std::sqrt(sq));
  }
  return out;
}

}  // namespace

MrrResult mrr_from_embeddings(const EmbeddingMatrix& queries, const EmbeddingMatrix& codes,
                              const MrrOptions& options) {
  if (queries.rows() != codes.rows()) throw InvalidArgument("mrr: query/code row count mismatch");
  if (queries.rows() < 2) throw InvalidArgument("mrr: corpus needs at least 2 pairs");
  if (options.batch_size < 2) throw InvalidArgument("mrr: batch_size must be >= 2");
  if (queries.dim() != codes.dim()) {
    throw BackendError(queries.id(0), "query and code embeddings differ in dimension");
  }

  const std::size_t n = queries.rows();
  const std::size_t dim = codes.dim();
  std::vector<std::size_t> order;
  if (options.seed) {
    order = seeded_permutation(n, *options.seed);
  } else {
    order.resize(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
  }

  MrrResult result;
  result.batch_size = options.batch_size;
  result.seed = options.seed;
  const auto& kernels = simd::active_kernels();
  const bool cosine = options.similarity == SimilarityFunction::cosine;

  std::vector<float> batch_codes;
  std::vector<double> sims;
  std::vector<std::size_t> batch_ranks;
  for (std::size_t begin = 0; begin < n; begin += options.batch_size) {
    const std::size_t end = std::min(n, begin + options.batch_size);
    const std::size_t len = end - begin;
    const bool partial = len < options.batch_size;
    if (len < 2 || (partial && options.drop_partial_batch)) {
      ++result.dropped_batches;
      result.dropped_pairs += len;
      continue;
    }

    batch_codes.resize(len * dim);
    for (std::size_t k = 0; k < len; ++k) {
      const auto row = codes.row(order[begin + k]);
      std::copy(row.begin(), row.end(), batch_codes.begin() + static_cast<std::ptrdiff_t>(k * dim));
    }
    std::vector<double> code_scale;
    if (cosine) code_scale = inverse_norms(codes, begin, end, order);

    batch_ranks.clear();
    sims.resize(len);
    for (std::size_t k = 0; k < len; ++k) {
      const auto q = order[begin + k];
      kernels.dot_rows(queries.row(q).data(), batch_codes.data(), len, dim, sims.data());
      if (cosine) {
        // The query norm is a common positive factor and cannot change the ranking,
        // but it is still validated so zero queries surface as errors.
        const double sq = kernels.squared_norm(queries.row(q).data(), dim);
        if (sq == 0.0) throw BackendError(queries.id(q), "zero-norm embedding");
        const double qs = 1.0 / std::sqrt(sq);
        for (std::size_t j = 0; j < len; ++j) sims[j] *= qs * code_scale[j];
      }
      const auto rank = rank_of_target(sims, k);
      batch_ranks.push_back(rank);
      result.ranks.push_back({queries.id(q), rank});
    }
    result.batch_scores.push_back(mean_reciprocal_rank(batch_ranks));
  }

  if (result.batch_scores.empty()) throw InvalidArgument("mrr: every batch was dropped");
  double total = 0.0;
  for (double s : result.batch_scores) total += s;
  result.mrr = total / static_cast<double>(result.batch_scores.size());
  return result;
}

MrrResult mrr(const EvalCorpus& corpus, EmbeddingBackend& backend, const MrrOptions& options) {
  if (corpus.size() < 2) throw InvalidArgument("mrr: corpus needs at least 2 pairs");
  std::vector<EmbedItem> queries;
  std::vector<EmbedItem> codes;
  queries.reserve(corpus.size());
  codes.reserve(corpus.size());
  for (const auto& pair : corpus) {
    queries.push_back({pair.id, pair.comment});
    codes.push_back({pair.id, pair.code});
  }
  const auto q = embed_all(backend, EmbeddingKind::comment_query, queries, options.embed);
  const auto c = embed_all(backend, EmbeddingKind::code, codes, options.embed);
  auto result = mrr_from_embeddings(q, c, options);
  result.backend_id = backend.id();
  return result;
}

json to_json(const MrrResult& result) {
  json ranks = json::array();
  for (const auto& r : result.ranks) ranks.push_back({{"id", r.id}, {"rank", r.rank}});
  json out{{"kind", "mrr"},
           {"backend", result.backend_id},
           {"mrr", result.mrr},
           {"batch_size", result.batch_size},
           {"batch_scores", result.batch_scores},
           {"dropped_batches", result.dropped_batches},
           {"dropped_pairs", result.dropped_pairs},
           {"ranks", std::move(ranks)}};
  out["seed"] = result.seed ? json(*result.seed) : json(nullptr);
  return out;
}

}  // namespace commeval
