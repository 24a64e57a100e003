#include <algorithm>
#include <cmath>

#include "commeval/error.hpp"
#include "commeval/semantic.hpp"
#include "commeval/simd/kernels.hpp"

namespace commeval {

using nlohmann::json;

double cosine_similarity(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  }
  const double nu = simd::squared_norm(u);
  const double nv = simd::squared_norm(v);
  if (nu == 0.0 || nv == 0.0) throw InvalidArgument("cosine: zero-norm vector");
  const double c = simd::dot(u, v) / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  try {
    return cosine_similarity(std::span<const float>(u.values), std::span<const float>(v.values));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string(e.what()) + " for ids '" + u.id + "', '" + v.id + "'");
  }
}

UseScore use_score(const EvalCorpus& predictions, const EvalCorpus& references,
                   EmbeddingBackend& backend, const EmbedOptions& options) {
  return use_score(predictions, references, backend, backend, options);
}

UseScore use_score(const EvalCorpus& predictions, const EvalCorpus& references,
                   EmbeddingBackend& prediction_backend, EmbeddingBackend& reference_backend,
                   const EmbedOptions& options) {
  require_same_ids(predictions, references);
  std::vector<EmbedItem> pred_items;
  std::vector<EmbedItem> ref_items;
  pred_items.reserve(references.size());
  ref_items.reserve(references.size());
  for (const auto& ref : references) {
    pred_items.push_back({ref.id, predictions.find(ref.id)->comment});
    ref_items.push_back({ref.id, ref.comment});
  }
  const auto pred = embed_all(prediction_backend, EmbeddingKind::summary, pred_items, options);
  const auto ref = embed_all(reference_backend, EmbeddingKind::summary, ref_items, options);

  UseScore out;
  out.backend_id = prediction_backend.id();
  if (&prediction_backend != &reference_backend) out.backend_id += "+" + reference_backend.id();
  if (!references.empty() && pred.dim() != ref.dim()) {
    throw BackendError(ref_items.front().id, "prediction and reference embeddings differ in dimension");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ref_items.size(); ++i) {
    double score = 0.0;
    try {
      score = cosine_similarity(pred.row(i), ref.row(i));
    } catch (const InvalidArgument& e) {
      throw BackendError(ref_items[i].id, e.what());
    }
    sum += score;
    out.per_pair.emplace_back(ref_items[i].id, score);
  }
  if (!out.per_pair.empty()) out.mean = sum / static_cast<double>(out.per_pair.size());
  return out;
}

json to_json(const UseScore& score) {
  json pairs = json::array();
  for (const auto& [id, s] : score.per_pair) pairs.push_back({{"id", id}, {"use", s}});
  return {{"kind", "use"}, {"backend", score.backend_id}, {"mean", score.mean},
          {"pairs", score.per_pair.size()}, {"per_pair", std::move(pairs)}};
}

}  // namespace commeval
