#include <algorithm>
#include <atomic>

#include "commeval/ccid.hpp"
#include "commeval/parallel.hpp"

namespace commeval {

using nlohmann::json;

IncRateAborted::IncRateAborted(const BackendError& cause, std::size_t classified,
                               std::size_t flagged)
    : BackendError(cause.item_id(), std::string(cause.what()) + " (aborted after " +
                                        std::to_string(classified) + " pairs, " +
                                        std::to_string(flagged) + " flagged)"),
      classified_(classified),
      flagged_(flagged) {}

IncRateResult inc_rate(const EvalCorpus& corpus, ClassifierBackend& backend,
                       const IncRateOptions& options) {
  if (corpus.empty()) throw InvalidArgument("inc_rate: corpus is empty");
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& p : corpus) ids.push_back(p.id);
  backend.prepare(ids);

  const auto& pairs = corpus.pairs();
  const std::size_t chunk = std::max<std::size_t>(1, options.request_chunk);
  const std::size_t n_chunks = (pairs.size() + chunk - 1) / chunk;
  std::vector<char> flagged(pairs.size(), 0);
  std::atomic<std::size_t> classified{0};
  std::atomic<std::size_t> flagged_so_far{0};

  try {
    bounded_parallel_for(n_chunks, options.max_in_flight, [&](std::size_t c) {
      const std::size_t begin = c * chunk;
      const std::size_t end = std::min(pairs.size(), begin + chunk);
      std::vector<ClassifyItem> items;
      items.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        items.push_back({pairs[i].id, pairs[i].code, pairs[i].comment});
      }
      std::vector<Verdict> verdicts;
      try {
        verdicts = backend.classify(items);
      } catch (const BackendError&) {
        throw;
      } catch (const std::exception& e) {
        throw BackendError(items.front().id, e.what());
      }
      if (verdicts.size() != items.size()) {
        throw BackendError(items.front().id, "backend returned " + std::to_string(verdicts.size()) +
                                                 " verdicts for " + std::to_string(items.size()));
      }
      for (std::size_t k = 0; k < items.size(); ++k) {
        if (verdicts[k].id != items[k].id) {
          throw BackendError(items[k].id, "verdict id '" + verdicts[k].id + "' out of order");
        }
        if (verdicts[k].inconsistent) {
          flagged[begin + k] = 1;
          ++flagged_so_far;
        }
      }
      classified += items.size();
    });
  } catch (const BackendError& e) {
    throw IncRateAborted(e, classified.load(), flagged_so_far.load());
  }

  IncRateResult result;
  result.total = pairs.size();
  result.backend_id = backend.id();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (flagged[i]) result.flagged_ids.push_back(pairs[i].id);
  }
  std::sort(result.flagged_ids.begin(), result.flagged_ids.end());
  result.inc_rate =
      static_cast<double>(result.flagged_ids.size()) / static_cast<double>(result.total);
  return result;
}

json to_json(const IncRateResult& result) {
  return {{"kind", "incrate"},
          {"backend", result.backend_id},
          {"inc_rate", result.inc_rate},
          {"total", result.total},
          {"flagged", result.flagged_ids.size()},
          {"flagged_ids", result.flagged_ids}};
}

}  // namespace commeval
