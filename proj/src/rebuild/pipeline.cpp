#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "commeval/jsonl.hpp"
#include "commeval/parallel.hpp"
#include "commeval/rebuild.hpp"
#include "commeval/text.hpp"

namespace commeval::rebuild {

using nlohmann::json;

GenerationFailure::GenerationFailure(std::string pair_id, const std::string& what, int attempts,
                                     int status)
    : BackendError(std::move(pair_id), what), attempts_(attempts), status_(status) {}

RebuildAborted::RebuildAborted(std::size_t failed, std::size_t total,
                               std::vector<RebuildFailureEntry> failures)
    : Error("rebuild aborted: " + std::to_string(failed) + " of " + std::to_string(total) +
            " pairs failed"),
      failures_(std::move(failures)) {}

namespace {

RebuildRecord make_record(const CodeCommentPair& pair, const CachedResponse& response,
                          const GenerateOptions& options) {
  RebuildRecord r;
  r.pair_id = pair.id;
  r.original_comment = pair.comment;
  r.generated_comment = postprocess_comment(response.content, options.postprocess);
  r.raw_response = response.content;
  r.usage = response.usage;
  r.cost = options.prices.cost(r.usage);
  r.empty_output = r.generated_comment.empty();
  return r;
}

void sleep_for(const RetryPolicy& policy, std::chrono::milliseconds delay) {
  if (policy.sleep) {
    policy.sleep(delay);
  } else {
    std::this_thread::sleep_for(delay);
  }
}

}  // namespace

RebuildRecord generate_comment(const CodeCommentPair& pair, const GenerationParams& params,
                               ChatClient& client, const ResponseCache& cache,
                               const GenerateOptions& options) {
  params.validate();
  const auto request = ChatRequest::from(params, options.prompt.render(pair.language, pair.code));
  const auto key = request.cache_key();
  if (auto hit = cache.get(key)) {
    auto record = make_record(pair, *hit, options);
    record.cached = true;
    record.attempts = 0;
    return record;
  }

  const int max_attempts = std::max(1, options.retry.max_attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      const auto response = client.complete(request);
      const CachedResponse stored{response.content, response.usage, response.raw_body};
      cache.put(key, stored);
      auto record = make_record(pair, stored, options);
      record.attempts = attempt;
      return record;
    } catch (const TransientApiError& e) {
      if (attempt >= max_attempts) {
        throw GenerationFailure(pair.id, std::string("retries exhausted: ") + e.what(), attempt,
                                e.status());
      }
      const auto backoff = options.retry.delay_after(attempt);
      sleep_for(options.retry, e.retry_after() ? std::max(*e.retry_after(), backoff) : backoff);
    } catch (const PermanentApiError& e) {
      throw GenerationFailure(pair.id, e.what(), attempt, e.status());
    }
  }
}

RebuildResult rebuild_corpus(const EvalCorpus& corpus, const GenerationParams& params,
                             ChatClient& client, const ResponseCache& cache,
                             const RebuildOptions& options) {
  if (options.max_in_flight < 1) throw InvalidArgument("rebuild: max_in_flight must be >= 1");
  params.validate();

  const auto& pairs = corpus.pairs();
  std::vector<std::optional<RebuildRecord>> records(pairs.size());
  std::vector<std::optional<RebuildFailureEntry>> failures(pairs.size());
  std::atomic<std::size_t> failed{0};
  const auto allowed =
      static_cast<std::size_t>(options.failure_threshold * static_cast<double>(pairs.size()));

  bounded_parallel_for(
      pairs.size(), options.max_in_flight,
      [&](std::size_t i) {
        try {
          records[i] = generate_comment(pairs[i], params, client, cache, options.generate);
        } catch (const GenerationFailure& e) {
          failures[i] = RebuildFailureEntry{pairs[i].id, e.what(), e.attempts(), e.status()};
          ++failed;
        } catch (const std::exception& e) {
          failures[i] = RebuildFailureEntry{pairs[i].id, e.what(), 0, 0};
          ++failed;
        }
      },
      [&] { return failed.load() > allowed; });

  std::vector<RebuildFailureEntry> failure_list;
  for (auto& f : failures) {
    if (f) failure_list.push_back(std::move(*f));
  }
  if (failed.load() > allowed) {
    throw RebuildAborted(failed.load(), pairs.size(), std::move(failure_list));
  }

  RebuildResult result;
  result.corpus = EvalCorpus(corpus.name() + "-rebuilt");
  result.failures = std::move(failure_list);
  result.cost.prices = options.generate.prices;
  const auto source = CommentSource::from_model(params.model);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!records[i]) continue;
    const auto& record = *records[i];
    auto pair = pairs[i];
    pair.comment = record.generated_comment;
    pair.source = source;
    result.corpus.add(std::move(pair));

    auto& cost = result.cost;
    ++cost.records;
    cost.usage.prompt_tokens += record.usage.prompt_tokens;
    cost.usage.completion_tokens += record.usage.completion_tokens;
    cost.network_attempts += static_cast<std::uint64_t>(record.attempts);
    if (record.cached) {
      ++cost.cached;
    } else {
      cost.incurred_usage.prompt_tokens += record.usage.prompt_tokens;
      cost.incurred_usage.completion_tokens += record.usage.completion_tokens;
    }
    result.records.push_back(record);
  }
  for (const auto& f : result.failures) result.cost.network_attempts += static_cast<std::uint64_t>(f.attempts);
  result.cost.failed = result.failures.size();
  result.cost.total_cost = result.cost.prices.cost(result.cost.usage);
  result.cost.incurred_cost = result.cost.prices.cost(result.cost.incurred_usage);
  return result;
}

std::uint64_t chars_per_four_estimate(std::string_view input) {
  return (text::utf8_length(input) + 3) / 4;
}

double estimate_cost(const EvalCorpus& corpus, const GenerationParams& params,
                     const PriceTable& prices, const TokenEstimator& estimator,
                     const PromptTemplate& prompt) {
  TokenUsage usage;
  for (const auto& pair : corpus) {
    usage.prompt_tokens += estimator(prompt.render(pair.language, pair.code));
    usage.completion_tokens += static_cast<std::uint64_t>(params.max_tokens);
  }
  return prices.cost(usage);
}

json to_json(const RebuildRecord& r) {
  return {{"id", r.pair_id},
          {"original_comment", r.original_comment},
          {"generated_comment", r.generated_comment},
          {"raw_response", r.raw_response},
          {"prompt_tokens", r.usage.prompt_tokens},
          {"completion_tokens", r.usage.completion_tokens},
          {"cost", r.cost},
          {"attempts", r.attempts},
          {"cached", r.cached},
          {"empty_output", r.empty_output}};
}

json to_json(const CostReport& c) {
  return {{"records", c.records},
          {"cached", c.cached},
          {"failed", c.failed},
          {"network_attempts", c.network_attempts},
          {"prompt_tokens", c.usage.prompt_tokens},
          {"completion_tokens", c.usage.completion_tokens},
          {"incurred_prompt_tokens", c.incurred_usage.prompt_tokens},
          {"incurred_completion_tokens", c.incurred_usage.completion_tokens},
          {"total_cost", c.total_cost},
          {"incurred_cost", c.incurred_cost},
          {"price_input_per_million", c.prices.input_per_million},
          {"price_output_per_million", c.prices.output_per_million}};
}

json to_json(const RebuildFailureEntry& f) {
  return {{"id", f.pair_id}, {"error", f.message}, {"attempts", f.attempts}, {"status", f.status}};
}

void write_outputs(const RebuildResult& result, const std::filesystem::path& out) {
  write_jsonl(result.corpus, out);
  auto sibling = [&](const char* suffix) {
    auto p = out;
    p += suffix;
    return p;
  };
  std::string records;
  for (const auto& r : result.records) records += jsonl::dump_line(to_json(r));
  jsonl::write_file_atomic(sibling(".records.jsonl"), records);
  jsonl::write_file_atomic(sibling(".cost.json"), to_json(result.cost).dump(2) + "\n");
  std::string failures;
  for (const auto& f : result.failures) failures += jsonl::dump_line(to_json(f));
  jsonl::write_file_atomic(sibling(".failures.jsonl"), failures);
}

RebuildConfig RebuildConfig::from_json(const json& c) {
  RebuildConfig cfg;
  cfg.endpoint.base_url = c.value("endpoint", cfg.endpoint.base_url);
  cfg.endpoint.timeout = std::chrono::milliseconds(c.value("timeout_ms", cfg.endpoint.timeout.count()));
  cfg.endpoint.requests_per_minute = c.value("requests_per_minute", 0.0);
  cfg.api_key_env = c.value("api_key_env", cfg.api_key_env);
  cfg.params.model = c.value("model", cfg.params.model);
  cfg.params.max_tokens = c.value("max_tokens", cfg.params.max_tokens);
  cfg.params.top_p = c.value("top_p", cfg.params.top_p);
  cfg.params.temperature = c.value("temperature", cfg.params.temperature);
  if (auto p = c.find("prices"); p != c.end()) {
    cfg.prices.input_per_million = p->value("input_per_million", 0.0);
    cfg.prices.output_per_million = p->value("output_per_million", 0.0);
  }
  cfg.max_in_flight = c.value("max_in_flight", cfg.max_in_flight);
  if (auto r = c.find("retry"); r != c.end()) {
    cfg.retry.max_attempts = r->value("max_attempts", cfg.retry.max_attempts);
    cfg.retry.base_delay = std::chrono::milliseconds(r->value("base_delay_ms", cfg.retry.base_delay.count()));
    cfg.retry.max_delay = std::chrono::milliseconds(r->value("max_delay_ms", cfg.retry.max_delay.count()));
    cfg.retry.multiplier = r->value("multiplier", cfg.retry.multiplier);
  }
  cfg.cache_dir = c.value("cache_dir", cfg.cache_dir.string());
  cfg.failure_threshold = c.value("failure_threshold", cfg.failure_threshold);
  cfg.first_sentence_only = c.value("first_sentence_only", cfg.first_sentence_only);
  if (const char* key = std::getenv(cfg.api_key_env.c_str())) cfg.endpoint.api_key = key;
  return cfg;
}

json RebuildConfig::to_json() const {
  return {{"endpoint", endpoint.base_url},
          {"timeout_ms", endpoint.timeout.count()},
          {"requests_per_minute", endpoint.requests_per_minute},
          {"api_key_env", api_key_env},
          {"model", params.model},
          {"max_tokens", params.max_tokens},
          {"top_p", params.top_p},
          {"temperature", params.temperature},
          {"prices", {{"input_per_million", prices.input_per_million},
                      {"output_per_million", prices.output_per_million}}},
          {"max_in_flight", max_in_flight},
          {"retry", {{"max_attempts", retry.max_attempts},
                     {"base_delay_ms", retry.base_delay.count()},
                     {"max_delay_ms", retry.max_delay.count()},
                     {"multiplier", retry.multiplier}}},
          {"cache_dir", cache_dir.string()},
          {"failure_threshold", failure_threshold},
          {"first_sentence_only", first_sentence_only}};
}

}  // namespace commeval::rebuild
