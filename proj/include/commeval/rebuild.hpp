#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "commeval/corpus.hpp"
#include "commeval/error.hpp"

namespace commeval::rebuild {

// Comment-generation prompt. `[Code Snippet Content]` must appear exactly
// once; `[PL]` at least once and is replaced everywhere.
class PromptTemplate {
 public:
  static constexpr std::string_view kLanguagePlaceholder = "[PL]";
  static constexpr std::string_view kCodePlaceholder = "[Code Snippet Content]";
  static constexpr std::string_view kDefaultText =
      "You are an expert [PL] programmer. For the given [PL] method, please write a "
      "one-sentence description as comment: [Code Snippet Content]";

  PromptTemplate() : PromptTemplate(std::string(kDefaultText)) {}
  explicit PromptTemplate(std::string text);

  const std::string& text() const { return text_; }
  // Substitutes in a single pass, so placeholder-like text inside `code`
  // is left alone. Throws InvalidArgument on empty code.
  std::string render(const Language& language, std::string_view code) const;

 private:
  std::string text_;
};

std::string render_prompt(const Language& language, std::string_view code);

struct GenerationParams {
  std::string model = "gpt-3.5-turbo-0125";
  int max_tokens = 30;
  double top_p = 1.0;
  double temperature = 1.0;

  void validate() const;
};

struct PostprocessOptions {
  bool first_sentence_only = false;
};

// Strips comment markers (//, #, /**, /*, leading *, trailing */) and
// surrounding quotes, collapses whitespace, trims.
std::string postprocess_comment(std::string_view raw, const PostprocessOptions& options = {});
std::string first_sentence(std::string_view text);

struct TokenUsage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

// Prices in currency units per one million tokens.
struct PriceTable {
  double input_per_million = 0.0;
  double output_per_million = 0.0;

  double cost(const TokenUsage& usage) const;
};

struct ChatRequest {
  std::string model;
  std::string prompt;
  int max_tokens = 30;
  double top_p = 1.0;
  double temperature = 1.0;

  static ChatRequest from(const GenerationParams& params, std::string prompt);
  // {"model", "messages": [{"role": "user", "content": prompt}], "max_tokens",
  // "top_p", "temperature"}. Integral reals are written as integers.
  nlohmann::json to_wire() const;
  // Hex digest over the fields that determine the completion.
  std::string cache_key() const;
};

struct ChatResponse {
  std::string content;
  TokenUsage usage;
  std::string raw_body;
};

// 5xx, 429 and transport failures.
class TransientApiError : public Error {
 public:
  TransientApiError(int status, const std::string& what,
                    std::optional<std::chrono::milliseconds> retry_after = std::nullopt);
  int status() const { return status_; }
  std::optional<std::chrono::milliseconds> retry_after() const { return retry_after_; }

 private:
  int status_;
  std::optional<std::chrono::milliseconds> retry_after_;
};

// Any other 4xx, or an unusable response body.
class PermanentApiError : public Error {
 public:
  PermanentApiError(int status, const std::string& what);
  int status() const { return status_; }

 private:
  int status_;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // One attempt, no retries. Must be safe to call from several threads.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Blocking token bucket; capacity `burst`, refilled at `per_minute` / 60 per second.
class TokenBucket {
 public:
  TokenBucket(double per_minute, double burst);
  void acquire();

 private:
  std::mutex mutex_;
  double rate_per_second_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct EndpointConfig {
  std::string base_url = "https://api.openai.com";
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  double requests_per_minute = 0.0;  // 0 disables rate limiting
};

// OpenAI-compatible POST {base_url}/v1/chat/completions.
class OpenAiChatClient final : public ChatClient {
 public:
  explicit OpenAiChatClient(EndpointConfig config);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  EndpointConfig config_;
  std::optional<TokenBucket> limiter_;
};

// Parses a chat-completions response body into content and usage.
ChatResponse parse_chat_response(const std::string& body);

struct CachedResponse {
  std::string content;
  TokenUsage usage;
  std::string raw_body;
};

// Content-addressed on-disk store: <dir>/<key[0:2]>/<key>.json, written via
// rename so a crash never leaves a partial entry.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<CachedResponse> get(const std::string& key) const;
  void put(const std::string& key, const CachedResponse& value) const;
  bool erase(const std::string& key) const;
  std::size_t size() const;
  std::filesystem::path path_for(const std::string& key) const;

 private:
  std::filesystem::path dir_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};
  double multiplier = 2.0;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleeping the thread

  std::chrono::milliseconds delay_after(int attempt) const;  // attempt >= 1
};

struct RebuildRecord {
  std::string pair_id;
  std::string original_comment;
  std::string generated_comment;
  std::string raw_response;
  TokenUsage usage;
  double cost = 0.0;
  int attempts = 0;
  bool cached = false;
  bool empty_output = false;
};

class GenerationFailure : public BackendError {
 public:
  GenerationFailure(std::string pair_id, const std::string& what, int attempts, int status);
  int attempts() const { return attempts_; }
  int status() const { return status_; }

 private:
  int attempts_;
  int status_;
};

struct GenerateOptions {
  PromptTemplate prompt;
  RetryPolicy retry;
  PriceTable prices;
  PostprocessOptions postprocess;
};

// Cache hit: no network traffic, attempts = 0. Miss: request with retries on
// transient errors, then persist the raw completion. Throws GenerationFailure.
RebuildRecord generate_comment(const CodeCommentPair& pair, const GenerationParams& params,
                               ChatClient& client, const ResponseCache& cache,
                               const GenerateOptions& options = {});

struct RebuildOptions {
  std::size_t max_in_flight = 4;
  double failure_threshold = 0.05;  // abort once failures exceed this fraction of the corpus
  GenerateOptions generate;
};

struct RebuildFailureEntry {
  std::string pair_id;
  std::string message;
  int attempts = 0;
  int status = 0;
};

struct CostReport {
  std::size_t records = 0;
  std::size_t cached = 0;
  std::size_t failed = 0;
  std::uint64_t network_attempts = 0;
  TokenUsage usage;           // all successful records
  TokenUsage incurred_usage;  // records fetched during this run
  double total_cost = 0.0;
  double incurred_cost = 0.0;
  PriceTable prices;
};

struct RebuildResult {
  EvalCorpus corpus;
  std::vector<RebuildRecord> records;  // corpus order
  CostReport cost;
  std::vector<RebuildFailureEntry> failures;  // corpus order
};

class RebuildAborted : public Error {
 public:
  RebuildAborted(std::size_t failed, std::size_t total, std::vector<RebuildFailureEntry> failures);
  const std::vector<RebuildFailureEntry>& failures() const { return failures_; }

 private:
  std::vector<RebuildFailureEntry> failures_;
};

RebuildResult rebuild_corpus(const EvalCorpus& corpus, const GenerationParams& params,
                             ChatClient& client, const ResponseCache& cache,
                             const RebuildOptions& options = {});

using TokenEstimator = std::function<std::uint64_t(std::string_view)>;

// ceil(characters / 4)
std::uint64_t chars_per_four_estimate(std::string_view text);

double estimate_cost(const EvalCorpus& corpus, const GenerationParams& params,
                     const PriceTable& prices, const TokenEstimator& estimator = chars_per_four_estimate,
                     const PromptTemplate& prompt = {});

nlohmann::json to_json(const RebuildRecord& record);
nlohmann::json to_json(const CostReport& report);
nlohmann::json to_json(const RebuildFailureEntry& failure);

// <out> corpus, <out>.records.jsonl, <out>.cost.json, <out>.failures.jsonl
void write_outputs(const RebuildResult& result, const std::filesystem::path& out);

// Settings read from a JSON config file; see README for the schema.
struct RebuildConfig {
  EndpointConfig endpoint;
  std::string api_key_env = "OPENAI_API_KEY";
  GenerationParams params;
  PriceTable prices;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
  std::filesystem::path cache_dir = ".commeval-cache";
  double failure_threshold = 0.05;
  bool first_sentence_only = false;

  static RebuildConfig from_json(const nlohmann::json& config);
  nlohmann::json to_json() const;  // never includes the credential
};

}  // namespace commeval::rebuild
