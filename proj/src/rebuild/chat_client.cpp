#include <cmath>
#include <thread>

#include "../util/http_target.hpp"
#include "commeval/digest.hpp"
#include "commeval/rebuild.hpp"

namespace commeval::rebuild {

using nlohmann::json;

namespace {

json wire_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    return json(static_cast<std::int64_t>(v));
  }
  return json(v);
}

std::optional<std::chrono::milliseconds> parse_retry_after(const httplib::Response& res) {
  if (!res.has_header("Retry-After")) return std::nullopt;
  try {
    const double seconds = std::stod(res.get_header_value("Retry-After"));
    if (seconds >= 0) return std::chrono::milliseconds(static_cast<long long>(seconds * 1000));
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace

TransientApiError::TransientApiError(int status, const std::string& what,
                                     std::optional<std::chrono::milliseconds> retry_after)
    : Error(what), status_(status), retry_after_(retry_after) {}

PermanentApiError::PermanentApiError(int status, const std::string& what)
    : Error(what), status_(status) {}

double PriceTable::cost(const TokenUsage& usage) const {
  return (static_cast<double>(usage.prompt_tokens) * input_per_million +
          static_cast<double>(usage.completion_tokens) * output_per_million) /
         1e6;
}

ChatRequest ChatRequest::from(const GenerationParams& params, std::string prompt) {
  return {params.model, std::move(prompt), params.max_tokens, params.top_p, params.temperature};
}

json ChatRequest::to_wire() const {
  return {{"model", model},
          {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
          {"max_tokens", max_tokens},
          {"top_p", wire_number(top_p)},
          {"temperature", wire_number(temperature)}};
}

std::string ChatRequest::cache_key() const {
  const json key{{"v", 1},
                 {"model", model},
                 {"prompt", prompt},
                 {"max_tokens", max_tokens},
                 {"top_p", wire_number(top_p)},
                 {"temperature", wire_number(temperature)}};
  return sha256_hex(key.dump());
}

TokenBucket::TokenBucket(double per_minute, double burst)
    : rate_per_second_(per_minute / 60.0),
      capacity_(std::max(1.0, burst)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  while (true) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() *
                                                  rate_per_second_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_second_);
    }
    std::this_thread::sleep_for(wait);
  }
}

OpenAiChatClient::OpenAiChatClient(EndpointConfig config) : config_(std::move(config)) {
  if (config_.requests_per_minute > 0.0) {
    limiter_.emplace(config_.requests_per_minute, std::max(1.0, config_.requests_per_minute / 60.0));
  }
}

ChatResponse parse_chat_response(const std::string& body) {
  ChatResponse out;
  out.raw_body = body;
  try {
    const auto doc = json::parse(body);
    const auto& message = doc.at("choices").at(0).at("message");
    const auto& content = message.at("content");
    out.content = content.is_null() ? std::string() : content.get<std::string>();
    if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
      out.usage.prompt_tokens = usage->value("prompt_tokens", std::uint64_t{0});
      out.usage.completion_tokens = usage->value("completion_tokens", std::uint64_t{0});
    }
  } catch (const json::exception& e) {
    throw PermanentApiError(200, std::string("malformed chat completion: ") + e.what());
  }
  return out;
}

ChatResponse OpenAiChatClient::complete(const ChatRequest& request) {
  if (limiter_) limiter_->acquire();
  const auto target = detail::parse_base_url(config_.base_url);
  httplib::Client client(target.origin);
  detail::apply_timeout(client, config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(target.path("/v1/chat/completions"), headers, request.to_wire().dump(),
                         "application/json");
  if (!res) throw TransientApiError(0, "transport error: " + httplib::to_string(res.error()));
  if (res->status == 200) return parse_chat_response(res->body);
  const auto detail = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
  if (res->status == 429 || res->status >= 500) {
    throw TransientApiError(res->status, detail, parse_retry_after(*res));
  }
  throw PermanentApiError(res->status, detail);
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  const double factor = std::pow(multiplier, std::max(0, attempt - 1));
  const double ms = std::min(static_cast<double>(max_delay.count()),
                             static_cast<double>(base_delay.count()) * factor);
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

}  // namespace commeval::rebuild
