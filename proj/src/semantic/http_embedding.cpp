#include "../util/http_target.hpp"

#include "commeval/embedding.hpp"
#include "commeval/error.hpp"
#include "commeval/jsonl.hpp"

namespace commeval {

using nlohmann::json;

HttpEmbeddingBackend::HttpEmbeddingBackend(std::string base_url, HttpBackendOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::vector<std::vector<float>> HttpEmbeddingBackend::embed(EmbeddingKind kind,
                                                            std::span<const EmbedItem> items) {
  if (items.empty()) return {};
  json texts = json::array();
  for (const auto& item : items) texts.push_back(item.text);
  const json body{{"kind", to_string(kind)}, {"texts", std::move(texts)}};

  const auto target = detail::parse_base_url(base_url_);
  httplib::Client client(target.origin);
  detail::apply_timeout(client, options_.timeout);
  auto res = client.Post(target.path("/v1/embed"), body.dump(), "application/json");
  const auto& first = items.front().id;
  if (!res) throw BackendError(first, "embed request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw BackendError(first, "embed returned HTTP " + std::to_string(res->status));

  std::vector<std::vector<float>> vectors;
  try {
    vectors = json::parse(res->body).at("vectors").get<std::vector<std::vector<float>>>();
  } catch (const std::exception& e) {
    throw BackendError(first, std::string("malformed embed response: ") + e.what());
  }
  if (vectors.size() != items.size()) {
    throw BackendError(first, "embed returned " + std::to_string(vectors.size()) + " vectors for " +
                                  std::to_string(items.size()) + " texts");
  }
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    if (vectors[i].size() != vectors.front().size()) {
      throw BackendError(items[i].id, "ragged embedding dimensions in response");
    }
  }
  return vectors;
}

}  // namespace commeval
