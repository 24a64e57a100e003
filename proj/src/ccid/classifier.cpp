#include "../util/http_target.hpp"

#include <algorithm>

#include "commeval/ccid.hpp"
#include "commeval/jsonl.hpp"

namespace commeval {

using nlohmann::json;

VerdictFileBackend::VerdictFileBackend(const std::filesystem::path& path)
    : name_(path.filename().string()) {
  for (const auto& record : jsonl::read_all(path)) {
    Verdict v;
    try {
      v.id = record.at("id").get<std::string>();
      v.inconsistent = record.at("inconsistent").get<bool>();
      v.confidence = record.value("confidence", 1.0);
    } catch (const json::exception& e) {
      throw Error(path.string() + ": " + e.what());
    }
    if (!verdicts_.emplace(v.id, v).second) {
      throw InvalidArgument(path.string() + ": duplicate verdict for '" + v.id + "'");
    }
  }
}

VerdictFileBackend::VerdictFileBackend(std::string name, std::vector<Verdict> verdicts)
    : name_(std::move(name)) {
  for (auto& v : verdicts) {
    auto id = v.id;
    if (!verdicts_.emplace(std::move(id), std::move(v)).second) {
      throw InvalidArgument("duplicate verdict id");
    }
  }
}

void VerdictFileBackend::prepare(std::span<const std::string> ids) {
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  std::vector<std::string> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& id : sorted) {
    if (!verdicts_.contains(id)) missing.push_back(id);
  }
  for (const auto& [id, v] : verdicts_) {
    if (!std::binary_search(sorted.begin(), sorted.end(), id)) extra.push_back(id);
  }
  if (!missing.empty() || !extra.empty()) {
    // "left" is the corpus, "right" the verdict file.
    throw IdMismatchError(std::move(missing), std::move(extra));
  }
}

std::vector<Verdict> VerdictFileBackend::classify(std::span<const ClassifyItem> items) {
  std::vector<Verdict> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    auto it = verdicts_.find(item.id);
    if (it == verdicts_.end()) throw BackendError(item.id, "no verdict in " + name_);
    out.push_back(it->second);
  }
  return out;
}

HttpClassifierBackend::HttpClassifierBackend(std::string base_url, HttpClassifierOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::vector<Verdict> HttpClassifierBackend::classify(std::span<const ClassifyItem> items) {
  if (items.empty()) return {};
  json pairs = json::array();
  for (const auto& item : items) {
    pairs.push_back({{"id", item.id}, {"code", item.code}, {"comment", item.comment}});
  }
  const auto target = detail::parse_base_url(base_url_);
  httplib::Client client(target.origin);
  detail::apply_timeout(client, options_.timeout);
  auto res = client.Post(target.path("/v1/classify"), json{{"pairs", std::move(pairs)}}.dump(),
                         "application/json");
  const auto& first = items.front().id;
  if (!res) throw BackendError(first, "classify request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw BackendError(first, "classify returned HTTP " + std::to_string(res->status));
  }

  std::vector<Verdict> out;
  try {
    const auto doc = json::parse(res->body);
    for (const auto& v : doc.at("verdicts")) {
      out.push_back({v.at("id").get<std::string>(), v.at("inconsistent").get<bool>(),
                     v.value("confidence", 1.0)});
    }
  } catch (const std::exception& e) {
    throw BackendError(first, std::string("malformed classify response: ") + e.what());
  }
  return out;
}

Classification classify_pair(const CodeCommentPair& pair, ClassifierBackend& backend) {
  const ClassifyItem item{pair.id, pair.code, pair.comment};
  std::vector<Verdict> verdicts;
  try {
    verdicts = backend.classify(std::span<const ClassifyItem>(&item, 1));
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError(pair.id, e.what());
  }
  if (verdicts.size() != 1 || verdicts.front().id != pair.id) {
    throw BackendError(pair.id, "backend returned no verdict for this pair");
  }
  return {verdicts.front().inconsistent, verdicts.front().confidence};
}

}  // namespace commeval
