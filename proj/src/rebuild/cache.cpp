#include <fstream>
#include <sstream>

#include "commeval/jsonl.hpp"
#include "commeval/rebuild.hpp"

namespace commeval::rebuild {

using nlohmann::json;

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  if (key.size() < 3) throw InvalidArgument("cache key too short");
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<CachedResponse> ResponseCache::get(const std::string& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    const auto doc = json::parse(buf.str());
    CachedResponse out;
    out.content = doc.at("content").get<std::string>();
    out.usage.prompt_tokens = doc.at("prompt_tokens").get<std::uint64_t>();
    out.usage.completion_tokens = doc.at("completion_tokens").get<std::uint64_t>();
    out.raw_body = doc.value("raw", std::string());
    return out;
  } catch (const json::exception&) {
    // Unreadable entries behave as misses and get rewritten.
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const CachedResponse& value) const {
  const auto path = path_for(key);
  std::filesystem::create_directories(path.parent_path());
  const json doc{{"content", value.content},
                 {"prompt_tokens", value.usage.prompt_tokens},
                 {"completion_tokens", value.usage.completion_tokens},
                 {"raw", value.raw_body}};
  jsonl::write_file_atomic(path, doc.dump());
}

bool ResponseCache::erase(const std::string& key) const {
  std::error_code ec;
  return std::filesystem::remove(path_for(key), ec);
}

std::size_t ResponseCache::size() const {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") ++n;
  }
  return n;
}

}  // namespace commeval::rebuild
