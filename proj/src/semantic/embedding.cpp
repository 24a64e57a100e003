#include "commeval/embedding.hpp"

#include <cmath>
#include <fstream>

#include "commeval/error.hpp"
#include "commeval/jsonl.hpp"
#include "commeval/parallel.hpp"

namespace commeval {

using nlohmann::json;

std::string_view to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::comment_query: return "comment_query";
    case EmbeddingKind::code: return "code";
    case EmbeddingKind::summary: break;
  }
  return "summary";
}

EmbeddingKind parse_embedding_kind(std::string_view s) {
  if (s == "comment_query") return EmbeddingKind::comment_query;
  if (s == "code") return EmbeddingKind::code;
  if (s == "summary") return EmbeddingKind::summary;
  throw InvalidArgument("unknown embedding kind '" + std::string(s) + "'");
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim)
    : dim_(dim), data_(rows * dim, 0.0f), ids_(rows) {}

void EmbeddingMatrix::set_row(std::size_t r, std::string id, std::span<const float> values) {
  if (values.size() != dim_) {
    throw BackendError(id, "dimension " + std::to_string(values.size()) + " != " +
                               std::to_string(dim_));
  }
  std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * dim_));
  ids_[r] = std::move(id);
}

void EmbeddingMatrix::push_back(std::string id, std::span<const float> values) {
  if (ids_.empty() && dim_ == 0) dim_ = values.size();
  ids_.emplace_back();
  data_.resize(ids_.size() * dim_);
  set_row(ids_.size() - 1, std::move(id), values);
}

EmbeddingMatrix embed_all(EmbeddingBackend& backend, EmbeddingKind kind,
                          std::span<const EmbedItem> items, const EmbedOptions& options) {
  const std::size_t chunk = std::max<std::size_t>(1, options.request_chunk);
  const std::size_t n_chunks = (items.size() + chunk - 1) / chunk;
  std::vector<std::vector<std::vector<float>>> replies(n_chunks);

  bounded_parallel_for(n_chunks, options.max_in_flight, [&](std::size_t c) {
    const auto slice = items.subspan(c * chunk, std::min(chunk, items.size() - c * chunk));
    try {
      replies[c] = backend.embed(kind, slice);
    } catch (const BackendError&) {
      throw;
    } catch (const std::exception& e) {
      throw BackendError(slice.front().id, e.what());
    }
    if (replies[c].size() != slice.size()) {
      throw BackendError(slice.front().id, "backend returned " + std::to_string(replies[c].size()) +
                                               " vectors for " + std::to_string(slice.size()) +
                                               " texts");
    }
  });

  const std::size_t dim = items.empty() ? 0 : replies.front().front().size();
  if (!items.empty() && dim == 0) throw BackendError(items.front().id, "empty vector");
  EmbeddingMatrix out(items.size(), dim);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& values = replies[i / chunk][i % chunk];
    for (float v : values) {
      if (!std::isfinite(v)) throw BackendError(items[i].id, "non-finite vector component");
    }
    out.set_row(i, items[i].id, values);
  }
  return out;
}

VectorFileBackend::VectorFileBackend(const std::filesystem::path& path)
    : name_(path.filename().string()) {
  jsonl::for_each_line(path, [&](std::size_t line, std::string_view raw) {
    if (raw.find_first_not_of(" \t") == std::string_view::npos) return;
    try {
      const auto record = json::parse(raw);
      EmbeddingVector v;
      v.id = record.at("id").get<std::string>();
      v.kind = parse_embedding_kind(record.at("kind").get<std::string>());
      v.values = record.at("vector").get<std::vector<float>>();
      insert(std::move(v));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
}

VectorFileBackend::VectorFileBackend(std::string name, std::vector<EmbeddingVector> vectors)
    : name_(std::move(name)) {
  for (auto& v : vectors) insert(std::move(v));
}

void VectorFileBackend::insert(EmbeddingVector v) {
  auto key = std::make_pair(v.kind, v.id);
  if (!vectors_.emplace(std::move(key), std::move(v.values)).second) {
    throw InvalidArgument("duplicate vector for id '" + v.id + "' kind " +
                          std::string(to_string(v.kind)));
  }
}

std::vector<std::vector<float>> VectorFileBackend::embed(EmbeddingKind kind,
                                                         std::span<const EmbedItem> items) {
  std::vector<std::vector<float>> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    auto it = vectors_.find({kind, item.id});
    if (it == vectors_.end()) {
      throw BackendError(item.id, "no " + std::string(to_string(kind)) + " vector in " + name_);
    }
    out.push_back(it->second);
  }
  return out;
}

void write_vector_file(const std::filesystem::path& path, std::span<const EmbeddingVector> vectors) {
  std::string body;
  for (const auto& v : vectors) {
    body += jsonl::dump_line({{"id", v.id}, {"kind", to_string(v.kind)}, {"vector", v.values}});
  }
  jsonl::write_file_atomic(path, body);
}

}  // namespace commeval
