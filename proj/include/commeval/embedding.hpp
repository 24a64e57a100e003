#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace commeval {

enum class EmbeddingKind { comment_query, code, summary };

std::string_view to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(std::string_view s);

struct EmbeddingVector {
  std::string id;
  EmbeddingKind kind = EmbeddingKind::summary;
  std::vector<float> values;
};

struct EmbedItem {
  std::string id;
  std::string text;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string id() const = 0;
  // One vector per item, in order. Must be safe to call from several threads.
  virtual std::vector<std::vector<float>> embed(EmbeddingKind kind,
                                                std::span<const EmbedItem> items) = 0;
};

// Row-major block of equally sized vectors.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim);

  std::size_t rows() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
  const float* data() const { return data_.data(); }
  const std::string& id(std::size_t r) const { return ids_[r]; }

  // Dimension of the first row fixes the matrix width.
  void set_row(std::size_t r, std::string id, std::span<const float> values);
  void push_back(std::string id, std::span<const float> values);

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::vector<std::string> ids_;
};

struct EmbedOptions {
  std::size_t request_chunk = 256;  // items per backend call
  std::size_t max_in_flight = 4;
};

// Calls the backend over `items` in chunks and validates the reply: one
// vector per item, one shared dimension, finite values. Violations raise
// BackendError naming the offending item.
EmbeddingMatrix embed_all(EmbeddingBackend& backend, EmbeddingKind kind,
                          std::span<const EmbedItem> items, const EmbedOptions& options = {});

// Precomputed vectors from a line-delimited {"id", "kind", "vector"} file.
class VectorFileBackend final : public EmbeddingBackend {
 public:
  explicit VectorFileBackend(const std::filesystem::path& path);
  VectorFileBackend(std::string name, std::vector<EmbeddingVector> vectors);

  std::string id() const override { return "vector-file:" + name_; }
  std::vector<std::vector<float>> embed(EmbeddingKind kind,
                                        std::span<const EmbedItem> items) override;
  std::size_t size() const { return vectors_.size(); }

 private:
  void insert(EmbeddingVector v);

  std::string name_;
  std::map<std::pair<EmbeddingKind, std::string>, std::vector<float>> vectors_;
};

void write_vector_file(const std::filesystem::path& path, std::span<const EmbeddingVector> vectors);

struct HttpBackendOptions {
  std::chrono::milliseconds timeout{30000};
};

// POST {base_url}/v1/embed with {"kind", "texts"} -> {"vectors"}.
class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(std::string base_url, HttpBackendOptions options = {});

  std::string id() const override { return "http:" + base_url_; }
  std::vector<std::vector<float>> embed(EmbeddingKind kind,
                                        std::span<const EmbedItem> items) override;

 private:
  std::string base_url_;
  HttpBackendOptions options_;
};

}  // namespace commeval
