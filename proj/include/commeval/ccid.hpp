#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "commeval/corpus.hpp"
#include "commeval/error.hpp"

namespace commeval {

// Code and comment of one function at two consecutive commits.
struct CommitPairSample {
  std::string id;
  std::string code_before;
  std::string code_after;
  std::string comment_before;
  std::string comment_after;
  Language language;
};

enum class ConsistencyLabel { consistent, inconsistent };

std::string_view to_string(ConsistencyLabel label);

struct CcidProvenance {
  std::string source_id;
  std::string pairing;  // "c1+nl2", "c2+nl1", "c1+nl1", "c2+nl2"
};

struct CcidExample {
  std::string code;
  std::string comment;
  ConsistencyLabel label = ConsistencyLabel::consistent;
  CcidProvenance provenance;
};

// Text equality ignoring trailing whitespace on each line and trailing blank lines.
bool same_modulo_trailing_whitespace(std::string_view a, std::string_view b);

// Per sample: unchanged code yields nothing; changed code with a changed
// comment yields the two cross-version pairs as inconsistent (plus the two
// same-version pairs as consistent when `emit_changed_consistent`); changed
// code with an unchanged comment yields both same-version pairs as consistent.
// Exact duplicates across samples are dropped, first occurrence wins.
std::vector<CcidExample> build_ccid_dataset(std::span<const CommitPairSample> samples,
                                            bool emit_changed_consistent = false);

std::vector<CommitPairSample> read_commit_pairs(const std::filesystem::path& path);
nlohmann::json to_json(const CcidExample& example);

struct ClassifyItem {
  std::string id;
  std::string code;
  std::string comment;
};

struct Verdict {
  std::string id;
  bool inconsistent = false;
  double confidence = 1.0;
};

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual std::string id() const = 0;
  // Called once with the full id set before a corpus run.
  virtual void prepare(std::span<const std::string> /*ids*/) {}
  // One verdict per item, in order. Must be safe to call from several threads.
  virtual std::vector<Verdict> classify(std::span<const ClassifyItem> items) = 0;
};

// Precomputed {"id", "inconsistent"[, "confidence"]} records. prepare()
// rejects a corpus whose ids the file does not cover exactly.
class VerdictFileBackend final : public ClassifierBackend {
 public:
  explicit VerdictFileBackend(const std::filesystem::path& path);
  VerdictFileBackend(std::string name, std::vector<Verdict> verdicts);

  std::string id() const override { return "verdict-file:" + name_; }
  void prepare(std::span<const std::string> ids) override;
  std::vector<Verdict> classify(std::span<const ClassifyItem> items) override;

 private:
  std::string name_;
  std::map<std::string, Verdict, std::less<>> verdicts_;
};

struct HttpClassifierOptions {
  std::chrono::milliseconds timeout{30000};
};

// POST {base_url}/v1/classify with {"pairs": [{"id","code","comment"}]}.
class HttpClassifierBackend final : public ClassifierBackend {
 public:
  explicit HttpClassifierBackend(std::string base_url, HttpClassifierOptions options = {});

  std::string id() const override { return "http:" + base_url_; }
  std::vector<Verdict> classify(std::span<const ClassifyItem> items) override;

 private:
  std::string base_url_;
  HttpClassifierOptions options_;
};

struct Classification {
  bool inconsistent = false;
  double confidence = 1.0;
};

Classification classify_pair(const CodeCommentPair& pair, ClassifierBackend& backend);

struct IncRateOptions {
  std::size_t request_chunk = 64;
  std::size_t max_in_flight = 4;
};

struct IncRateResult {
  double inc_rate = 0.0;
  std::vector<std::string> flagged_ids;  // sorted
  std::size_t total = 0;
  std::string backend_id;
};

// Raised when a backend call fails mid-run; carries what had completed.
class IncRateAborted : public BackendError {
 public:
  IncRateAborted(const BackendError& cause, std::size_t classified, std::size_t flagged);
  std::size_t classified() const { return classified_; }
  std::size_t flagged() const { return flagged_; }

 private:
  std::size_t classified_;
  std::size_t flagged_;
};

// Fraction of pairs the classifier judges inconsistent.
IncRateResult inc_rate(const EvalCorpus& corpus, ClassifierBackend& backend,
                       const IncRateOptions& options = {});

nlohmann::json to_json(const IncRateResult& result);

}  // namespace commeval
