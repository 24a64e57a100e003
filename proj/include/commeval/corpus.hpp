#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace commeval {

// Programming language tag. Known languages map to an enum; anything else is
// kept verbatim (lowercased) as `other`.
class Language {
 public:
  enum class Kind { java, python, php, javascript, go, ruby, other };

  Language() = default;
  static Language parse(std::string_view tag);
  static Language java() { return parse("java"); }
  static Language python() { return parse("python"); }

  Kind kind() const { return kind_; }
  const std::string& tag() const { return tag_; }
  // "Java", "JavaScript", "PHP", ...; unknown tags are returned as-is.
  std::string display_name() const;

  friend bool operator==(const Language&, const Language&) = default;

 private:
  Kind kind_ = Kind::other;
  std::string tag_ = "other";
};

// Who wrote the comment: the corpus' human reference or a named model.
struct CommentSource {
  std::optional<std::string> model;  // empty => human reference

  static CommentSource human() { return {}; }
  static CommentSource from_model(std::string name) { return {std::move(name)}; }
  bool is_human() const { return !model.has_value(); }

  // "human_reference" or "model:<name>".
  std::string to_string() const;
  static CommentSource parse(std::string_view s);

  friend bool operator==(const CommentSource&, const CommentSource&) = default;
};

enum class Split { train, valid, test, none };

std::string_view to_string(Split split);
Split parse_split(std::string_view s);  // accepts "validation"/"dev" for valid; unknown => none

struct CodeCommentPair {
  std::string id;
  Language language;
  std::string code;
  std::string comment;
  CommentSource source;
  Split split = Split::none;

  friend bool operator==(const CodeCommentPair&, const CodeCommentPair&) = default;
};

class EvalCorpus {
 public:
  EvalCorpus() = default;
  explicit EvalCorpus(std::string name) : name_(std::move(name)) {}
  // Throws InvalidArgument on duplicate or empty ids, or empty code.
  EvalCorpus(std::string name, std::vector<CodeCommentPair> pairs);

  const std::string& name() const { return name_; }
  const std::vector<CodeCommentPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  void add(CodeCommentPair pair);
  bool contains(std::string_view id) const;
  const CodeCommentPair* find(std::string_view id) const;

  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

 private:
  std::string name_;
  std::vector<CodeCommentPair> pairs_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Names of the record fields ingestion reads from. An empty field name means
// "not present in this format".
struct FieldMapping {
  std::string id = "id";
  std::string language = "language";
  std::string code = "code";
  std::string comment = "docstring";
  std::string source = "source";
  std::string split = "split";
  std::string default_language = "other";

  static FieldMapping canonical() { return {}; }
  // CodeSearchNet release files: {repo, path, func_name, original_string,
  // language, code, docstring, partition, ...}; ids are synthesized.
  static FieldMapping code_search_net();
};

struct IngestOptions {
  std::string name;      // defaults to the file stem
  bool strict = false;   // abort on the first bad line
  bool write_error_ledger = true;  // "<input>.errors" when any line is rejected
};

struct IngestError {
  std::size_t line = 0;
  std::string message;
};

struct IngestResult {
  EvalCorpus corpus;
  std::vector<IngestError> errors;
};

// Thrown in strict mode.
class IngestFailure : public std::runtime_error {
 public:
  explicit IngestFailure(IngestError error);
  const IngestError& error() const { return error_; }

 private:
  IngestError error_;
};

IngestResult ingest_jsonl(const std::filesystem::path& path,
                          const FieldMapping& mapping = {},
                          const IngestOptions& options = {});

// Same parser over an in-memory buffer; never writes a ledger.
IngestResult ingest_jsonl_text(std::string_view contents, const FieldMapping& mapping,
                               const IngestOptions& options);

std::filesystem::path error_ledger_path(const std::filesystem::path& input);
void write_error_ledger(const std::filesystem::path& path, const std::vector<IngestError>& errors);

nlohmann::json to_json(const CodeCommentPair& pair);
// Canonical interchange form, one record per line.
void write_jsonl(const EvalCorpus& corpus, std::ostream& out);
void write_jsonl(const EvalCorpus& corpus, const std::filesystem::path& path);

// Checks both corpora carry the same id set; throws IdMismatchError otherwise.
void require_same_ids(const EvalCorpus& left, const EvalCorpus& right);

struct LengthStats {
  std::size_t pair_count = 0;
  std::size_t total_tokens = 0;
  double mean_comment_len = 0.0;
  double median_comment_len = 0.0;
  std::size_t unique_words = 0;

  friend bool operator==(const LengthStats&, const LengthStats&) = default;
};

struct CorpusStats {
  LengthStats overall;
  std::map<std::string, LengthStats> per_language;
  std::string tokenizer_id = "whitespace";

  std::size_t pair_count() const { return overall.pair_count; }
};

CorpusStats corpus_stats(const EvalCorpus& corpus);
nlohmann::json to_json(const CorpusStats& stats);

}  // namespace commeval
