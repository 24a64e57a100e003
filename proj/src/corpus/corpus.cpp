#include "commeval/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "commeval/error.hpp"
#include "commeval/jsonl.hpp"
#include "commeval/text.hpp"

namespace commeval {

using nlohmann::json;

namespace {

struct KnownLanguage {
  std::string_view tag;
  Language::Kind kind;
  std::string_view display;
};

constexpr KnownLanguage kKnown[] = {
    {"java", Language::Kind::java, "Java"},
    {"python", Language::Kind::python, "Python"},
    {"php", Language::Kind::php, "PHP"},
    {"javascript", Language::Kind::javascript, "JavaScript"},
    {"go", Language::Kind::go, "Go"},
    {"ruby", Language::Kind::ruby, "Ruby"},
};

}  // namespace

Language Language::parse(std::string_view tag) {
  Language lang;
  lang.tag_ = text::to_lower_ascii(text::trim(tag));
  if (lang.tag_ == "js") lang.tag_ = "javascript";
  if (lang.tag_.empty()) lang.tag_ = "other";
  for (const auto& known : kKnown) {
    if (known.tag == lang.tag_) lang.kind_ = known.kind;
  }
  return lang;
}

std::string Language::display_name() const {
  for (const auto& known : kKnown) {
    if (known.kind == kind_ && kind_ != Kind::other) return std::string(known.display);
  }
  return tag_;
}

std::string CommentSource::to_string() const {
  return model ? "model:" + *model : std::string("human_reference");
}

CommentSource CommentSource::parse(std::string_view s) {
  s = text::trim(s);
  if (s.empty() || s == "human_reference" || s == "human") return human();
  if (s.starts_with("model:")) s.remove_prefix(6);
  return from_model(std::string(s));
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    case Split::none: break;
  }
  return "none";
}

Split parse_split(std::string_view s) {
  const auto lower = text::to_lower_ascii(text::trim(s));
  if (lower == "train") return Split::train;
  if (lower == "valid" || lower == "validation" || lower == "dev") return Split::valid;
  if (lower == "test") return Split::test;
  return Split::none;
}

EvalCorpus::EvalCorpus(std::string name, std::vector<CodeCommentPair> pairs)
    : name_(std::move(name)) {
  pairs_.reserve(pairs.size());
  for (auto& p : pairs) add(std::move(p));
}

void EvalCorpus::add(CodeCommentPair pair) {
  if (pair.id.empty()) throw InvalidArgument("pair id must be non-empty");
  if (pair.code.empty()) throw InvalidArgument("pair '" + pair.id + "' has empty code");
  if (index_.contains(pair.id)) throw InvalidArgument("duplicate pair id '" + pair.id + "'");
  index_.emplace(pair.id, pairs_.size());
  pairs_.push_back(std::move(pair));
}

bool EvalCorpus::contains(std::string_view id) const { return find(id) != nullptr; }

const CodeCommentPair* EvalCorpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &pairs_[it->second];
}

FieldMapping FieldMapping::code_search_net() {
  FieldMapping m;
  m.id = "";
  m.source = "";
  m.split = "partition";
  return m;
}

IngestFailure::IngestFailure(IngestError error)
    : std::runtime_error("line " + std::to_string(error.line) + ": " + error.message),
      error_(std::move(error)) {}

namespace {

std::string string_field(const json& record, const std::string& field, bool required,
                         const char* role) {
  if (field.empty()) {
    if (required) throw std::invalid_argument(std::string("no field mapped for ") + role);
    return {};
  }
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    if (required) throw std::invalid_argument("missing field '" + field + "'");
    return {};
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer() && role == std::string_view("id")) return it->dump();
  throw std::invalid_argument("field '" + field + "' is not a string");
}

class Ingester {
 public:
  Ingester(const FieldMapping& mapping, const IngestOptions& options)
      : mapping_(mapping),
        options_(options),
        name_(options.name.empty() ? "corpus" : options.name),
        result_{EvalCorpus(name_), {}} {}

  void line(std::size_t number, std::string_view raw) {
    if (text::trim(raw).empty()) return;
    try {
      result_.corpus.add(parse(number, raw));
    } catch (const std::exception& e) {
      reject(number, e.what());
    }
  }

  IngestResult take() { return std::move(result_); }

 private:
  CodeCommentPair parse(std::size_t number, std::string_view raw) const {
    json record;
    try {
      record = json::parse(raw);
    } catch (const json::parse_error&) {
      throw std::invalid_argument("malformed record");
    }
    if (!record.is_object()) throw std::invalid_argument("record is not an object");

    CodeCommentPair pair;
    pair.id = string_field(record, mapping_.id, false, "id");
    if (pair.id.empty()) pair.id = name_ + ":" + std::to_string(number);
    pair.code = string_field(record, mapping_.code, true, "code");
    if (pair.code.empty()) throw std::invalid_argument("empty code");
    pair.comment = string_field(record, mapping_.comment, true, "comment");
    auto lang = string_field(record, mapping_.language, false, "language");
    pair.language = Language::parse(lang.empty() ? mapping_.default_language : lang);
    pair.source = CommentSource::parse(string_field(record, mapping_.source, false, "source"));
    pair.split = parse_split(string_field(record, mapping_.split, false, "split"));
    return pair;
  }

  void reject(std::size_t number, std::string message) {
    IngestError error{number, std::move(message)};
    if (options_.strict) throw IngestFailure(std::move(error));
    result_.errors.push_back(std::move(error));
  }

  const FieldMapping& mapping_;
  const IngestOptions& options_;
  std::string name_;
  IngestResult result_;
};

}  // namespace

IngestResult ingest_jsonl_text(std::string_view contents, const FieldMapping& mapping,
                               const IngestOptions& options) {
  Ingester ingester(mapping, options);
  std::size_t number = 0;
  while (!contents.empty()) {
    ++number;
    const auto nl = contents.find('\n');
    auto line = contents.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ingester.line(number, line);
    if (nl == std::string_view::npos) break;
    contents.remove_prefix(nl + 1);
  }
  return ingester.take();
}

IngestResult ingest_jsonl(const std::filesystem::path& path, const FieldMapping& mapping,
                          const IngestOptions& options) {
  IngestOptions effective = options;
  if (effective.name.empty()) effective.name = path.stem().string();
  Ingester ingester(mapping, effective);
  jsonl::for_each_line(path, [&](std::size_t n, std::string_view line) { ingester.line(n, line); });
  auto result = ingester.take();
  if (effective.write_error_ledger && !result.errors.empty()) {
    write_error_ledger(error_ledger_path(path), result.errors);
  }
  return result;
}

std::filesystem::path error_ledger_path(const std::filesystem::path& input) {
  auto p = input;
  p += ".errors";
  return p;
}

void write_error_ledger(const std::filesystem::path& path, const std::vector<IngestError>& errors) {
  std::string body;
  for (const auto& e : errors) body += jsonl::dump_line({{"line", e.line}, {"error", e.message}});
  jsonl::write_file_atomic(path, body);
}

json to_json(const CodeCommentPair& pair) {
  return {{"id", pair.id},
          {"language", pair.language.tag()},
          {"code", pair.code},
          {"docstring", pair.comment},
          {"source", pair.source.to_string()},
          {"split", std::string(to_string(pair.split))}};
}

void write_jsonl(const EvalCorpus& corpus, std::ostream& out) {
  for (const auto& pair : corpus) out << jsonl::dump_line(to_json(pair));
}

void write_jsonl(const EvalCorpus& corpus, const std::filesystem::path& path) {
  std::ostringstream buf;
  write_jsonl(corpus, buf);
  jsonl::write_file_atomic(path, buf.str());
}

void require_same_ids(const EvalCorpus& left, const EvalCorpus& right) {
  std::vector<std::string> only_left;
  std::vector<std::string> only_right;
  for (const auto& p : left) {
    if (!right.contains(p.id)) only_left.push_back(p.id);
  }
  for (const auto& p : right) {
    if (!left.contains(p.id)) only_right.push_back(p.id);
  }
  if (!only_left.empty() || !only_right.empty()) {
    std::sort(only_left.begin(), only_left.end());
    std::sort(only_right.begin(), only_right.end());
    throw IdMismatchError(std::move(only_left), std::move(only_right));
  }
}

}  // namespace commeval
