#include <set>
#include <tuple>

#include "commeval/ccid.hpp"
#include "commeval/jsonl.hpp"
#include "commeval/text.hpp"

namespace commeval {

using nlohmann::json;

std::string_view to_string(ConsistencyLabel label) {
  return label == ConsistencyLabel::inconsistent ? "inconsistent" : "consistent";
}

namespace {

std::string normalize_lines(std::string_view s) {
  std::string out;
  std::size_t kept = 0;
  while (true) {
    const auto nl = s.find('\n');
    const auto line = text::trim_right(s.substr(0, nl));
    out.append(line);
    if (!line.empty()) kept = out.size();
    if (nl == std::string_view::npos) break;
    out += '\n';
    s.remove_prefix(nl + 1);
  }
  out.resize(kept);
  return out;
}

}  // namespace

bool same_modulo_trailing_whitespace(std::string_view a, std::string_view b) {
  return normalize_lines(a) == normalize_lines(b);
}

std::vector<CcidExample> build_ccid_dataset(std::span<const CommitPairSample> samples,
                                            bool emit_changed_consistent) {
  std::vector<CcidExample> out;
  std::set<std::tuple<std::string_view, std::string_view, ConsistencyLabel>> seen;
  auto emit = [&](const CommitPairSample& s, const std::string& code, const std::string& comment,
                  ConsistencyLabel label, const char* pairing) {
    if (!seen.emplace(code, comment, label).second) return;
    out.push_back({code, comment, label, {s.id, pairing}});
  };

  for (const auto& s : samples) {
    if (same_modulo_trailing_whitespace(s.code_before, s.code_after)) continue;
    if (!same_modulo_trailing_whitespace(s.comment_before, s.comment_after)) {
      emit(s, s.code_before, s.comment_after, ConsistencyLabel::inconsistent, "c1+nl2");
      emit(s, s.code_after, s.comment_before, ConsistencyLabel::inconsistent, "c2+nl1");
      if (!emit_changed_consistent) continue;
    }
    emit(s, s.code_before, s.comment_before, ConsistencyLabel::consistent, "c1+nl1");
    emit(s, s.code_after, s.comment_after, ConsistencyLabel::consistent, "c2+nl2");
  }
  return out;
}

std::vector<CommitPairSample> read_commit_pairs(const std::filesystem::path& path) {
  std::vector<CommitPairSample> out;
  std::size_t index = 0;
  for (const auto& record : jsonl::read_all(path)) {
    ++index;
    CommitPairSample s;
    s.id = record.value("id", path.stem().string() + ":" + std::to_string(index));
    try {
      s.code_before = record.at("code_before").get<std::string>();
      s.code_after = record.at("code_after").get<std::string>();
      s.comment_before = record.at("comment_before").get<std::string>();
      s.comment_after = record.at("comment_after").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(path.string() + ": record '" + s.id + "': " + e.what());
    }
    s.language = Language::parse(record.value("language", std::string("other")));
    out.push_back(std::move(s));
  }
  return out;
}

json to_json(const CcidExample& example) {
  return {{"code", example.code},
          {"comment", example.comment},
          {"label", to_string(example.label)},
          {"source_id", example.provenance.source_id},
          {"pairing", example.provenance.pairing}};
}

}  // namespace commeval
