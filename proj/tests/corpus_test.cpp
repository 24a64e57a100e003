#include <gtest/gtest.h>

#include <sstream>

#include "commeval/corpus.hpp"
#include "commeval/error.hpp"
#include "fixtures.hpp"

namespace commeval {
namespace {

using testing::TempDir;

IngestResult ingest_copy(const TempDir& dir, const std::string& name,
                         const FieldMapping& mapping = {}, IngestOptions options = {}) {
  const auto copy = dir / name;
  std::filesystem::copy_file(testing::fixture(name), copy);
  return ingest_jsonl(copy, mapping, options);
}

TEST(Language, ParsesKnownTagsCaseInsensitively) {
  EXPECT_EQ(Language::parse("Java").kind(), Language::Kind::java);
  EXPECT_EQ(Language::parse(" PYTHON ").tag(), "python");
  EXPECT_EQ(Language::parse("js").kind(), Language::Kind::javascript);
  EXPECT_EQ(Language::parse("php").display_name(), "PHP");
  EXPECT_EQ(Language::parse("javascript").display_name(), "JavaScript");
}

TEST(Language, KeepsUnknownTagVerbatim) {
  const auto lang = Language::parse("Kotlin");
  EXPECT_EQ(lang.kind(), Language::Kind::other);
  EXPECT_EQ(lang.tag(), "kotlin");
  EXPECT_EQ(lang.display_name(), "kotlin");
  EXPECT_EQ(Language::parse("").tag(), "other");
}

TEST(CommentSource, RoundTripsThroughString) {
  EXPECT_EQ(CommentSource::human().to_string(), "human_reference");
  EXPECT_EQ(CommentSource::from_model("gpt-4").to_string(), "model:gpt-4");
  EXPECT_EQ(CommentSource::parse("model:gpt-4"), CommentSource::from_model("gpt-4"));
  EXPECT_TRUE(CommentSource::parse("").is_human());
}

TEST(Split, AcceptsAliases) {
  EXPECT_EQ(parse_split("validation"), Split::valid);
  EXPECT_EQ(parse_split("dev"), Split::valid);
  EXPECT_EQ(parse_split("TEST"), Split::test);
  EXPECT_EQ(parse_split("holdout"), Split::none);
}

TEST(EvalCorpus, RejectsDuplicateAndEmptyIds) {
  EvalCorpus corpus("c");
  corpus.add({"a", Language::java(), "x", "c", {}, Split::none});
  EXPECT_THROW(corpus.add({"a", Language::java(), "y", "d", {}, Split::none}), InvalidArgument);
  EXPECT_THROW(corpus.add({"", Language::java(), "y", "d", {}, Split::none}), InvalidArgument);
  EXPECT_THROW(corpus.add({"b", Language::java(), "", "d", {}, Split::none}), InvalidArgument);
  EXPECT_EQ(corpus.size(), 1u);
  ASSERT_NE(corpus.find("a"), nullptr);
  EXPECT_EQ(corpus.find("a")->code, "x");
  EXPECT_EQ(corpus.find("zz"), nullptr);
}

TEST(Ingest, LenientModeSkipsBadLinesAndWritesLedger) {
  TempDir dir;
  const auto result = ingest_copy(dir, "corpus_small.jsonl");
  ASSERT_EQ(result.corpus.size(), 5u);
  ASSERT_EQ(result.errors.size(), 2u);
  EXPECT_EQ(result.errors[0].line, 3u);
  EXPECT_EQ(result.errors[1].line, 8u);
  EXPECT_EQ(result.corpus.name(), "corpus_small");

  const auto ledger = testing::read_file(dir / "corpus_small.jsonl.errors");
  EXPECT_NE(ledger.find("\"line\":3"), std::string::npos);
  EXPECT_NE(ledger.find("\"line\":8"), std::string::npos);

  const auto& j2 = *result.corpus.find("j2");
  EXPECT_EQ(j2.language, Language::java());
  EXPECT_TRUE(j2.source.is_human());
  const auto& p2 = *result.corpus.find("p2");
  EXPECT_EQ(p2.source, CommentSource::from_model("gpt-3.5-turbo-0125"));
  EXPECT_EQ(result.corpus.find("g1")->split, Split::valid);
  EXPECT_EQ(result.corpus.find("p1")->code, "def f(x):\n    return x * 2");
}

TEST(Ingest, StrictModeAbortsOnFirstBadLine) {
  TempDir dir;
  IngestOptions options;
  options.strict = true;
  try {
    ingest_copy(dir, "corpus_small.jsonl", {}, options);
    FAIL() << "expected IngestFailure";
  } catch (const IngestFailure& e) {
    EXPECT_EQ(e.error().line, 3u);
  }
}

TEST(Ingest, CodeSearchNetMappingSynthesizesIds) {
  TempDir dir;
  const auto result = ingest_copy(dir, "csn_sample.jsonl", FieldMapping::code_search_net());
  ASSERT_TRUE(result.errors.empty());
  ASSERT_EQ(result.corpus.size(), 2u);
  EXPECT_EQ(result.corpus.pairs()[0].id, "csn_sample:1");
  EXPECT_EQ(result.corpus.pairs()[1].id, "csn_sample:2");
  EXPECT_EQ(result.corpus.pairs()[0].comment, "Add two values.");
  EXPECT_EQ(result.corpus.pairs()[0].split, Split::test);
  EXPECT_EQ(result.corpus.pairs()[1].split, Split::train);
  EXPECT_FALSE(std::filesystem::exists(dir / "csn_sample.jsonl.errors"));
}

TEST(Ingest, RoundTripIsLossless) {
  TempDir dir;
  const auto first = ingest_copy(dir, "corpus_small.jsonl").corpus;
  const auto out = dir / "round.jsonl";
  write_jsonl(first, out);
  const auto second = ingest_jsonl(out).corpus;
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first.pairs()[i], second.pairs()[i]);

  // A second write is byte-identical to the first.
  const auto again = dir / "again.jsonl";
  write_jsonl(second, again);
  EXPECT_EQ(testing::read_file(out), testing::read_file(again));
}

TEST(Ingest, RoundTripPreservesUnicodeAndEscapes) {
  EvalCorpus corpus("u");
  corpus.add({"u1", Language::parse("ruby"), "puts \"h\\u00e9\"\n\ttab", "Prints h\xc3\xa9llo \xe2\x9c\x93.",
              CommentSource::from_model("m"), Split::train});
  std::ostringstream buf;
  write_jsonl(corpus, buf);
  const auto back = ingest_jsonl_text(buf.str(), {}, {}).corpus;
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back.pairs()[0], corpus.pairs()[0]);
}

TEST(Ingest, TextIngestionUsesDefaultName) {
  const auto result = ingest_jsonl_text(R"({"code":"x","docstring":"y"})", {}, {});
  ASSERT_EQ(result.corpus.size(), 1u);
  EXPECT_EQ(result.corpus.pairs()[0].id, "corpus:1");
  EXPECT_EQ(result.corpus.pairs()[0].language.tag(), "other");
}

TEST(Ingest, MissingCommentFieldIsRejected) {
  const auto result = ingest_jsonl_text(R"({"id":"a","code":"x"})", {}, {});
  EXPECT_EQ(result.corpus.size(), 0u);
  ASSERT_EQ(result.errors.size(), 1u);
}

TEST(RequireSameIds, ReportsSymmetricDifference) {
  EvalCorpus a("a");
  a.add({"1", {}, "x", "c", {}, Split::none});
  a.add({"2", {}, "x", "c", {}, Split::none});
  EvalCorpus b("b");
  b.add({"2", {}, "x", "c", {}, Split::none});
  b.add({"3", {}, "x", "c", {}, Split::none});
  try {
    require_same_ids(a, b);
    FAIL() << "expected IdMismatchError";
  } catch (const IdMismatchError& e) {
    EXPECT_EQ(e.only_in_left(), std::vector<std::string>{"1"});
    EXPECT_EQ(e.only_in_right(), std::vector<std::string>{"3"});
  }
  EXPECT_NO_THROW(require_same_ids(a, a));
}

// Hand counts over the five valid fixture comments (whitespace tokens):
//   j1 "Adds two numbers."             3
//   j2 "Resets the counter to zero."   5
//   p1 "Doubles x."                    2
//   p2 "Does nothing to the counter"   5
//   g1 "Id returns x unchanged."       4
TEST(CorpusStats, MatchesHandCounts) {
  TempDir dir;
  const auto stats = corpus_stats(ingest_copy(dir, "corpus_small.jsonl").corpus);
  EXPECT_EQ(stats.overall, (LengthStats{5, 19, 3.8, 4.0, 16}));
  ASSERT_EQ(stats.per_language.size(), 3u);
  EXPECT_EQ(stats.per_language.at("java"), (LengthStats{2, 8, 4.0, 4.0, 8}));
  EXPECT_EQ(stats.per_language.at("python"), (LengthStats{2, 7, 3.5, 3.5, 7}));
  EXPECT_EQ(stats.per_language.at("go"), (LengthStats{1, 4, 4.0, 4.0, 4}));
  EXPECT_EQ(stats.tokenizer_id, "whitespace");
}

TEST(CorpusStats, EmptyCorpus) {
  const auto stats = corpus_stats(EvalCorpus("e"));
  EXPECT_EQ(stats.overall, LengthStats{});
  EXPECT_TRUE(stats.per_language.empty());
}

TEST(CorpusStats, JsonCarriesPerLanguageBreakdown) {
  TempDir dir;
  const auto doc = to_json(corpus_stats(ingest_copy(dir, "corpus_small.jsonl").corpus));
  EXPECT_EQ(doc.at("pair_count"), 5);
  EXPECT_EQ(doc.at("per_language").at("go").at("unique_words"), 4);
  EXPECT_EQ(doc.at("tokenizer_id"), "whitespace");
}

}  // namespace
}  // namespace commeval
