#include <gtest/gtest.h>

#include <map>
#include <set>

#include "commeval/error.hpp"
#include "commeval/humaneval.hpp"
#include "fixtures.hpp"

namespace commeval::humaneval {
namespace {

using commeval::testing::TempDir;

TEST(SampleSize, PublishedPopulation) {
  EXPECT_EQ(sample_size(4985, 1.96, 0.05, 0.5), 357u);
  const auto plan = SamplePlan::compute(4985);
  EXPECT_NEAR(plan.n0, 384.16, 1e-9);
  EXPECT_EQ(plan.min_samples, 357u);
}

TEST(SampleSize, SmallAndLargePopulations) {
  EXPECT_EQ(sample_size(10), 10u);
  EXPECT_EQ(sample_size(1), 1u);
  EXPECT_EQ(sample_size(1'000'000'000), 385u);
}

TEST(SampleSize, MonotoneAndBounded) {
  std::size_t prev = 0;
  for (std::size_t n = 1; n <= 20000; n += 37) {
    const auto s = sample_size(n);
    EXPECT_GE(s, 1u);
    EXPECT_LE(s, n);
    EXPECT_GE(s, prev);
    EXPECT_LE(s, 385u);
    prev = s;
  }
}

TEST(SampleSize, RejectsBadDomain) {
  EXPECT_THROW(sample_size(0), InvalidArgument);
  EXPECT_THROW(sample_size(100, 0.0), InvalidArgument);
  EXPECT_THROW(sample_size(100, 1.96, 0.0), InvalidArgument);
  EXPECT_THROW(sample_size(100, 1.96, 1.5), InvalidArgument);
  EXPECT_THROW(sample_size(100, 1.96, 0.05, 1.2), InvalidArgument);
}

TEST(SampleSize, ConfidenceToZ) {
  EXPECT_NEAR(z_for_confidence(0.95), 1.959963984540054, 1e-12);
  EXPECT_NEAR(z_for_confidence(0.99), 2.5758293035489, 1e-9);
  EXPECT_EQ(sample_size(4985, z_for_confidence(0.95)), 357u);
  EXPECT_THROW(z_for_confidence(1.0), InvalidArgument);
}

EvalCorpus system_corpus(const std::string& tag, std::size_t n) {
  EvalCorpus c(tag);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = "s" + std::to_string(100 + i);
    c.add({id, Language::java(), "void m" + std::to_string(i) + "() {}", tag + " comment " + id, {}, Split::test});
  }
  return c;
}

TEST(DrawSample, DeterministicSortedSubset) {
  const auto corpus = system_corpus("human", 50);
  const auto a = draw_sample(corpus, 12, 7);
  EXPECT_EQ(a, draw_sample(corpus, 12, 7));
  EXPECT_NE(a, draw_sample(corpus, 12, 8));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::set<std::string>(a.begin(), a.end()).size(), 12u);
  for (const auto& id : a) EXPECT_TRUE(corpus.contains(id));
  EXPECT_THROW(draw_sample(corpus, 51, 1), InvalidArgument);
}

Study two_system_study(std::size_t snippets) {
  const std::vector<std::pair<std::string, EvalCorpus>> systems{
      {"human", system_corpus("human", snippets)}, {"gpt", system_corpus("gpt", snippets)}};
  std::vector<std::string> ids;
  for (const auto& p : systems[0].second) ids.push_back(p.id);
  return Study::from_corpora(ids, systems);
}

const std::vector<std::string> kRaters{"r1", "r2", "r3", "r4"};

TEST(Assignment, BalancedBlindDoubleRating) {
  AssignmentOptions options;
  options.seed = 42;
  const auto a = build_assignments(two_system_study(10), kRaters, options);
  EXPECT_EQ(a.items.size(), 20u);
  ASSERT_EQ(a.tasks.size(), 40u);
  std::map<std::string, std::size_t> load;
  std::map<std::size_t, std::set<std::string>> raters_of_item;
  for (const auto& t : a.tasks) {
    ++load[t.task.rater_id];
    raters_of_item[t.item].insert(t.task.rater_id);
    EXPECT_EQ(t.task.slot_count, 2u);
    EXPECT_GE(t.task.blind_slot, 1u);
    EXPECT_LE(t.task.blind_slot, 2u);
  }
  for (const auto& r : kRaters) EXPECT_EQ(load[r], 10u) << r;
  for (const auto& [item, raters] : raters_of_item) EXPECT_EQ(raters.size(), 2u);

  // Both systems occupy distinct slots for every snippet.
  std::map<std::string, std::set<std::size_t>> slots;
  for (const auto& item : a.items) slots[item.snippet_id].insert(item.blind_slot);
  for (const auto& [snippet, s] : slots) EXPECT_EQ(s, (std::set<std::size_t>{1, 2}));

  // Public task view never names a system.
  for (const auto& t : a.tasks) {
    const auto doc = to_public_json(t.task).dump();
    EXPECT_EQ(doc.find("human"), doc.find("human comment"));
    EXPECT_EQ(doc.find("system"), std::string::npos);
    EXPECT_EQ(doc.find("gpt\""), std::string::npos);
  }
}

TEST(Assignment, SeededAndSerializable) {
  AssignmentOptions options;
  options.seed = 9;
  const auto a = build_assignments(two_system_study(6), kRaters, options);
  const auto b = build_assignments(two_system_study(6), kRaters, options);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(Assignment::from_json(a.to_json()).to_json(), a.to_json());
  options.seed = 10;
  EXPECT_NE(build_assignments(two_system_study(6), kRaters, options).to_json(), a.to_json());
}

TEST(Assignment, NeedsEnoughRaters) {
  const std::vector<std::string> two{"r1", "r2"};
  EXPECT_THROW(build_assignments(two_system_study(2), two), InvalidArgument);
  const std::vector<std::string> dup{"r1", "r1", "r2"};
  EXPECT_THROW(build_assignments(two_system_study(2), dup), InvalidArgument);
}

TEST(Study, MissingIdInOneSystemThrows) {
  const std::vector<std::pair<std::string, EvalCorpus>> systems{
      {"human", system_corpus("human", 3)}, {"gpt", system_corpus("gpt", 2)}};
  const std::vector<std::string> ids{"s100", "s102"};
  EXPECT_THROW(Study::from_corpora(ids, systems), Error);
}

TEST(Conflict, TwoPointGapOnAnyAspect) {
  EXPECT_FALSE(is_conflict({3, 3, 3}, {4, 4, 4}));
  EXPECT_TRUE(is_conflict({3, 3, 3}, {3, 5, 3}));
  EXPECT_TRUE(is_conflict({2, 3, 3}, {5, 3, 3}));
  EXPECT_TRUE(in_range({1, 5, 3}));
  EXPECT_FALSE(in_range({0, 5, 3}));
  EXPECT_FALSE(in_range({1, 6, 3}));
}

TEST(Resolve, MeanMedianAndPending) {
  const std::vector<AspectScores> agree{{4, 4, 3}, {5, 4, 4}};
  const auto mean = std::get<ResolvedAspects>(resolve_scores(agree));
  EXPECT_EQ(mean.naturalness, 4.5);
  EXPECT_EQ(mean.usefulness, 3.5);
  EXPECT_EQ(mean.resolution, Resolution::mean_of_two);

  const std::vector<AspectScores> clash{{2, 4, 4}, {5, 4, 4}};
  EXPECT_TRUE(std::holds_alternative<PendingThird>(resolve_scores(clash)));

  const std::vector<AspectScores> three{{2, 4, 4}, {5, 4, 4}, {4, 3, 5}};
  const auto med = std::get<ResolvedAspects>(resolve_scores(three));
  EXPECT_EQ(med.naturalness, 4.0);
  EXPECT_EQ(med.consistency, 4.0);
  EXPECT_EQ(med.usefulness, 4.0);
  EXPECT_EQ(med.resolution, Resolution::median_of_three);
}

TEST(Aggregate, RefusesWhilePendingAndAveragesOtherwise) {
  const std::vector<FinalScore> finals{{"a", "gpt", 4, 4, 4, 4, Resolution::mean_of_two},
                                       {"b", "gpt", 2, 3, 4, 3, Resolution::mean_of_two},
                                       {"a", "human", 3, 3, 3, 3, Resolution::median_of_three}};
  const std::vector<std::string> pending{"e000000"};
  EXPECT_THROW(aggregate_humaneval(finals, pending), UnresolvedItems);
  const auto s = aggregate_humaneval(finals);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].system_id, "gpt");
  EXPECT_EQ(s[0].items, 2u);
  EXPECT_EQ(s[0].naturalness, 3.0);
  EXPECT_EQ(s[0].consistency, 3.5);
  EXPECT_EQ(s[1].system_id, "human");
  EXPECT_FALSE(summary_table(s).empty());
}

Assignment small_assignment() {
  AssignmentOptions options;
  options.seed = 3;
  return build_assignments(two_system_study(2), kRaters, options);
}

Rating rate(const AnnotationTask& t, AspectScores s) { return {t.task_id, t.rater_id, s, "2024-01-01T00:00:00Z"}; }

TEST(Protocol, RejectsInOrder) {
  ProtocolState state(small_assignment());
  const auto& t = state.assignment().tasks[0].task;
  auto reason = [&](const Rating& r) {
    try {
      state.validate(r);
    } catch (const RatingRejected& e) {
      return static_cast<int>(e.reason());
    }
    return -1;
  };
  EXPECT_EQ(reason({t.task_id, "nobody", {3, 3, 3}, ""}), static_cast<int>(RejectReason::unknown_rater));
  EXPECT_EQ(reason({"t999999", t.rater_id, {3, 3, 3}, ""}), static_cast<int>(RejectReason::unknown_task));
  const auto other = t.rater_id == "r1" ? "r2" : "r1";
  EXPECT_EQ(reason({t.task_id, other, {3, 3, 3}, ""}), static_cast<int>(RejectReason::wrong_rater));
  EXPECT_EQ(reason({t.task_id, t.rater_id, {3, 0, 3}, ""}), static_cast<int>(RejectReason::out_of_range));
  state.apply(rate(t, {3, 3, 3}));
  EXPECT_EQ(reason(rate(t, {3, 3, 3})), static_cast<int>(RejectReason::duplicate));
  EXPECT_THROW(state.next_task("nobody"), RatingRejected);
}

// Rates every open primary task with `scores_for(item)`, rater by rater.
template <typename Fn>
void rate_all_primaries(ProtocolState& state, Fn&& scores_for) {
  for (const auto& rec : state.assignment().tasks) state.apply(rate(rec.task, scores_for(rec)));
}

TEST(Protocol, ConflictEscalatesToThirdRaterAndResolvesByMedian) {
  ProtocolState state(small_assignment());
  const std::size_t conflicted = 0;
  std::map<std::size_t, int> seen;
  std::optional<std::string> escalation;
  // apply() appends escalation tasks, so walk a copy of the primaries
  const auto tasks = state.assignment().tasks;
  for (const auto& rec : tasks) {
    AspectScores s{4, 4, 4};
    if (rec.item == conflicted) s.naturalness = seen[rec.item]++ == 0 ? 2 : 5;
    const auto ack = state.apply(rate(rec.task, s));
    if (ack.conflict_escalated) escalation = ack.escalation_task_id;
  }
  ASSERT_TRUE(escalation);
  EXPECT_EQ(*escalation, "e000000");
  EXPECT_EQ(state.progress().escalated, 1u);

  // Nothing aggregates until the third rating arrives.
  const auto before = state.export_results();
  EXPECT_FALSE(before.summaries);
  ASSERT_EQ(before.unresolved.size(), 1u);

  std::set<std::string> primaries;
  for (const auto& rec : state.assignment().tasks) {
    if (rec.item == conflicted && !rec.task.escalation) primaries.insert(rec.task.rater_id);
  }
  std::optional<AnnotationTask> third;
  std::string third_rater;
  for (const auto& r : kRaters) {
    auto t = state.next_task(r);
    if (t && t->escalation) {
      third = t;
      third_rater = r;
    }
  }
  ASSERT_TRUE(third);
  EXPECT_FALSE(primaries.contains(third_rater));
  EXPECT_EQ(third->task_id, *escalation);

  state.apply(rate(*third, {3, 4, 4}));
  const auto after = state.export_results();
  ASSERT_TRUE(after.summaries);
  EXPECT_TRUE(after.unresolved.empty());
  const auto& item = state.assignment().items[conflicted];
  bool found = false;
  for (const auto& f : after.finals) {
    if (f.snippet_id == item.snippet_id && f.system_id == item.system_id) {
      found = true;
      EXPECT_EQ(f.naturalness, 3.0);  // median of 2, 5, 3
      EXPECT_EQ(f.resolution, Resolution::median_of_three);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Protocol, SnapshotRoundTrip) {
  ProtocolState state(small_assignment());
  rate_all_primaries(state, [](const TaskRecord&) { return AspectScores{4, 3, 4}; });
  const auto restored = ProtocolState::from_snapshot(state.snapshot());
  EXPECT_EQ(restored.export_results().to_jsonl(), state.export_results().to_jsonl());
  EXPECT_EQ(restored.ratings_applied(), state.ratings_applied());
}

TEST(Protocol, NextTaskDrainsQueue) {
  ProtocolState state(small_assignment());
  std::size_t served = 0;
  for (const auto& r : kRaters) {
    while (auto t = state.next_task(r)) {
      state.apply(rate(*t, {4, 4, 4}));
      ++served;
    }
  }
  EXPECT_EQ(served, state.assignment().tasks.size());
  EXPECT_EQ(state.progress().open, 0u);
  EXPECT_EQ(state.progress().resolved, state.assignment().items.size());
}

TEST(RatingStore, LogIsCommitPointAndReplays) {
  TempDir dir;
  const auto assignment = small_assignment();
  std::string first_export;
  {
    RatingStore store(dir / "ratings.log", assignment, 3);
    for (const auto& rec : assignment.tasks) store.submit(rate(rec.task, {4, 4, 4}));
    first_export = store.state().export_results().to_jsonl();
    EXPECT_THROW(store.submit(rate(assignment.tasks[0].task, {4, 4, 4})), RatingRejected);
  }
  EXPECT_EQ(RatingStore::read_log(dir / "ratings.log").size(), assignment.tasks.size());
  EXPECT_TRUE(std::filesystem::exists(dir / "ratings.log.snapshot"));

  // Reopen from snapshot + tail.
  RatingStore reopened(dir / "ratings.log", assignment, 3);
  EXPECT_EQ(reopened.state().export_results().to_jsonl(), first_export);

  // A lost snapshot falls back to a full replay.
  std::filesystem::remove(dir / "ratings.log.snapshot");
  RatingStore replayed(dir / "ratings.log", assignment, 3);
  EXPECT_EQ(replayed.state().export_results().to_jsonl(), first_export);

  const auto log = RatingStore::read_log(dir / "ratings.log");
  EXPECT_EQ(replay(assignment, log).export_results().to_jsonl(), first_export);
}

}  // namespace
}  // namespace commeval::humaneval
