#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "commeval/corpus.hpp"
#include "commeval/error.hpp"

namespace commeval::humaneval {

// Minimum sample for a proportion estimate with finite population
// correction: n0 = z^2 p (1 - p) / e^2, MIN = ceil(n0 / (1 + (n0 - 1) / N)),
// clamped to [1, N].
struct SamplePlan {
  std::size_t population = 0;
  double z = 1.96;
  double margin = 0.05;
  double proportion = 0.5;
  double n0 = 0.0;
  std::size_t min_samples = 0;

  static SamplePlan compute(std::size_t population, double z = 1.96, double margin = 0.05,
                            double proportion = 0.5);
};

std::size_t sample_size(std::size_t population, double z = 1.96, double margin = 0.05,
                        double proportion = 0.5);

// Two-sided normal quantile, e.g. 0.95 -> 1.959964.
double z_for_confidence(double confidence);

// Simple random sample without replacement, returned sorted by id.
std::vector<std::string> draw_sample(const EvalCorpus& corpus, std::size_t size, std::uint64_t seed);

struct Snippet {
  std::string id;
  std::string code;
  std::map<std::string, std::string> comments;  // system id -> comment
};

struct Study {
  std::vector<std::string> systems;
  std::vector<Snippet> snippets;

  // Code comes from the first system's corpus; every corpus must contain
  // every sampled id.
  static Study from_corpora(std::span<const std::string> snippet_ids,
                            std::span<const std::pair<std::string, EvalCorpus>> systems);
};

enum class TaskStatus { open, rated };

// What a rater sees. Carries no system identity.
struct AnnotationTask {
  std::string task_id;
  std::string snippet_id;
  std::string code;
  std::string comment;
  std::size_t blind_slot = 0;  // 1..slot_count
  std::size_t slot_count = 0;
  std::string rater_id;
  TaskStatus status = TaskStatus::open;
  bool escalation = false;
};

nlohmann::json to_public_json(const AnnotationTask& task);

// One (snippet, system) pair under evaluation.
struct Item {
  std::string snippet_id;
  std::string system_id;
  std::size_t blind_slot = 0;
};

struct TaskRecord {
  AnnotationTask task;
  std::size_t item = 0;  // index into Assignment::items
};

struct Assignment {
  std::uint64_t seed = 0;
  std::vector<std::string> raters;
  std::vector<std::string> systems;
  std::vector<Item> items;
  std::vector<TaskRecord> tasks;
  std::size_t raters_per_item = 2;

  nlohmann::json to_json() const;
  static Assignment from_json(const nlohmann::json& doc);
};

struct AssignmentOptions {
  std::size_t raters_per_item = 2;
  std::uint64_t seed = 0;
};

// Every (snippet, system) gets `raters_per_item` distinct raters handed out
// round-robin over a seeded rater order, so loads differ by at most one.
// Blind slots are a seeded permutation of the systems per snippet.
Assignment build_assignments(const Study& study, std::span<const std::string> raters,
                             const AssignmentOptions& options = {});

struct AspectScores {
  int naturalness = 0;
  int consistency = 0;
  int usefulness = 0;

  friend bool operator==(const AspectScores&, const AspectScores&) = default;
};

bool in_range(const AspectScores& s);
// True when any aspect differs by two or more points.
bool is_conflict(const AspectScores& a, const AspectScores& b);

struct Rating {
  std::string task_id;
  std::string rater_id;
  AspectScores scores;
  std::string timestamp;
};

nlohmann::json to_json(const Rating& rating);
Rating rating_from_json(const nlohmann::json& doc);

enum class Resolution { mean_of_two, median_of_three };
std::string_view to_string(Resolution r);

struct ResolvedAspects {
  double naturalness = 0.0;
  double consistency = 0.0;
  double usefulness = 0.0;
  Resolution resolution = Resolution::mean_of_two;
};

struct PendingThird {};

// Two ratings: mean per aspect, or PendingThird when they conflict.
// Three or more: per-aspect median of the first three.
std::variant<ResolvedAspects, PendingThird> resolve_scores(std::span<const AspectScores> ratings);

struct FinalScore {
  std::string snippet_id;
  std::string system_id;
  double naturalness = 0.0;
  double consistency = 0.0;
  double usefulness = 0.0;
  double overall = 0.0;
  Resolution resolution = Resolution::mean_of_two;
};

nlohmann::json to_json(const FinalScore& score);

struct SystemSummary {
  std::string system_id;
  std::size_t items = 0;
  double naturalness = 0.0;
  double consistency = 0.0;
  double usefulness = 0.0;
  double average = 0.0;
};

class UnresolvedItems : public Error {
 public:
  explicit UnresolvedItems(std::vector<std::string> pending_tasks);
  const std::vector<std::string>& pending_tasks() const { return pending_; }

 private:
  std::vector<std::string> pending_;
};

// Per-system aspect means over snippets. Refuses (UnresolvedItems) while any
// task is still pending. Output sorted by system id.
std::vector<SystemSummary> aggregate_humaneval(std::span<const FinalScore> finals,
                                               std::span<const std::string> pending_tasks = {});

std::string summary_table(std::span<const SystemSummary> summaries);

enum class RejectReason { unknown_rater, unknown_task, wrong_rater, duplicate, out_of_range };

class RatingRejected : public Error {
 public:
  RatingRejected(RejectReason reason, const std::string& what);
  RejectReason reason() const { return reason_; }

 private:
  RejectReason reason_;
};

struct RatingAck {
  bool accepted = false;
  bool conflict_escalated = false;
  std::optional<std::string> escalation_task_id;
};

struct Progress {
  std::size_t open = 0;
  std::size_t rated = 0;
  std::size_t escalated = 0;
  std::size_t resolved = 0;
  std::size_t items = 0;
};

struct UnresolvedEntry {
  std::string snippet_id;
  std::size_t blind_slot = 0;
  std::vector<std::string> pending_tasks;
};

struct ExportResult {
  std::vector<FinalScore> finals;          // sorted by (snippet, system)
  std::vector<UnresolvedEntry> unresolved;  // sorted by (snippet, slot)
  std::optional<std::vector<SystemSummary>> summaries;  // empty while anything is unresolved

  // FinalScore lines, then one {"unresolved": ...} line per open item.
  std::string to_jsonl() const;
  std::string summary_text() const;
};

// The protocol's mutable state. Ratings are the only input; escalation
// tasks are derived from them, so replaying the same rating stream always
// reproduces the same state. Not thread-safe.
class ProtocolState {
 public:
  explicit ProtocolState(Assignment assignment);

  const Assignment& assignment() const { return assignment_; }
  bool has_rater(std::string_view rater) const;

  // Escalation tasks come first, then primary tasks in assignment order.
  // Throws RatingRejected(unknown_rater).
  std::optional<AnnotationTask> next_task(std::string_view rater) const;

  // Throws RatingRejected without changing state.
  void validate(const Rating& rating) const;
  RatingAck apply(const Rating& rating);

  Progress progress() const;
  ExportResult export_results() const;
  std::size_t ratings_applied() const { return ratings_.size(); }
  const std::vector<Rating>& ratings() const { return ratings_; }

  nlohmann::json snapshot() const;
  static ProtocolState from_snapshot(const nlohmann::json& doc);

 private:
  const TaskRecord* find_task(std::string_view task_id) const;
  std::string pick_third_rater(std::size_t item, const std::vector<std::string>& exclude) const;

  Assignment assignment_;
  std::map<std::string, std::size_t, std::less<>> task_index_;
  std::vector<std::vector<std::size_t>> item_tasks_;
  std::map<std::string, AspectScores, std::less<>> task_scores_;
  std::vector<Rating> ratings_;
  std::size_t escalations_ = 0;
};

// Append-only rating log with periodic snapshots beside it
// ("<log>.snapshot"). Opening replays snapshot + log tail.
class RatingStore {
 public:
  RatingStore(std::filesystem::path log_path, Assignment assignment,
              std::size_t snapshot_every = 100);

  ProtocolState& state() { return state_; }
  const ProtocolState& state() const { return state_; }

  // Validates, appends to the log (the commit point), then applies.
  RatingAck submit(const Rating& rating);

  static std::vector<Rating> read_log(const std::filesystem::path& log_path);
  void write_snapshot() const;

 private:
  std::filesystem::path log_path_;
  std::filesystem::path snapshot_path_;
  std::size_t snapshot_every_;
  ProtocolState state_;
};

// Rebuilds state from a log without touching it.
ProtocolState replay(const Assignment& assignment, std::span<const Rating> ratings);

}  // namespace commeval::humaneval
