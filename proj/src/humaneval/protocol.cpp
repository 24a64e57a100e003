#include <fmt/format.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <unistd.h>

#include "commeval/humaneval.hpp"
#include "commeval/jsonl.hpp"

namespace commeval::humaneval {

using nlohmann::json;

RatingRejected::RatingRejected(RejectReason reason, const std::string& what)
    : Error(what), reason_(reason) {}

namespace {

bool any_conflict(const std::vector<AspectScores>& scores) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = i + 1; j < scores.size(); ++j) {
      if (is_conflict(scores[i], scores[j])) return true;
    }
  }
  return false;
}

double median_of(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
}

double mean_of(const std::vector<int>& v) {
  double sum = 0.0;
  for (int x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

ResolvedAspects combine(const std::vector<AspectScores>& scores, Resolution how) {
  if (scores.size() == 2 || (scores.size() == 3 && how == Resolution::median_of_three)) {
    return std::get<ResolvedAspects>(resolve_scores(scores));
  }
  std::vector<int> nat;
  std::vector<int> con;
  std::vector<int> use;
  for (const auto& s : scores) {
    nat.push_back(s.naturalness);
    con.push_back(s.consistency);
    use.push_back(s.usefulness);
  }
  if (how == Resolution::mean_of_two) return {mean_of(nat), mean_of(con), mean_of(use), how};
  return {median_of(nat), median_of(con), median_of(use), how};
}

std::string escalation_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "e%06zu", index);
  return buf;
}

}  // namespace

ProtocolState::ProtocolState(Assignment assignment) : assignment_(std::move(assignment)) {
  const std::set<std::string> raters(assignment_.raters.begin(), assignment_.raters.end());
  item_tasks_.resize(assignment_.items.size());
  for (std::size_t i = 0; i < assignment_.tasks.size(); ++i) {
    const auto& rec = assignment_.tasks[i];
    if (!raters.contains(rec.task.rater_id)) {
      throw InvalidArgument("task " + rec.task.task_id + " assigned to unregistered rater");
    }
    if (!task_index_.emplace(rec.task.task_id, i).second) {
      throw InvalidArgument("duplicate task id " + rec.task.task_id);
    }
    item_tasks_.at(rec.item).push_back(i);
    if (rec.task.escalation) ++escalations_;
  }
}

bool ProtocolState::has_rater(std::string_view rater) const {
  return std::find(assignment_.raters.begin(), assignment_.raters.end(), rater) !=
         assignment_.raters.end();
}

const TaskRecord* ProtocolState::find_task(std::string_view task_id) const {
  auto it = task_index_.find(task_id);
  return it == task_index_.end() ? nullptr : &assignment_.tasks[it->second];
}

std::optional<AnnotationTask> ProtocolState::next_task(std::string_view rater) const {
  if (!has_rater(rater)) {
    throw RatingRejected(RejectReason::unknown_rater, "unknown rater '" + std::string(rater) + "'");
  }
  for (bool escalation : {true, false}) {
    for (const auto& rec : assignment_.tasks) {
      if (rec.task.escalation != escalation || rec.task.rater_id != rater) continue;
      if (task_scores_.contains(rec.task.task_id)) continue;
      return rec.task;
    }
  }
  return std::nullopt;
}

void ProtocolState::validate(const Rating& rating) const {
  if (!has_rater(rating.rater_id)) {
    throw RatingRejected(RejectReason::unknown_rater, "unknown rater '" + rating.rater_id + "'");
  }
  const auto* rec = find_task(rating.task_id);
  if (!rec) throw RatingRejected(RejectReason::unknown_task, "unknown task '" + rating.task_id + "'");
  if (rec->task.rater_id != rating.rater_id) {
    throw RatingRejected(RejectReason::wrong_rater,
                         "task " + rating.task_id + " is not assigned to " + rating.rater_id);
  }
  if (task_scores_.contains(rating.task_id)) {
    throw RatingRejected(RejectReason::duplicate, "task " + rating.task_id + " already rated");
  }
  if (!in_range(rating.scores)) {
    throw RatingRejected(RejectReason::out_of_range, "scores must be integers in 1..5");
  }
}

std::string ProtocolState::pick_third_rater(std::size_t item,
                                            const std::vector<std::string>& exclude) const {
  std::vector<std::string> eligible;
  for (const auto& r : assignment_.raters) {
    if (std::find(exclude.begin(), exclude.end(), r) == exclude.end()) eligible.push_back(r);
  }
  if (eligible.empty()) throw Error("no rater left to resolve a conflict");
  std::mt19937_64 rng(assignment_.seed ^ (0xD1B54A32D192ED03ULL * (item + 1)));
  return eligible[static_cast<std::size_t>(rng() % eligible.size())];
}

RatingAck ProtocolState::apply(const Rating& rating) {
  validate(rating);
  const auto task_pos = task_index_.find(rating.task_id)->second;
  task_scores_.emplace(rating.task_id, rating.scores);
  ratings_.push_back(rating);

  RatingAck ack;
  ack.accepted = true;
  const auto& rec = assignment_.tasks[task_pos];
  if (rec.task.escalation) return ack;

  const std::size_t item = rec.item;
  std::vector<AspectScores> primaries;
  std::vector<std::string> raters;
  for (auto t : item_tasks_[item]) {
    const auto& other = assignment_.tasks[t];
    if (other.task.escalation) return ack;  // already escalated
    auto it = task_scores_.find(other.task.task_id);
    if (it == task_scores_.end()) return ack;  // pair incomplete
    primaries.push_back(it->second);
    raters.push_back(other.task.rater_id);
  }
  if (!any_conflict(primaries)) return ack;

  TaskRecord third = rec;
  third.task.task_id = escalation_id(escalations_++);
  third.task.rater_id = pick_third_rater(item, raters);
  third.task.escalation = true;
  third.task.status = TaskStatus::open;
  task_index_.emplace(third.task.task_id, assignment_.tasks.size());
  item_tasks_[item].push_back(assignment_.tasks.size());
  ack.conflict_escalated = true;
  ack.escalation_task_id = third.task.task_id;
  assignment_.tasks.push_back(std::move(third));
  return ack;
}

Progress ProtocolState::progress() const {
  Progress p;
  p.items = assignment_.items.size();
  p.escalated = escalations_;
  for (const auto& rec : assignment_.tasks) {
    if (task_scores_.contains(rec.task.task_id)) {
      ++p.rated;
    } else {
      ++p.open;
    }
  }
  p.resolved = export_results().finals.size();
  return p;
}

ExportResult ProtocolState::export_results() const {
  ExportResult out;
  for (std::size_t item = 0; item < assignment_.items.size(); ++item) {
    const auto& info = assignment_.items[item];
    std::vector<AspectScores> primaries;
    std::optional<AspectScores> third;
    std::vector<std::string> pending;
    bool escalated = false;
    for (auto t : item_tasks_[item]) {
      const auto& task = assignment_.tasks[t].task;
      auto it = task_scores_.find(task.task_id);
      if (task.escalation) {
        escalated = true;
        if (it != task_scores_.end()) {
          third = it->second;
        } else {
          pending.push_back(task.task_id);
        }
      } else if (it != task_scores_.end()) {
        primaries.push_back(it->second);
      } else {
        pending.push_back(task.task_id);
      }
    }
    if (!pending.empty() || primaries.size() < 2 || (!escalated && any_conflict(primaries))) {
      out.unresolved.push_back({info.snippet_id, info.blind_slot, std::move(pending)});
      continue;
    }
    ResolvedAspects resolved;
    if (escalated) {
      primaries.push_back(*third);
      resolved = combine(primaries, Resolution::median_of_three);
    } else {
      resolved = combine(primaries, Resolution::mean_of_two);
    }
    out.finals.push_back({info.snippet_id, info.system_id, resolved.naturalness,
                          resolved.consistency, resolved.usefulness,
                          (resolved.naturalness + resolved.consistency + resolved.usefulness) / 3.0,
                          resolved.resolution});
  }
  std::sort(out.finals.begin(), out.finals.end(), [](const FinalScore& a, const FinalScore& b) {
    return std::tie(a.snippet_id, a.system_id) < std::tie(b.snippet_id, b.system_id);
  });
  std::sort(out.unresolved.begin(), out.unresolved.end(),
            [](const UnresolvedEntry& a, const UnresolvedEntry& b) {
              return std::tie(a.snippet_id, a.blind_slot) < std::tie(b.snippet_id, b.blind_slot);
            });
  if (out.unresolved.empty()) out.summaries = aggregate_humaneval(out.finals);
  return out;
}

std::string ExportResult::to_jsonl() const {
  std::string body;
  for (const auto& f : finals) body += jsonl::dump_line(to_json(f));
  for (const auto& u : unresolved) {
    body += jsonl::dump_line({{"unresolved",
                               {{"snippet_id", u.snippet_id},
                                {"blind_slot", u.blind_slot},
                                {"pending_tasks", u.pending_tasks}}}});
  }
  return body;
}

std::string ExportResult::summary_text() const {
  std::string out = fmt::format("resolved items: {}\nunresolved items: {}\n", finals.size(),
                                unresolved.size());
  if (summaries) {
    out += summary_table(*summaries);
  } else {
    std::vector<std::string> pending;
    for (const auto& u : unresolved) pending.insert(pending.end(), u.pending_tasks.begin(), u.pending_tasks.end());
    out += UnresolvedItems(std::move(pending)).what();
    out += "\n";
  }
  return out;
}

json ProtocolState::snapshot() const {
  json ratings = json::array();
  for (const auto& r : ratings_) ratings.push_back(to_json(r));
  return {{"format", 1}, {"assignment", assignment_.to_json()}, {"ratings", std::move(ratings)}};
}

ProtocolState ProtocolState::from_snapshot(const json& doc) {
  ProtocolState state(Assignment::from_json(doc.at("assignment")));
  for (const auto& r : doc.at("ratings")) {
    auto rating = rating_from_json(r);
    state.validate(rating);
    state.task_scores_.emplace(rating.task_id, rating.scores);
    state.ratings_.push_back(std::move(rating));
  }
  return state;
}

ProtocolState replay(const Assignment& assignment, std::span<const Rating> ratings) {
  ProtocolState state(assignment);
  for (const auto& r : ratings) state.apply(r);
  return state;
}

namespace {

std::filesystem::path snapshot_path_for(const std::filesystem::path& log) {
  auto p = log;
  p += ".snapshot";
  return p;
}

std::size_t primary_task_count(const Assignment& a) {
  return static_cast<std::size_t>(std::count_if(a.tasks.begin(), a.tasks.end(), [](const TaskRecord& t) {
    return !t.task.escalation;
  }));
}

ProtocolState open_state(const std::filesystem::path& log, const std::filesystem::path& snapshot,
                         const Assignment& assignment) {
  const auto ratings = RatingStore::read_log(log);
  if (std::filesystem::exists(snapshot)) {
    try {
      std::ifstream in(snapshot);
      const auto doc = json::parse(in);
      auto state = ProtocolState::from_snapshot(doc);
      const bool same_study = state.assignment().seed == assignment.seed &&
                              primary_task_count(state.assignment()) == primary_task_count(assignment);
      if (same_study && state.ratings_applied() <= ratings.size()) {
        for (std::size_t i = state.ratings_applied(); i < ratings.size(); ++i) state.apply(ratings[i]);
        return state;
      }
    } catch (const std::exception&) {
      // Fall through to a full replay; the log is authoritative.
    }
  }
  return replay(assignment, ratings);
}

}  // namespace

RatingStore::RatingStore(std::filesystem::path log_path, Assignment assignment,
                         std::size_t snapshot_every)
    : log_path_(std::move(log_path)),
      snapshot_path_(snapshot_path_for(log_path_)),
      snapshot_every_(snapshot_every),
      state_(open_state(log_path_, snapshot_path_, assignment)) {}

std::vector<Rating> RatingStore::read_log(const std::filesystem::path& log_path) {
  std::vector<Rating> out;
  if (!std::filesystem::exists(log_path)) return out;
  for (const auto& doc : jsonl::read_all(log_path)) out.push_back(rating_from_json(doc));
  return out;
}

RatingAck RatingStore::submit(const Rating& rating) {
  state_.validate(rating);
  const auto line = jsonl::dump_line(to_json(rating));
  std::FILE* f = std::fopen(log_path_.c_str(), "ab");
  if (!f) throw IoError("cannot append to " + log_path_.string());
  const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() && std::fflush(f) == 0 &&
                  ::fsync(::fileno(f)) == 0;
  std::fclose(f);
  if (!ok) throw IoError("short write to " + log_path_.string());
  auto ack = state_.apply(rating);
  if (snapshot_every_ > 0 && state_.ratings_applied() % snapshot_every_ == 0) write_snapshot();
  return ack;
}

void RatingStore::write_snapshot() const {
  jsonl::write_file_atomic(snapshot_path_, state_.snapshot().dump() + "\n");
}

}  // namespace commeval::humaneval
