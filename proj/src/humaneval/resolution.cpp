#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "commeval/humaneval.hpp"

namespace commeval::humaneval {

using nlohmann::json;

bool in_range(const AspectScores& s) {
  auto ok = [](int v) { return v >= 1 && v <= 5; };
  return ok(s.naturalness) && ok(s.consistency) && ok(s.usefulness);
}

bool is_conflict(const AspectScores& a, const AspectScores& b) {
  return std::abs(a.naturalness - b.naturalness) >= 2 ||
         std::abs(a.consistency - b.consistency) >= 2 || std::abs(a.usefulness - b.usefulness) >= 2;
}

json to_json(const Rating& r) {
  json out{{"task_id", r.task_id},
           {"rater_id", r.rater_id},
           {"naturalness", r.scores.naturalness},
           {"consistency", r.scores.consistency},
           {"usefulness", r.scores.usefulness}};
  if (!r.timestamp.empty()) out["timestamp"] = r.timestamp;
  return out;
}

Rating rating_from_json(const json& doc) {
  Rating r;
  try {
    r.task_id = doc.at("task_id").get<std::string>();
    r.rater_id = doc.at("rater_id").get<std::string>();
    r.scores.naturalness = doc.at("naturalness").get<int>();
    r.scores.consistency = doc.at("consistency").get<int>();
    r.scores.usefulness = doc.at("usefulness").get<int>();
    r.timestamp = doc.value("timestamp", std::string());
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed rating: ") + e.what());
  }
  return r;
}

std::string_view to_string(Resolution r) {
  return r == Resolution::mean_of_two ? "mean_of_two" : "median_of_three";
}

namespace {

double median3(int a, int b, int c) {
  return static_cast<double>(std::max(std::min(a, b), std::min(std::max(a, b), c)));
}

}  // namespace

std::variant<ResolvedAspects, PendingThird> resolve_scores(std::span<const AspectScores> ratings) {
  if (ratings.size() < 2) throw InvalidArgument("resolve_scores: need at least two ratings");
  const auto& a = ratings[0];
  const auto& b = ratings[1];
  if (ratings.size() == 2) {
    if (is_conflict(a, b)) return PendingThird{};
    return ResolvedAspects{(a.naturalness + b.naturalness) / 2.0,
                           (a.consistency + b.consistency) / 2.0,
                           (a.usefulness + b.usefulness) / 2.0, Resolution::mean_of_two};
  }
  const auto& c = ratings[2];
  return ResolvedAspects{median3(a.naturalness, b.naturalness, c.naturalness),
                         median3(a.consistency, b.consistency, c.consistency),
                         median3(a.usefulness, b.usefulness, c.usefulness),
                         Resolution::median_of_three};
}

json to_json(const FinalScore& f) {
  return {{"snippet_id", f.snippet_id},
          {"system_id", f.system_id},
          {"naturalness", f.naturalness},
          {"consistency", f.consistency},
          {"usefulness", f.usefulness},
          {"overall", f.overall},
          {"resolution", to_string(f.resolution)}};
}

UnresolvedItems::UnresolvedItems(std::vector<std::string> pending_tasks)
    : Error([&] {
        std::string msg = "aggregation refused: " + std::to_string(pending_tasks.size()) +
                          " task(s) unresolved:";
        for (std::size_t i = 0; i < pending_tasks.size() && i < 20; ++i) msg += " " + pending_tasks[i];
        if (pending_tasks.size() > 20) msg += " ...";
        return msg;
      }()),
      pending_(std::move(pending_tasks)) {}

std::vector<SystemSummary> aggregate_humaneval(std::span<const FinalScore> finals,
                                               std::span<const std::string> pending_tasks) {
  if (!pending_tasks.empty()) {
    throw UnresolvedItems(std::vector<std::string>(pending_tasks.begin(), pending_tasks.end()));
  }
  std::map<std::string, SystemSummary> by_system;
  for (const auto& f : finals) {
    auto& s = by_system[f.system_id];
    s.system_id = f.system_id;
    ++s.items;
    s.naturalness += f.naturalness;
    s.consistency += f.consistency;
    s.usefulness += f.usefulness;
  }
  std::vector<SystemSummary> out;
  for (auto& [id, s] : by_system) {
    const auto n = static_cast<double>(s.items);
    s.naturalness /= n;
    s.consistency /= n;
    s.usefulness /= n;
    s.average = (s.naturalness + s.consistency + s.usefulness) / 3.0;
    out.push_back(s);
  }
  return out;
}

std::string summary_table(std::span<const SystemSummary> summaries) {
  std::string out = fmt::format("{:<24}{:>7}{:>13}{:>13}{:>12}{:>10}\n", "system", "items",
                                "naturalness", "consistency", "usefulness", "average");
  for (const auto& s : summaries) {
    out += fmt::format("{:<24}{:>7}{:>13.2f}{:>13.2f}{:>12.2f}{:>10.2f}\n", s.system_id, s.items,
                       s.naturalness, s.consistency, s.usefulness, s.average);
  }
  return out;
}

}  // namespace commeval::humaneval
