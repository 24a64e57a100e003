#include <cstdio>
#include <set>

#include "commeval/humaneval.hpp"
#include "commeval/semantic.hpp"

namespace commeval::humaneval {

using nlohmann::json;

Study Study::from_corpora(std::span<const std::string> snippet_ids,
                          std::span<const std::pair<std::string, EvalCorpus>> systems) {
  if (systems.empty()) throw InvalidArgument("study needs at least one system");
  Study study;
  std::set<std::string> seen;
  for (const auto& [name, corpus] : systems) {
    if (!seen.insert(name).second) throw InvalidArgument("duplicate system '" + name + "'");
    study.systems.push_back(name);
  }
  for (const auto& id : snippet_ids) {
    Snippet snippet;
    snippet.id = id;
    for (const auto& [name, corpus] : systems) {
      const auto* pair = corpus.find(id);
      if (!pair) throw InvalidArgument("system '" + name + "' has no pair '" + id + "'");
      if (snippet.code.empty()) snippet.code = pair->code;
      snippet.comments.emplace(name, pair->comment);
    }
    study.snippets.push_back(std::move(snippet));
  }
  return study;
}

json to_public_json(const AnnotationTask& t) {
  return {{"task_id", t.task_id},
          {"snippet_id", t.snippet_id},
          {"code", t.code},
          {"comment", t.comment},
          {"blind_slot", t.blind_slot},
          {"slot_count", t.slot_count},
          {"rater_id", t.rater_id},
          {"status", t.status == TaskStatus::open ? "open" : "rated"},
          {"escalation", t.escalation}};
}

namespace {

std::string task_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%06zu", index + 1);
  return buf;
}

}  // namespace

Assignment build_assignments(const Study& study, std::span<const std::string> raters,
                             const AssignmentOptions& options) {
  if (study.systems.empty()) throw InvalidArgument("assignment: systems must be non-empty");
  if (options.raters_per_item < 1) throw InvalidArgument("assignment: raters_per_item must be >= 1");
  if (raters.size() < std::max<std::size_t>(3, options.raters_per_item + 1)) {
    throw InvalidArgument("assignment: need at least " +
                          std::to_string(std::max<std::size_t>(3, options.raters_per_item + 1)) +
                          " raters (one held in reserve for conflicts), got " +
                          std::to_string(raters.size()));
  }
  std::set<std::string> distinct(raters.begin(), raters.end());
  if (distinct.size() != raters.size()) throw InvalidArgument("assignment: duplicate rater id");

  Assignment a;
  a.seed = options.seed;
  a.raters.assign(raters.begin(), raters.end());
  a.systems = study.systems;
  a.raters_per_item = options.raters_per_item;

  const auto rater_order = seeded_permutation(raters.size(), options.seed);
  std::size_t cursor = 0;
  const std::size_t k = study.systems.size();
  for (std::size_t s = 0; s < study.snippets.size(); ++s) {
    const auto& snippet = study.snippets[s];
    // Distinct stream per snippet so adding snippets does not reshuffle earlier ones.
    const auto slots = seeded_permutation(k, options.seed ^ (0x9E3779B97F4A7C15ULL * (s + 1)));
    for (std::size_t slot = 0; slot < k; ++slot) {
      const auto& system = study.systems[slots[slot]];
      auto comment = snippet.comments.find(system);
      if (comment == snippet.comments.end()) {
        throw InvalidArgument("snippet '" + snippet.id + "' has no comment from '" + system + "'");
      }
      const std::size_t item = a.items.size();
      a.items.push_back({snippet.id, system, slot + 1});
      for (std::size_t r = 0; r < options.raters_per_item; ++r) {
        AnnotationTask t;
        t.task_id = task_id_for(a.tasks.size());
        t.snippet_id = snippet.id;
        t.code = snippet.code;
        t.comment = comment->second;
        t.blind_slot = slot + 1;
        t.slot_count = k;
        t.rater_id = raters[rater_order[cursor++ % raters.size()]];
        a.tasks.push_back({std::move(t), item});
      }
    }
  }
  return a;
}

json Assignment::to_json() const {
  json items_json = json::array();
  for (const auto& it : items) {
    items_json.push_back({{"snippet_id", it.snippet_id}, {"system_id", it.system_id},
                          {"blind_slot", it.blind_slot}});
  }
  json tasks_json = json::array();
  for (const auto& rec : tasks) {
    auto t = to_public_json(rec.task);
    t.erase("status");
    t["item"] = rec.item;
    tasks_json.push_back(std::move(t));
  }
  return {{"seed", seed},
          {"raters", raters},
          {"systems", systems},
          {"raters_per_item", raters_per_item},
          {"items", std::move(items_json)},
          {"tasks", std::move(tasks_json)}};
}

Assignment Assignment::from_json(const json& doc) {
  Assignment a;
  try {
    a.seed = doc.at("seed").get<std::uint64_t>();
    a.raters = doc.at("raters").get<std::vector<std::string>>();
    a.systems = doc.at("systems").get<std::vector<std::string>>();
    a.raters_per_item = doc.value("raters_per_item", std::size_t{2});
    for (const auto& it : doc.at("items")) {
      a.items.push_back({it.at("snippet_id").get<std::string>(), it.at("system_id").get<std::string>(),
                         it.at("blind_slot").get<std::size_t>()});
    }
    for (const auto& t : doc.at("tasks")) {
      TaskRecord rec;
      rec.item = t.at("item").get<std::size_t>();
      if (rec.item >= a.items.size()) throw InvalidArgument("task refers to unknown item");
      rec.task.task_id = t.at("task_id").get<std::string>();
      rec.task.snippet_id = t.at("snippet_id").get<std::string>();
      rec.task.code = t.at("code").get<std::string>();
      rec.task.comment = t.at("comment").get<std::string>();
      rec.task.blind_slot = t.at("blind_slot").get<std::size_t>();
      rec.task.slot_count = t.at("slot_count").get<std::size_t>();
      rec.task.rater_id = t.at("rater_id").get<std::string>();
      rec.task.escalation = t.value("escalation", false);
      a.tasks.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed assignment: ") + e.what());
  }
  return a;
}

}  // namespace commeval::humaneval
