// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "commeval/ccid.hpp"
#include "commeval/corpus.hpp"
#include "commeval/humaneval.hpp"
#include "commeval/ngram.hpp"
#include "commeval/rebuild.hpp"
#include "commeval/semantic.hpp"
#include "commeval/tokenize.hpp"
#include "fixtures.hpp"
#include "mock_server.hpp"

namespace {

using namespace commeval;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int failures = 0;

void criterion(int number, const char* title, double limit_seconds, const std::function<void(Check&)>& body) {
  Check check;
  const auto start = Clock::now();
  try {
    body(check);
  } catch (const std::exception& e) {
    check.expect(false, std::string("exception: ") + e.what());
  }
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  if (limit_seconds > 0 && elapsed >= limit_seconds) {
    check.expect(false, "took " + std::to_string(elapsed) + " s, limit " + std::to_string(limit_seconds) + " s");
  }
  if (!check.ok) ++failures;
  std::printf("%s [%d] %s (%.3f s)%s%s\n", check.ok ? "PASS" : "FAIL", number, title, elapsed,
              check.detail.empty() ? "" : ": ", check.detail.c_str());
  std::fflush(stdout);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// 1
void sample_size_check(Check& c) {
  const auto start = Clock::now();
  const auto n = humaneval::sample_size(4985, 1.96, 0.05, 0.5);
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  c.expect(n == 357, "got " + std::to_string(n));
  c.expect(elapsed < 1e-3, "single call took " + fmt_double(elapsed) + " s");
}

// 2
void prompt_check(Check& c) {
  const std::string code = "public int add(int a, int b) {\n  return a + b;\n}";
  const auto prompt = rebuild::render_prompt(Language::java(), code);
  const std::string expected =
      "You are an expert Java programmer. For the given Java method, please write a one-sentence "
      "description as comment: " + code;
  c.expect(prompt == expected, "rendered prompt differs: " + prompt);

  testing::MockServer server;
  server.on_post("/v1/chat/completions", [](const json& body) {
    return testing::MockReply::json(testing::fake_completion(body.at("messages")[0].at("content")));
  });
  server.start();
  rebuild::EndpointConfig endpoint;
  endpoint.base_url = server.url();
  rebuild::OpenAiChatClient client(endpoint);
  client.complete(rebuild::ChatRequest::from(rebuild::GenerationParams{}, prompt));
  const auto captured = server.captured("/v1/chat/completions");
  c.expect(captured.size() == 1, "expected one request");
  if (captured.empty()) return;
  const auto& body = captured[0];
  c.expect(body.at("messages")[0].at("content") == expected, "wire prompt differs");
  for (const auto* key : {"max_tokens", "top_p", "temperature"}) {
    c.expect(body.contains(key) && body.at(key).is_number_integer(), std::string(key) + " not an integer");
  }
  c.expect(body.at("max_tokens") == 30, "max_tokens != 30");
  c.expect(body.at("top_p") == 1, "top_p != 1");
  c.expect(body.at("temperature") == 1, "temperature != 1");
}

// 3
void ngram_oracle_check(Check& c) {
  const auto cases = json::parse(testing::read_file(testing::fixture("ngram_random_pairs.json")));
  c.expect(cases.size() >= 50, "fewer than 50 oracle cases");
  std::size_t index = 0;
  for (const auto& k : cases) {
    const auto cand = make_tokens(k.at("candidate").get<std::vector<std::string>>());
    const auto ref = make_tokens(k.at("reference").get<std::vector<std::string>>());
    const std::pair<const char*, double> got[] = {
        {"bleu_none", bleu(cand, ref, 4, BleuSmoothing::none)},
        {"bleu_add_one", bleu(cand, ref, 4, BleuSmoothing::add_one)},
        {"rouge_l", rouge_l(cand, ref)},
        {"meteor", meteor(cand, ref)},
    };
    for (const auto& [name, value] : got) {
      const double want = k.at(name).get<double>();
      c.expect(std::abs(value - want) <= 1e-9,
               "case " + std::to_string(index) + " " + name + ": " + fmt_double(value) + " vs " + fmt_double(want));
    }
    ++index;
  }
  std::mt19937_64 rng(1);
  for (std::size_t m = 4; m <= 20; ++m) {
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < m; ++i) toks.push_back("t" + std::to_string(rng() % 1000000));
    const auto s = make_tokens(toks);
    c.expect(bleu(s, s, 4, BleuSmoothing::none) == 1.0, "BLEU identity");
    c.expect(rouge_l(s, s) == 1.0, "ROUGE-L identity");
    const auto al = meteor_align(s.tokens, s.tokens);
    const double want = 1.0 - 0.5 * std::pow(static_cast<double>(al.matches), -3.0);
    c.expect(al.matches == m && meteor(s, s) == want, "METEOR identity at m=" + std::to_string(m));
  }
}

EmbeddingMatrix rows_of(const std::vector<std::vector<float>>& rows) {
  EmbeddingMatrix m;
  for (std::size_t i = 0; i < rows.size(); ++i) m.push_back("r" + std::to_string(i), rows[i]);
  return m;
}

// 4
void mrr_check(Check& c) {
  const std::size_t n = 50;
  std::vector<std::vector<float>> eye, ring;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> e(n, 0.0f), r(n, 0.0f);
    e[i] = 1.0f;
    r[(i + 1) % n] = 0.8f;
    r[i] = 0.6f;
    eye.push_back(e);
    ring.push_back(r);
  }
  c.expect(mrr_from_embeddings(rows_of(eye), rows_of(eye)).mrr == 1.0, "perfect retrieval != 1");
  c.expect(mrr_from_embeddings(rows_of(ring), rows_of(eye)).mrr == 0.5, "uniform rank 2 != 0.5");

  const std::vector<std::vector<float>> codes{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  const std::vector<std::vector<float>> queries{{0.9f, 0.1f, 0.1f, 0.1f}, {0.2f, 0.5f, 0.9f, 0.1f}, {0.6f, 0.7f, 0.2f, 0.8f}};
  std::vector<std::size_t> ranks;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<double> sims;
    for (const auto& code : codes) sims.push_back(cosine_similarity(queries[q], code));
    ranks.push_back(rank_of_target(sims, q));
  }
  c.expect(ranks == std::vector<std::size_t>{1, 2, 4}, "rank construction");
  c.expect(mean_reciprocal_rank(ranks) == 7.0 / 12.0, "ranks {1,2,4} != 7/12");

  std::mt19937_64 rng(2024);
  std::normal_distribution<float> d;
  std::vector<std::vector<float>> qs, cs;
  for (std::size_t i = 0; i < 1000; ++i) {
    std::vector<float> code(32), q(32);
    for (auto& x : code) x = d(rng);
    for (std::size_t k = 0; k < 32; ++k) q[k] = code[k] + 2.0f * d(rng);
    cs.push_back(code);
    qs.push_back(q);
  }
  const auto Q = rows_of(qs);
  const auto C = rows_of(cs);
  MrrOptions options;
  options.batch_size = 1000;
  const double base = mrr_from_embeddings(Q, C, options).mrr;
  c.expect(base > 0.0 && base < 1.0, "degenerate synthetic corpus");
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    options.seed = seed;
    const double shuffled = mrr_from_embeddings(Q, C, options).mrr;
    c.expect(std::abs(shuffled - base) <= 1e-12, "shuffle " + std::to_string(seed) + " changed MRR");
  }
}

// 5
void incrate_check(Check& c) {
  std::mt19937_64 rng(99);
  auto make = [](const std::string& prefix, std::size_t n, std::size_t k) {
    EvalCorpus corpus(prefix);
    std::vector<Verdict> verdicts;
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = prefix + std::to_string(i);
      corpus.add({id, Language::java(), "code", "comment", {}, Split::none});
      verdicts.push_back({id, i < k, 1.0});
    }
    return std::make_pair(std::move(corpus), std::move(verdicts));
  };
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 2000;
    const std::size_t k = rng() % (n + 1);
    auto [corpus, verdicts] = make("p", n, k);
    VerdictFileBackend backend("stub", verdicts);
    const auto r = inc_rate(corpus, backend);
    c.expect(r.inc_rate == static_cast<double>(k) / static_cast<double>(n),
             std::to_string(k) + "/" + std::to_string(n) + " gave " + fmt_double(r.inc_rate));
  }
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n1 = 1 + rng() % 500, n2 = 1 + rng() % 500;
    const std::size_t k1 = rng() % (n1 + 1), k2 = rng() % (n2 + 1);
    auto [a, va] = make("a", n1, k1);
    auto [b, vb] = make("b", n2, k2);
    EvalCorpus ab("ab");
    for (const auto& p : a) ab.add(p);
    for (const auto& p : b) ab.add(p);
    auto vab = va;
    vab.insert(vab.end(), vb.begin(), vb.end());
    VerdictFileBackend ba("a", va), bb("b", vb), bab("ab", vab);
    const double ra = inc_rate(a, ba).inc_rate;
    const double rb = inc_rate(b, bb).inc_rate;
    const double rab = inc_rate(ab, bab).inc_rate;
    const double weighted = (ra * static_cast<double>(n1) + rb * static_cast<double>(n2)) / static_cast<double>(n1 + n2);
    c.expect(std::abs(rab - weighted) <= 1e-15, "concatenation is not the weighted mean");
  }
}

// 6
void ccid_check(Check& c) {
  const auto samples = read_commit_pairs(testing::fixture("commit_pairs.jsonl"));
  c.expect(samples.size() == 6, "fixture must hold 6 samples");
  // Expected per-sample label multisets (inconsistent, consistent).
  const std::map<std::string, std::pair<int, int>> expected_default{
      {"s1", {0, 0}}, {"s2", {2, 0}}, {"s3", {0, 2}}, {"s4", {2, 0}}, {"s5", {0, 2}}, {"s6", {0, 0}}};
  const std::map<std::string, std::pair<int, int>> expected_emit{
      {"s1", {0, 0}}, {"s2", {2, 2}}, {"s3", {0, 2}}, {"s4", {2, 2}}, {"s5", {0, 2}}, {"s6", {0, 0}}};
  for (bool emit : {false, true}) {
    const auto out = build_ccid_dataset(samples, emit);
    std::map<std::string, std::pair<int, int>> got;
    for (const auto& s : samples) got[s.id] = {0, 0};
    for (const auto& e : out) {
      auto& slot = got[e.provenance.source_id];
      const bool cross = e.provenance.pairing == "c1+nl2" || e.provenance.pairing == "c2+nl1";
      c.expect(cross == (e.label == ConsistencyLabel::inconsistent), "label does not follow pairing");
      const auto& s = *std::find_if(samples.begin(), samples.end(), [&](const auto& x) { return x.id == e.provenance.source_id; });
      const auto& code = e.provenance.pairing[1] == '1' ? s.code_before : s.code_after;
      const auto& nl = e.provenance.pairing.back() == '1' ? s.comment_before : s.comment_after;
      c.expect(e.code == code && e.comment == nl, "provenance does not match texts");
      (e.label == ConsistencyLabel::inconsistent ? slot.first : slot.second)++;
    }
    c.expect(got == (emit ? expected_emit : expected_default), emit ? "emit multiset" : "default multiset");
    for (const auto& [id, counts] : got) {
      const int total = counts.first + counts.second;
      c.expect(total == 0 || total == 2 || total == 4, "sample " + id + " produced " + std::to_string(total));
    }
  }
}

// 7
void rebuild_check(Check& c) {
  testing::MockServer server;
  server.on_post("/v1/chat/completions", [](const json& body) {
    return testing::MockReply::json(testing::fake_completion(body.at("messages")[0].at("content")));
  });
  server.set_latency(std::chrono::milliseconds(2));
  server.start();

  EvalCorpus corpus("bulk");
  for (int i = 0; i < 1000; ++i) {
    corpus.add({"f" + std::to_string(i), i % 2 ? Language::java() : Language::python(),
                "def f" + std::to_string(i) + "(x):\n    return x + " + std::to_string(i), "Original.", {}, Split::train});
  }
  testing::TempDir dir;
  rebuild::ResponseCache cache(dir / "cache");
  rebuild::EndpointConfig endpoint;
  endpoint.base_url = server.url();
  rebuild::OpenAiChatClient client(endpoint);
  rebuild::RebuildOptions options;
  options.max_in_flight = 8;
  options.generate.prices = {0.5, 1.5};

  const auto start = Clock::now();
  const auto cold = rebuild::rebuild_corpus(corpus, {}, client, cache, options);
  const double cold_s = std::chrono::duration<double>(Clock::now() - start).count();
  c.expect(cold.corpus.size() == 1000, "cold run produced " + std::to_string(cold.corpus.size()));
  c.expect(cold_s < 30.0, "cold run took " + fmt_double(cold_s) + " s");
  const auto high_water = server.max_concurrency();
  c.expect(high_water <= 8, "observed concurrency " + std::to_string(high_water));
  c.expect(high_water >= 2, "requests never overlapped (high-water " + std::to_string(high_water) + ")");
  c.expect(server.request_count() == 1000, "cold run sent " + std::to_string(server.request_count()));

  double hand = 0.0;
  for (const auto& r : cold.records) {
    hand += (static_cast<double>(r.usage.prompt_tokens) * 0.5 + static_cast<double>(r.usage.completion_tokens) * 1.5) / 1e6;
  }
  c.expect(std::abs(cold.cost.total_cost - hand) <= 1e-12,
           "cost " + fmt_double(cold.cost.total_cost) + " vs hand " + fmt_double(hand));
  c.expect(cold.cost.incurred_cost == cold.cost.total_cost, "cold incurred != total");

  server.reset_counters();
  const auto warm = rebuild::rebuild_corpus(corpus, {}, client, cache, options);
  c.expect(server.request_count() == 0, "warm run sent " + std::to_string(server.request_count()));
  c.expect(warm.cost.cached == 1000, "warm cache hits " + std::to_string(warm.cost.cached));
  c.expect(std::abs(warm.cost.total_cost - hand) <= 1e-12, "warm total cost");
  c.expect(warm.cost.incurred_cost == 0.0, "warm incurred cost");
  std::printf("     rebuild: 1000 pairs in %.3f s, concurrency high-water %zu\n", cold_s, high_water);
}

// 8
std::string scripted_session(const std::filesystem::path& dir, bool check_conflict, Check& c) {
  std::vector<std::pair<std::string, EvalCorpus>> systems;
  for (const std::string tag : {"human", "gpt"}) {
    EvalCorpus corpus(tag);
    for (int i = 0; i < 20; ++i) {
      corpus.add({"s" + std::to_string(100 + i), Language::java(), "void m" + std::to_string(i) + "() {}",
                  tag + " comment " + std::to_string(i), {}, Split::test});
    }
    systems.emplace_back(tag, std::move(corpus));
  }
  const auto ids = humaneval::draw_sample(systems[0].second, humaneval::sample_size(20), 11);
  const std::vector<std::string> raters{"ann", "bob", "cy", "dee"};
  humaneval::AssignmentOptions options;
  options.seed = 77;
  const auto assignment = humaneval::build_assignments(humaneval::Study::from_corpora(ids, systems), raters, options);

  humaneval::RatingStore store(dir / "ratings.log", assignment, 7);
  std::mt19937_64 rng(5);
  bool forced = false;
  std::optional<std::string> escalation;
  std::size_t conflict_item = 0;
  // Raters pull from their queues round-robin; scores are scripted.
  for (bool progressed = true; progressed;) {
    progressed = false;
    for (const auto& r : raters) {
      auto task = store.state().next_task(r);
      if (!task) continue;
      progressed = true;
      humaneval::AspectScores s{3 + static_cast<int>(rng() % 2), 3 + static_cast<int>(rng() % 2),
                                3 + static_cast<int>(rng() % 2)};
      const auto& rec = *std::find_if(assignment.tasks.begin(), assignment.tasks.end(),
                                      [&](const auto& t) { return t.task.task_id == task->task_id; });
      if (!task->escalation && rec.item == 0) {
        s.naturalness = forced ? 5 : 2;
        forced = true;
        conflict_item = rec.item;
      }
      if (task->escalation) s = {3, 3, 3};
      const auto ack = store.submit({task->task_id, r, s, "2024-05-01T00:00:00Z"});
      if (ack.conflict_escalated) escalation = ack.escalation_task_id;
    }
  }
  const auto result = store.state().export_results();
  if (check_conflict) {
    c.expect(escalation.has_value(), "forced conflict did not escalate");
    c.expect(result.unresolved.empty() && result.summaries.has_value(), "items left unresolved");
    const auto& item = assignment.items[conflict_item];
    bool found = false;
    for (const auto& f : result.finals) {
      if (f.snippet_id == item.snippet_id && f.system_id == item.system_id) {
        found = true;
        c.expect(f.resolution == humaneval::Resolution::median_of_three, "conflict not resolved by median");
        c.expect(f.naturalness == 3.0, "median(2, 5, 3) != 3, got " + fmt_double(f.naturalness));
      }
    }
    c.expect(found, "conflicted item missing from export");
  }
  // Replaying the log from scratch must reproduce the export.
  const auto replayed = humaneval::replay(assignment, humaneval::RatingStore::read_log(dir / "ratings.log"));
  c.expect(replayed.export_results().to_jsonl() == result.to_jsonl(), "log replay differs");
  return result.to_jsonl() + result.summary_text();
}

void humaneval_check(Check& c) {
  testing::TempDir a, b;
  const auto first = scripted_session(a.path(), true, c);
  const auto second = scripted_session(b.path(), false, c);
  c.expect(!first.empty() && first == second, "exports differ between identical sessions");
  c.expect(testing::read_file(a / "ratings.log") == testing::read_file(b / "ratings.log"), "logs differ");
}

// 9
void corpus_check(Check& c) {
  testing::TempDir dir;
  std::filesystem::copy_file(testing::fixture("corpus_small.jsonl"), dir / "corpus.jsonl");
  const auto ingested = ingest_jsonl(dir / "corpus.jsonl");
  c.expect(ingested.corpus.size() == 5, "pair count " + std::to_string(ingested.corpus.size()));
  c.expect(ingested.errors.size() == 2, "rejected lines " + std::to_string(ingested.errors.size()));
  write_jsonl(ingested.corpus, dir / "round.jsonl");
  const auto back = ingest_jsonl(dir / "round.jsonl").corpus;
  c.expect(back.pairs() == ingested.corpus.pairs(), "round trip changed pairs");
  write_jsonl(back, dir / "round2.jsonl");
  c.expect(testing::read_file(dir / "round.jsonl") == testing::read_file(dir / "round2.jsonl"), "second write differs");

  const auto stats = corpus_stats(back);
  c.expect(stats.overall == LengthStats{5, 19, 3.8, 4.0, 16}, "overall stats");
  c.expect(stats.per_language.at("java") == LengthStats{2, 8, 4.0, 4.0, 8}, "java stats");
  c.expect(stats.per_language.at("python") == LengthStats{2, 7, 3.5, 3.5, 7}, "python stats");
  c.expect(stats.per_language.at("go") == LengthStats{1, 4, 4.0, 4.0, 4}, "go stats");
}

}  // namespace

int main() {
  criterion(1, "sample size for N=4985 is 357", 0, sample_size_check);
  criterion(2, "prompt template and request parameters", 0, prompt_check);
  criterion(3, "n-gram metrics agree with brute-force oracle", 10.0, ngram_oracle_check);
  criterion(4, "MRR properties on synthetic embeddings", 10.0, mrr_check);
  criterion(5, "IncRate over a stub classifier", 5.0, incrate_check);
  criterion(6, "CCID builder label multiset", 1.0, ccid_check);
  criterion(7, "rebuild against a local mock endpoint", 30.0, rebuild_check);
  criterion(8, "human-eval protocol determinism and conflict resolution", 0, humaneval_check);
  criterion(9, "corpus round trip and statistics", 0, corpus_check);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
