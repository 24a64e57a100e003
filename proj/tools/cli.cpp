#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "commeval/ccid.hpp"
#include "commeval/corpus.hpp"
#include "commeval/digest.hpp"
#include "commeval/humaneval.hpp"
#include "commeval/jsonl.hpp"
#include "commeval/ngram.hpp"
#include "commeval/rebuild.hpp"
#include "commeval/semantic.hpp"
#include "commeval/service.hpp"
#include "commeval/simd/kernels.hpp"
#include "commeval/text.hpp"

namespace commeval::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path sibling(const fs::path& p, std::string_view suffix) {
  auto out = p;
  out += std::string(suffix);
  return out;
}

// Written as "<out>.manifest.json" next to every output file.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand)
      : subcommand_(std::move(subcommand)), started_(utc_timestamp()) {}

  void input(const fs::path& p) { inputs_.push_back(p); }
  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void config(json effective) { config_ = std::move(effective); }

  void write(const fs::path& out) const {
    json inputs = json::array();
    for (const auto& p : inputs_) {
      json entry{{"path", p.string()}};
      entry["sha256"] = fs::is_regular_file(p) ? json(sha256_file_hex(p)) : json(nullptr);
      inputs.push_back(std::move(entry));
    }
    const json doc{{"subcommand", subcommand_},
                   {"tool_version", kToolVersion},
                   {"config", config_},
                   {"config_hash", sha256_hex(config_.dump())},
                   {"inputs", std::move(inputs)},
                   {"seeds", seeds_},
                   {"output", out.string()},
                   {"started_at", started_},
                   {"finished_at", utc_timestamp()}};
    jsonl::write_file_atomic(sibling(out, ".manifest.json"), doc.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  std::string started_;
  std::vector<fs::path> inputs_;
  json seeds_ = json::object();
  json config_ = json::object();
};

json load_config(const std::optional<fs::path>& path) {
  if (!path) return json::object();
  std::ifstream in(*path);
  if (!in) throw IoError("cannot open config " + path->string());
  try {
    auto doc = json::parse(in);
    if (!doc.is_object()) throw Error("config must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw Error("config " + path->string() + ": " + e.what());
  }
}

template <typename T>
T pick(const std::optional<T>& flag, const json& config, const char* key, T fallback) {
  if (flag) return *flag;
  if (auto it = config.find(key); it != config.end() && !it->is_null()) return it->get<T>();
  return fallback;
}

void write_text(const fs::path& path, const std::string& body) { jsonl::write_file_atomic(path, body); }

struct Common {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> in;
  std::optional<fs::path> out;
};

void add_common(CLI::App* sub, Common& c, bool needs_in) {
  sub->add_option("--config", c.config, "JSON config file");
  sub->add_option("--seed", c.seed, "Random seed");
  auto* in = sub->add_option("--in", c.in, "Input file");
  if (needs_in) in->required();
  sub->add_option("--out", c.out, "Output file");
}

FieldMapping mapping_for(const std::string& format) {
  if (format == "csn") return FieldMapping::code_search_net();
  return FieldMapping::canonical();
}

EvalCorpus load_corpus(const fs::path& path, const std::string& format, bool strict,
                       std::ostream& err) {
  IngestOptions options;
  options.strict = strict;
  auto result = ingest_jsonl(path, mapping_for(format), options);
  if (!result.errors.empty()) {
    err << fmt::format("{}: {} line(s) rejected, see {}\n", path.string(), result.errors.size(),
                       error_ledger_path(path).string());
  }
  return std::move(result.corpus);
}

std::string format_stats(const CorpusStats& s) {
  std::string out = fmt::format("{:<14}{:>8}{:>10}{:>10}{:>10}{:>14}\n", "language", "pairs",
                                "tokens", "mean", "median", "unique_words");
  auto row = [&](const std::string& label, const LengthStats& l) {
    out += fmt::format("{:<14}{:>8}{:>10}{:>10.2f}{:>10.2f}{:>14}\n", label, l.pair_count,
                       l.total_tokens, l.mean_comment_len, l.median_comment_len, l.unique_words);
  };
  for (const auto& [tag, l] : s.per_language) row(tag, l);
  row("all", s.overall);
  return out;
}

std::unique_ptr<EmbeddingBackend> embedding_backend(const std::optional<fs::path>& vectors,
                                                    const std::string& endpoint) {
  if (vectors) return std::make_unique<VectorFileBackend>(*vectors);
  if (!endpoint.empty()) return std::make_unique<HttpEmbeddingBackend>(endpoint);
  throw InvalidArgument("no embedding backend: pass --vectors or --embed-endpoint");
}

std::string report_text(const json& doc) {
  const auto kind = doc.value("kind", std::string());
  if (kind == "mrr") {
    std::string out = fmt::format("MRR            {:.4f}\n", doc.at("mrr").get<double>());
    out += fmt::format("batches        {}\n", doc.at("batch_scores").size());
    out += fmt::format("batch size     {}\n", doc.at("batch_size").get<std::size_t>());
    out += fmt::format("dropped pairs  {}\n", doc.at("dropped_pairs").get<std::size_t>());
    return out;
  }
  if (kind == "incrate") {
    return fmt::format("IncRate        {:.2f}%\nflagged        {} / {}\n",
                       100.0 * doc.at("inc_rate").get<double>(), doc.at("flagged").get<std::size_t>(),
                       doc.at("total").get<std::size_t>());
  }
  if (kind == "use") {
    return fmt::format("USE            {:.4f}\npairs          {}\n", doc.at("mean").get<double>(),
                       doc.at("pairs").get<std::size_t>());
  }
  if (doc.contains("aggregate")) {
    const auto& a = doc.at("aggregate");
    RefMetricReport r;
    r.per_pair.resize(a.at("pairs").get<std::size_t>());
    r.aggregate = {a.at("corpus_bleu").get<double>(), a.at("mean_sentence_bleu").get<double>(),
                   a.at("mean_rouge_l").get<double>(), a.at("mean_meteor").get<double>(),
                   a.at("em_rate").get<double>()};
    return summary_table(r);
  }
  throw InvalidArgument("unrecognized report document");
}

json read_report(const fs::path& path) {
  // Reference-metric reports are line-delimited with the aggregate last;
  // the others are a single JSON document.
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const auto body = buf.str();
  try {
    return json::parse(body);
  } catch (const json::parse_error&) {
  }
  auto lines = jsonl::read_all(path);
  if (lines.empty()) throw InvalidArgument("empty report");
  return lines.back();
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::vector<std::string> ids;
  jsonl::for_each_line(path, [&](std::size_t, std::string_view line) {
    const auto id = std::string(text::trim(line));
    if (!id.empty()) ids.push_back(id);
  });
  return ids;
}


int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Code-comment quality evaluation toolkit", "commeval"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // ingest
  Common ingest_c;
  std::string ingest_format = "canonical";
  std::string ingest_name;
  bool ingest_strict = false;
  auto* ingest = app.add_subcommand("ingest", "Normalize a line-delimited corpus file");
  add_common(ingest, ingest_c, true);
  ingest->add_option("--format", ingest_format, "canonical | csn")->check(CLI::IsMember({"canonical", "csn"}));
  ingest->add_option("--name", ingest_name, "Corpus name used for synthesized ids");
  ingest->add_flag("--strict", ingest_strict, "Abort on the first bad line");

  // stats
  Common stats_c;
  std::string stats_format = "canonical";
  auto* stats = app.add_subcommand("stats", "Comment length and vocabulary statistics");
  add_common(stats, stats_c, true);
  stats->add_option("--format", stats_format)->check(CLI::IsMember({"canonical", "csn"}));

  // eval-ref
  Common ref_c;
  fs::path ref_pred;
  fs::path ref_ref;
  std::string ref_tokenizer = std::string(kDefaultTokenizer);
  std::string ref_smoothing = "add_one";
  double ref_beta = 1.0;
  auto* eval_ref = app.add_subcommand("eval-ref", "BLEU / ROUGE-L / METEOR / EM against references");
  add_common(eval_ref, ref_c, false);
  eval_ref->add_option("--pred", ref_pred, "Predictions corpus")->required();
  eval_ref->add_option("--ref", ref_ref, "References corpus")->required();
  eval_ref->add_option("--tokenizer", ref_tokenizer);
  eval_ref->add_option("--smoothing", ref_smoothing)->check(CLI::IsMember({"none", "add_one"}));
  eval_ref->add_option("--rouge-beta", ref_beta);

  // eval-use
  Common use_c;
  fs::path use_pred;
  fs::path use_ref;
  std::optional<fs::path> use_vectors;
  std::optional<fs::path> use_pred_vectors;
  std::optional<fs::path> use_ref_vectors;
  std::optional<std::string> use_endpoint;
  auto* eval_use = app.add_subcommand("eval-use", "Embedding cosine similarity against references");
  add_common(eval_use, use_c, false);
  eval_use->add_option("--pred", use_pred)->required();
  eval_use->add_option("--ref", use_ref)->required();
  eval_use->add_option("--vectors", use_vectors, "One vector file for both sides");
  eval_use->add_option("--pred-vectors", use_pred_vectors);
  eval_use->add_option("--ref-vectors", use_ref_vectors);
  eval_use->add_option("--embed-endpoint", use_endpoint);

  // eval-mrr
  Common mrr_c;
  std::optional<fs::path> mrr_vectors;
  std::optional<std::string> mrr_endpoint;
  std::optional<std::size_t> mrr_batch;
  bool mrr_drop_partial = false;
  std::string mrr_similarity = "cosine";
  auto* eval_mrr = app.add_subcommand("eval-mrr", "Reference-free code-search MRR");
  add_common(eval_mrr, mrr_c, true);
  eval_mrr->add_option("--vectors", mrr_vectors);
  eval_mrr->add_option("--embed-endpoint", mrr_endpoint);
  eval_mrr->add_option("--batch-size", mrr_batch);
  eval_mrr->add_flag("--drop-partial", mrr_drop_partial);
  eval_mrr->add_option("--similarity", mrr_similarity)->check(CLI::IsMember({"cosine", "inner_product"}));

  // eval-incrate
  Common inc_c;
  std::optional<fs::path> inc_verdicts;
  std::optional<std::string> inc_endpoint;
  std::size_t inc_in_flight = 4;
  auto* eval_inc = app.add_subcommand("eval-incrate", "Inconsistency rate over a classifier backend");
  add_common(eval_inc, inc_c, true);
  eval_inc->add_option("--verdicts", inc_verdicts);
  eval_inc->add_option("--classifier-endpoint", inc_endpoint);
  eval_inc->add_option("--max-in-flight", inc_in_flight);

  // ccid-build
  Common ccid_c;
  bool ccid_emit_consistent = false;
  auto* ccid = app.add_subcommand("ccid-build", "Build inconsistency examples from commit pairs");
  add_common(ccid, ccid_c, true);
  ccid->add_flag("--emit-changed-consistent", ccid_emit_consistent);

  // rebuild
  Common rb_c;
  std::optional<std::string> rb_endpoint;
  std::optional<std::string> rb_model;
  std::optional<std::size_t> rb_in_flight;
  std::optional<std::string> rb_cache;
  auto* rebuild_cmd = app.add_subcommand("rebuild", "Replace comments with LLM-generated ones");
  add_common(rebuild_cmd, rb_c, true);
  rebuild_cmd->add_option("--endpoint", rb_endpoint);
  rebuild_cmd->add_option("--model", rb_model);
  rebuild_cmd->add_option("--max-in-flight", rb_in_flight);
  rebuild_cmd->add_option("--cache-dir", rb_cache);

  // estimate-cost
  Common est_c;
  std::optional<double> est_price_in;
  std::optional<double> est_price_out;
  std::optional<int> est_max_tokens;
  auto* estimate = app.add_subcommand("estimate-cost", "Estimate rebuild API cost");
  add_common(estimate, est_c, true);
  estimate->add_option("--price-in", est_price_in, "Input price per 1M tokens");
  estimate->add_option("--price-out", est_price_out, "Output price per 1M tokens");
  estimate->add_option("--max-tokens", est_max_tokens);

  // sample
  Common sample_c;
  std::optional<std::size_t> sample_n;
  std::optional<double> sample_confidence;
  std::optional<double> sample_z;
  double sample_margin = 0.05;
  double sample_p = 0.5;
  auto* sample = app.add_subcommand("sample", "Minimum sample size, optionally drawing the sample");
  add_common(sample, sample_c, false);
  sample->add_option("--n", sample_n, "Population size (defaults to the --in corpus size)");
  auto* conf_opt = sample->add_option("--confidence", sample_confidence, "e.g. 0.95");
  sample->add_option("--z", sample_z, "z-score (default 1.96)")->excludes(conf_opt);
  sample->add_option("--margin", sample_margin);
  sample->add_option("--proportion", sample_p);

  // assign
  Common assign_c;
  std::vector<std::string> assign_systems;
  std::vector<std::string> assign_raters;
  std::optional<fs::path> assign_sample;
  std::size_t assign_per_item = 2;
  auto* assign = app.add_subcommand("assign", "Build blind double-rater assignments");
  add_common(assign, assign_c, false);
  assign->add_option("--system", assign_systems, "name=corpus.jsonl (repeatable)")->required();
  assign->add_option("--raters", assign_raters, "Rater ids")->required()->delimiter(',');
  assign->add_option("--sample", assign_sample, "File with one snippet id per line")->required();
  assign->add_option("--raters-per-item", assign_per_item);

  // serve
  Common serve_c;
  fs::path serve_assignment;
  fs::path serve_log;
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  std::optional<fs::path> serve_static;
  auto* serve = app.add_subcommand("serve", "Serve the annotation API");
  add_common(serve, serve_c, false);
  serve->add_option("--assignment", serve_assignment)->required();
  serve->add_option("--log", serve_log)->required();
  serve->add_option("--host", serve_host);
  serve->add_option("--port", serve_port);
  serve->add_option("--static", serve_static, "Annotator UI bundle directory");

  // export
  Common export_c;
  fs::path export_assignment;
  fs::path export_log;
  auto* export_cmd = app.add_subcommand("export", "Resolve ratings and export final scores");
  add_common(export_cmd, export_c, false);
  export_cmd->add_option("--assignment", export_assignment)->required();
  export_cmd->add_option("--log", export_log)->required();

  // report
  Common report_c;
  auto* report = app.add_subcommand("report", "Print a summary table for an eval-* output");
  add_common(report, report_c, true);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help() << '\n';
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All) << '\n';
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failing->help();
    return 2;
  }

  if (ingest->parsed()) {
    RunManifest manifest("ingest");
    IngestOptions options;
    options.strict = ingest_strict;
    options.name = ingest_name;
    auto result = ingest_jsonl(*ingest_c.in, mapping_for(ingest_format), options);
    manifest.input(*ingest_c.in);
    manifest.config({{"format", ingest_format}, {"strict", ingest_strict}, {"name", result.corpus.name()}});
    out << fmt::format("ingested {} pairs, {} rejected line(s)\n", result.corpus.size(), result.errors.size());
    if (!result.errors.empty()) out << "error ledger: " << error_ledger_path(*ingest_c.in).string() << '\n';
    if (ingest_c.out) {
      write_jsonl(result.corpus, *ingest_c.out);
      manifest.write(*ingest_c.out);
    }
    return 0;
  }

  if (stats->parsed()) {
    const auto corpus = load_corpus(*stats_c.in, stats_format, false, err);
    const auto s = corpus_stats(corpus);
    out << format_stats(s);
    if (stats_c.out) {
      write_text(*stats_c.out, to_json(s).dump(2) + "\n");
      RunManifest manifest("stats");
      manifest.input(*stats_c.in);
      manifest.config({{"format", stats_format}, {"tokenizer", s.tokenizer_id}});
      manifest.write(*stats_c.out);
    }
    return 0;
  }

  if (eval_ref->parsed()) {
    const auto pred = load_corpus(ref_pred, "canonical", false, err);
    const auto refs = load_corpus(ref_ref, "canonical", false, err);
    ReferenceEvalOptions options;
    options.tokenizer_id = ref_tokenizer;
    options.sentence_smoothing = ref_smoothing == "none" ? BleuSmoothing::none : BleuSmoothing::add_one;
    options.rouge_beta = ref_beta;
    const auto r = evaluate_reference_based(pred, refs, options);
    out << summary_table(r);
    if (ref_c.out) {
      write_text(*ref_c.out, to_jsonl(r));
      RunManifest manifest("eval-ref");
      manifest.input(ref_pred);
      manifest.input(ref_ref);
      manifest.config({{"tokenizer", ref_tokenizer}, {"smoothing", ref_smoothing},
                       {"rouge_beta", ref_beta}, {"max_n", options.max_n}});
      manifest.write(*ref_c.out);
    }
    return 0;
  }

  if (eval_use->parsed()) {
    const auto config = load_config(use_c.config);
    const auto pred = load_corpus(use_pred, "canonical", false, err);
    const auto refs = load_corpus(use_ref, "canonical", false, err);
    const auto endpoint = pick(use_endpoint, config, "embedding_endpoint", std::string());
    UseScore score;
    if (use_pred_vectors || use_ref_vectors) {
      if (!use_pred_vectors || !use_ref_vectors) {
        throw InvalidArgument("--pred-vectors and --ref-vectors must be given together");
      }
      VectorFileBackend pb(*use_pred_vectors);
      VectorFileBackend rb(*use_ref_vectors);
      score = use_score(pred, refs, pb, rb);
    } else {
      auto backend = embedding_backend(use_vectors, endpoint);
      score = use_score(pred, refs, *backend);
    }
    out << fmt::format("USE            {:.4f}\npairs          {}\n", score.mean, score.per_pair.size());
    if (use_c.out) {
      write_text(*use_c.out, to_json(score).dump(2) + "\n");
      RunManifest manifest("eval-use");
      manifest.input(use_pred);
      manifest.input(use_ref);
      for (const auto& p : {use_vectors, use_pred_vectors, use_ref_vectors}) {
        if (p) manifest.input(*p);
      }
      manifest.config({{"embedding_endpoint", endpoint}, {"backend", score.backend_id},
                       {"simd", simd::active_kernels().name}});
      manifest.write(*use_c.out);
    }
    return 0;
  }

  if (eval_mrr->parsed()) {
    const auto config = load_config(mrr_c.config);
    const auto corpus = load_corpus(*mrr_c.in, "canonical", false, err);
    const auto endpoint = pick(mrr_endpoint, config, "embedding_endpoint", std::string());
    auto backend = embedding_backend(mrr_vectors, endpoint);
    MrrOptions options;
    options.batch_size = pick(mrr_batch, config, "batch_size", std::size_t{1000});
    if (mrr_c.seed) options.seed = mrr_c.seed;
    else if (config.contains("seed")) options.seed = config.at("seed").get<std::uint64_t>();
    options.drop_partial_batch = mrr_drop_partial;
    options.similarity =
        mrr_similarity == "cosine" ? SimilarityFunction::cosine : SimilarityFunction::inner_product;
    const auto result = mrr(corpus, *backend, options);
    out << fmt::format("MRR            {:.4f}\nbatches        {}\n", result.mrr, result.batch_scores.size());
    if (result.dropped_batches > 0) {
      err << fmt::format("warning: dropped {} batch(es) with fewer than 2 pairs\n", result.dropped_batches);
    }
    if (mrr_c.out) {
      write_text(*mrr_c.out, to_json(result).dump(2) + "\n");
      RunManifest manifest("eval-mrr");
      manifest.input(*mrr_c.in);
      if (mrr_vectors) manifest.input(*mrr_vectors);
      if (options.seed) manifest.seed("shuffle", *options.seed);
      manifest.config({{"embedding_endpoint", endpoint}, {"batch_size", options.batch_size},
                       {"drop_partial", mrr_drop_partial}, {"similarity", mrr_similarity},
                       {"simd", simd::active_kernels().name}});
      manifest.write(*mrr_c.out);
    }
    return 0;
  }

  if (eval_inc->parsed()) {
    const auto config = load_config(inc_c.config);
    const auto corpus = load_corpus(*inc_c.in, "canonical", false, err);
    const auto endpoint = pick(inc_endpoint, config, "classifier_endpoint", std::string());
    std::unique_ptr<ClassifierBackend> backend;
    if (inc_verdicts) backend = std::make_unique<VerdictFileBackend>(*inc_verdicts);
    else if (!endpoint.empty()) backend = std::make_unique<HttpClassifierBackend>(endpoint);
    else throw InvalidArgument("no classifier backend: pass --verdicts or --classifier-endpoint");
    IncRateOptions options;
    options.max_in_flight = inc_in_flight;
    const auto result = inc_rate(corpus, *backend, options);
    out << fmt::format("IncRate        {:.2f}%\nflagged        {} / {}\n", 100.0 * result.inc_rate,
                       result.flagged_ids.size(), result.total);
    if (inc_c.out) {
      write_text(*inc_c.out, to_json(result).dump(2) + "\n");
      RunManifest manifest("eval-incrate");
      manifest.input(*inc_c.in);
      if (inc_verdicts) manifest.input(*inc_verdicts);
      manifest.config({{"classifier_endpoint", endpoint}, {"backend", result.backend_id}});
      manifest.write(*inc_c.out);
    }
    return 0;
  }

  if (ccid->parsed()) {
    const auto samples = read_commit_pairs(*ccid_c.in);
    const auto examples = build_ccid_dataset(samples, ccid_emit_consistent);
    std::size_t inconsistent = 0;
    std::string body;
    for (const auto& e : examples) {
      inconsistent += e.label == ConsistencyLabel::inconsistent ? 1 : 0;
      body += jsonl::dump_line(to_json(e));
    }
    out << fmt::format("{} samples -> {} examples ({} inconsistent, {} consistent)\n", samples.size(),
                       examples.size(), inconsistent, examples.size() - inconsistent);
    if (ccid_c.out) {
      write_text(*ccid_c.out, body);
      RunManifest manifest("ccid-build");
      manifest.input(*ccid_c.in);
      manifest.config({{"emit_changed_consistent", ccid_emit_consistent}});
      manifest.write(*ccid_c.out);
    }
    return 0;
  }

  if (rebuild_cmd->parsed()) {
    if (!rb_c.out) throw InvalidArgument("rebuild requires --out");
    auto cfg = rebuild::RebuildConfig::from_json(load_config(rb_c.config));
    if (rb_endpoint) cfg.endpoint.base_url = *rb_endpoint;
    if (rb_model) cfg.params.model = *rb_model;
    if (rb_in_flight) cfg.max_in_flight = *rb_in_flight;
    if (rb_cache) cfg.cache_dir = *rb_cache;
    const auto corpus = load_corpus(*rb_c.in, "canonical", false, err);

    rebuild::OpenAiChatClient client(cfg.endpoint);
    rebuild::ResponseCache cache(cfg.cache_dir);
    rebuild::RebuildOptions options;
    options.max_in_flight = cfg.max_in_flight;
    options.failure_threshold = cfg.failure_threshold;
    options.generate.retry = cfg.retry;
    options.generate.prices = cfg.prices;
    options.generate.postprocess.first_sentence_only = cfg.first_sentence_only;
    RunManifest manifest("rebuild");
    manifest.input(*rb_c.in);
    manifest.config(cfg.to_json());
    try {
      const auto result = rebuild::rebuild_corpus(corpus, cfg.params, client, cache, options);
      rebuild::write_outputs(result, *rb_c.out);
      manifest.write(*rb_c.out);
      out << fmt::format("rebuilt {} of {} pairs ({} cached, {} failed); cost {:.6f} (incurred {:.6f})\n",
                         result.cost.records, corpus.size(), result.cost.cached, result.cost.failed,
                         result.cost.total_cost, result.cost.incurred_cost);
    } catch (const rebuild::RebuildAborted& e) {
      std::string body;
      for (const auto& f : e.failures()) body += jsonl::dump_line(rebuild::to_json(f));
      write_text(sibling(*rb_c.out, ".failures.jsonl"), body);
      throw;
    }
    return 0;
  }

  if (estimate->parsed()) {
    const auto config = load_config(est_c.config);
    auto cfg = rebuild::RebuildConfig::from_json(config);
    if (est_price_in) cfg.prices.input_per_million = *est_price_in;
    if (est_price_out) cfg.prices.output_per_million = *est_price_out;
    if (est_max_tokens) cfg.params.max_tokens = *est_max_tokens;
    const auto corpus = load_corpus(*est_c.in, "canonical", false, err);
    const double cost = rebuild::estimate_cost(corpus, cfg.params, cfg.prices);
    out << fmt::format("{:.6f}\n", cost);
    if (est_c.out) {
      write_text(*est_c.out, json{{"pairs", corpus.size()}, {"estimated_cost", cost},
                                  {"estimator", "chars/4"}}.dump(2) + "\n");
      RunManifest manifest("estimate-cost");
      manifest.input(*est_c.in);
      manifest.config(cfg.to_json());
      manifest.write(*est_c.out);
    }
    return 0;
  }

  if (sample->parsed()) {
    std::optional<EvalCorpus> corpus;
    if (sample_c.in) corpus = load_corpus(*sample_c.in, "canonical", false, err);
    std::size_t population = 0;
    if (sample_n) population = *sample_n;
    else if (corpus) population = corpus->size();
    else throw InvalidArgument("sample needs --n or --in");
    const double z = sample_confidence ? humaneval::z_for_confidence(*sample_confidence)
                                       : sample_z.value_or(1.96);
    const auto plan = humaneval::SamplePlan::compute(population, z, sample_margin, sample_p);
    out << plan.min_samples << '\n';
    if (sample_c.out) {
      if (!corpus) throw InvalidArgument("writing a sample needs --in");
      const std::uint64_t seed = sample_c.seed.value_or(0);
      const auto ids = humaneval::draw_sample(*corpus, plan.min_samples, seed);
      std::string body;
      for (const auto& id : ids) body += id + "\n";
      write_text(*sample_c.out, body);
      RunManifest manifest("sample");
      manifest.input(*sample_c.in);
      manifest.seed("sample", seed);
      manifest.config({{"population", population}, {"z", z}, {"margin", sample_margin},
                       {"proportion", sample_p}, {"n0", plan.n0}, {"min_samples", plan.min_samples}});
      manifest.write(*sample_c.out);
    }
    return 0;
  }

  if (assign->parsed()) {
    if (!assign_c.out) throw InvalidArgument("assign requires --out");
    std::vector<std::pair<std::string, EvalCorpus>> systems;
    RunManifest manifest("assign");
    for (const auto& spec : assign_systems) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) throw InvalidArgument("--system expects name=path, got " + spec);
      const fs::path path = spec.substr(eq + 1);
      systems.emplace_back(spec.substr(0, eq), load_corpus(path, "canonical", false, err));
      manifest.input(path);
    }
    const auto ids = read_id_list(*assign_sample);
    manifest.input(*assign_sample);
    const auto study = humaneval::Study::from_corpora(ids, systems);
    humaneval::AssignmentOptions options;
    options.raters_per_item = assign_per_item;
    options.seed = assign_c.seed.value_or(0);
    const auto assignment = humaneval::build_assignments(study, assign_raters, options);
    write_text(*assign_c.out, assignment.to_json().dump(2) + "\n");
    manifest.seed("assignment", options.seed);
    manifest.config({{"raters", assign_raters}, {"raters_per_item", assign_per_item}});
    manifest.write(*assign_c.out);
    out << fmt::format("{} snippets x {} systems -> {} tasks for {} raters\n", study.snippets.size(),
                       study.systems.size(), assignment.tasks.size(), assign_raters.size());
    return 0;
  }

  if (serve->parsed()) {
    std::ifstream in(serve_assignment);
    if (!in) throw IoError("cannot open " + serve_assignment.string());
    auto assignment = humaneval::Assignment::from_json(json::parse(in));
    service::AnnotationService svc(serve_log, std::move(assignment));
    service::ServerOptions options;
    options.host = serve_host;
    options.port = serve_port;
    options.static_dir = serve_static;
    service::HttpServer server(svc, options);
    err << fmt::format("serving annotation API on http://{}:{}\n", serve_host, serve_port);
    server.run();
    return 0;
  }

  if (export_cmd->parsed()) {
    std::ifstream in(export_assignment);
    if (!in) throw IoError("cannot open " + export_assignment.string());
    const auto assignment = humaneval::Assignment::from_json(json::parse(in));
    const auto ratings = humaneval::RatingStore::read_log(export_log);
    const auto state = humaneval::replay(assignment, ratings);
    const auto result = state.export_results();
    out << result.summary_text();
    if (export_c.out) {
      write_text(*export_c.out, result.to_jsonl());
      write_text(sibling(*export_c.out, ".summary.txt"), result.summary_text());
      RunManifest manifest("export");
      manifest.input(export_assignment);
      manifest.input(export_log);
      manifest.seed("assignment", assignment.seed);
      manifest.write(*export_c.out);
    }
    return 0;
  }

  if (report->parsed()) {
    out << report_text(read_report(*report_c.in));
    return 0;
  }
  return 2;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const IngestFailure& e) {
    err << "error: " << e.what() << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace commeval::cli
