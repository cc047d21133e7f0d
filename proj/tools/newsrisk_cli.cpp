#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "newsrisk/io.hpp"
#include "newsrisk/pipeline.hpp"
#include "newsrisk/synthgen.hpp"
#include "plots.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace newsrisk;

namespace {

struct Flags {
  std::string config;
  std::string out_dir;
  std::string seed;
  std::string approach;
  std::string threshold;
  std::string seeds;
  std::string bundle;
  std::string scores;
  std::string k_grid;
  int threads = 0;
};

struct RunConfig {
  std::optional<std::string> bundle;
  int seeds = 20;
  std::vector<int> k_grid = {5, 10, 15, 20, 25, 30, 35, 40};
  GeneratorConfig generator;
  PipelineConfig pipeline;

  json to_json() const {
    return {{"bundle", bundle ? json(*bundle) : json(nullptr)},
            {"seeds", seeds},
            {"k_grid", k_grid},
            {"generator", json::parse(generator_config_to_json(generator))},
            {"pipeline", pipeline.to_json()}};
  }
};

std::uint64_t parse_u64(const std::string& text, const char* flag) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(text, &used);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::ConfigError, std::string(flag) + " expects a non-negative integer, got '" + text + "'");
  }
}

std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    auto k = parse_u64(text.substr(start, end - start), "--k-grid");
    if (k < 1) throw Error(ErrorKind::ConfigError, "--k-grid values must be >= 1");
    grid.push_back(static_cast<int>(k));
    start = end + 1;
  }
  return grid;
}

RunConfig resolve_config(const Flags& flags) {
  RunConfig rc;
  if (!flags.config.empty()) {
    json j;
    try {
      j = json::parse(io::read_file(flags.config));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ConfigError, flags.config + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
    try {
      if (j.contains("bundle")) rc.bundle = j["bundle"].get<std::string>();
      if (j.contains("seeds")) rc.seeds = j["seeds"].get<int>();
      if (j.contains("k_grid")) rc.k_grid = j["k_grid"].get<std::vector<int>>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ConfigError, std::string("config: ") + e.what());
    }
    if (j.contains("generator")) rc.generator = generator_config_from_json(j["generator"].dump());
    for (const char* key : {"bundle", "seeds", "k_grid", "generator"}) j.erase(key);
    rc.pipeline = PipelineConfig::from_json(j);
  }
  if (!flags.approach.empty()) rc.pipeline.approach = parse_approach(flags.approach);
  if (!flags.threshold.empty()) rc.pipeline.threshold = io::parse_double(flags.threshold, "--threshold");
  if (!flags.seed.empty()) {
    auto seed = parse_u64(flags.seed, "--seed");
    rc.pipeline = rc.pipeline.with_seed(seed);
    rc.generator.seed = seed;
  }
  if (!flags.seeds.empty()) rc.seeds = static_cast<int>(parse_u64(flags.seeds, "--seeds"));
  if (!flags.bundle.empty()) rc.bundle = flags.bundle;
  if (!flags.k_grid.empty()) rc.k_grid = parse_grid(flags.k_grid);
  if (rc.seeds < 1) throw Error(ErrorKind::ConfigError, "seeds must be >= 1");
  rc.pipeline.validate();
  rc.generator.validate();
  return rc;
}

std::string iso_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Output directory guarded by a lock file; records every artifact for the manifest.
class OutDir {
 public:
  explicit OutDir(const std::string& dir) : dir_(dir) {
    if (dir.empty()) throw Error(ErrorKind::ConfigError, "--out-dir is required");
    fs::create_directories(dir_);
    lock_ = dir_ / ".newsrisk.lock";
    int fd = ::open(lock_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) throw std::runtime_error("output directory is locked by another run: " + lock_.string());
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto written = ::write(fd, pid.data(), pid.size());
    ::close(fd);
    started_ = iso_now();
  }
  OutDir(const OutDir&) = delete;
  OutDir& operator=(const OutDir&) = delete;
  ~OutDir() {
    std::error_code ec;
    fs::remove(lock_, ec);
  }

  void write(const std::string& name, const std::string& content) {
    auto path = dir_ / name;
    fs::create_directories(path.parent_path());
    io::write_file(path, content);
    outputs_[name] = fnv1a_hex(content);
  }

  void input(const std::string& role, const fs::path& path) { inputs_[role] = fnv1a_hex(io::read_file(path)); }

  void finish(const std::string& subcommand, const RunConfig& rc, const json& summary) {
    json manifest = {{"subcommand", subcommand},
                     {"version", 1},
                     {"effective_config", rc.to_json()},
                     {"inputs", inputs_},
                     {"outputs", outputs_},
                     {"summary", summary}};
    io::write_file(dir_ / (subcommand + ".manifest.json"), manifest.dump(2) + "\n");
    json timing = {{"subcommand", subcommand}, {"started_at", started_}, {"finished_at", iso_now()}};
    io::write_file(dir_ / (subcommand + ".timing.json"), timing.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  fs::path lock_;
  std::string started_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

BundlePaths bundle_paths(const RunConfig& rc, OutDir& out) {
  if (!rc.bundle) throw Error(ErrorKind::ConfigError, "--bundle is required for this subcommand");
  if (!fs::is_directory(*rc.bundle)) throw Error(ErrorKind::Io, "bundle directory not found: " + *rc.bundle);
  auto paths = BundlePaths::in(*rc.bundle);
  out.input("articles", paths.articles);
  out.input("aliases", paths.aliases);
  out.input("ratings", paths.ratings);
  out.input("benchmark", paths.benchmark);
  if (paths.stopwords) out.input("stopwords", *paths.stopwords);
  return paths;
}

struct Loaded {
  BundlePaths paths;
  NewsData data;
  NewsResources resources;
};

std::unique_ptr<Loaded> load_bundle(const RunConfig& rc, OutDir& out) {
  auto l = std::make_unique<Loaded>();
  l->paths = bundle_paths(rc, out);
  for (auto name : kLexiconOrder) {
    auto file = std::string(to_string(name)) + ".txt";
    out.input("lexicons/" + file, l->paths.lexicon_dir / file);
  }
  l->data = prepare_news_data(l->paths, rc.pipeline);
  std::unordered_set<std::string> vocab;
  bool vectors = rc.pipeline.approach == Approach::WordvecAverage;
  if (vectors) {
    vocab = corpus_vocabulary(l->data.documents);
    out.input("vectors", l->paths.vectors);
  }
  l->resources = load_resources(l->paths, vectors ? &vocab : nullptr);
  for (const auto& w : l->resources.vectors.warnings) std::cerr << "warning: " << w << "\n";
  return l;
}

void write_featurizer_artifacts(const FittedFeaturizer& f, OutDir& out) {
  if (f.lda) out.write("lda_model.json", f.lda->to_json());
  if (f.doc2vec) out.write("doc2vec_model.json", f.doc2vec->to_json());
}

std::size_t positives(const ScoredSet& s) {
  std::size_t n = 0;
  for (const auto& r : s) n += static_cast<std::size_t>(r.label);
  return n;
}

std::string combined_gains_csv(const RunMetrics& m) {
  std::string out = "fraction,benchmark,final\n";
  for (std::size_t i = 0; i < m.final_gains.size(); ++i)
    out += io::format_double(m.final_gains[i].fraction) + "," + io::format_double(m.benchmark_gains[i].captured) + "," +
           io::format_double(m.final_gains[i].captured) + "\n";
  return out;
}

plots::Series gains_series(const std::string& name, const GainsCurve& curve) {
  plots::Series s{name, {{0.0, 0.0}}, false};
  for (const auto& p : curve) s.points.emplace_back(p.fraction, p.captured);
  return s;
}

json metrics_json(const RunMetrics& m, double threshold) {
  return {{"news_auc", m.news_auc},
          {"benchmark_auc", m.benchmark_auc},
          {"final_auc", m.final_auc},
          {"auc_gain", m.final_auc - m.benchmark_auc},
          {"benchmark_recall", m.benchmark_recall},
          {"final_recall", m.final_recall},
          {"threshold", threshold}};
}

void write_full_run(const FullRun& run, OutDir& out) {
  write_featurizer_artifacts(run.news.news.featurizer, out);
  out.write("news_model.json", run.news.news.model.to_json());
  out.write("benchmark_model.json", run.benchmark.model.to_json());
  out.write("final_model.json", run.final_model.model.to_json());
  out.write("holdout_news_scores.csv", scored_to_csv(run.news.holdout));
  out.write("holdout_benchmark_scores.csv", scored_to_csv(run.benchmark.holdout));
  out.write("holdout_final_scores.csv", scored_to_csv(run.final_model.holdout));
  out.write("stacked_features.csv", run.stacked.stacked.to_csv());
  out.write("metrics.csv", run.metrics_csv());
  out.write("run_manifest.json", run.manifest_json());
  out.write("gains.csv", combined_gains_csv(run.metrics));
  plots::Series diagonal{"random", {{0.0, 0.0}, {1.0, 1.0}}, true};
  out.write("gains.svg", plots::line_chart({"Cumulative gains", "fraction of companies reviewed", "downgrades captured"},
                                           {gains_series("benchmark", run.metrics.benchmark_gains),
                                            gains_series("final", run.metrics.final_gains), diagonal}));
  out.write("auc.svg", plots::bar_chart({"Holdout AUC", "", "AUC"}, {{"news", run.metrics.news_auc},
                                                                     {"benchmark", run.metrics.benchmark_auc},
                                                                     {"final", run.metrics.final_auc}}));
}

void print_metrics(const RunMetrics& m) {
  std::printf("news AUC       %.4f\n", m.news_auc);
  std::printf("benchmark AUC  %.4f\n", m.benchmark_auc);
  std::printf("final AUC      %.4f\n", m.final_auc);
  std::printf("AUC gain       %+.4f\n", m.final_auc - m.benchmark_auc);
  std::printf("recall         %.4f -> %.4f\n", m.benchmark_recall, m.final_recall);
}

json cmd_synth(const RunConfig& rc, OutDir& out) {
  auto bundle = generate(rc.generator);
  for (const auto& [name, content] : bundle.files) out.write(name, content);
  std::printf("generated %zu company-days, %zu positives\n", bundle.truth.size(), bundle.positives);
  return {{"rows", bundle.truth.size()}, {"positives", bundle.positives}};
}

json cmd_preprocess(const RunConfig& rc, OutDir& out) {
  auto paths = bundle_paths(rc, out);
  auto aliases = CompanyAliasTable::load(paths.aliases);
  auto stopwords = paths.stopwords ? load_stopwords(*paths.stopwords) : default_stopwords();
  auto result = preprocess_corpus(load_articles(paths.articles), aliases, stopwords, rc.pipeline.preprocess);
  out.write("documents.jsonl", documents_to_jsonl(result.documents));
  json dropped = json::object();
  for (const auto& [reason, n] : result.stats.dropped) dropped[to_string(reason)] = n;
  json stats = {{"articles_in", result.stats.articles_in},
                {"articles_kept", result.stats.articles_kept},
                {"documents", result.documents.size()},
                {"dropped", dropped}};
  out.write("preprocess_stats.json", stats.dump(2) + "\n");
  std::printf("%zu articles -> %zu kept -> %zu company-day documents\n", result.stats.articles_in,
              result.stats.articles_kept, result.documents.size());
  return stats;
}

json cmd_label(const RunConfig& rc, OutDir& out) {
  auto paths = bundle_paths(rc, out);
  auto benchmark = parse_benchmark_csv(io::read_file(paths.benchmark));
  auto table = build_label_table(load_ratings(paths.ratings), benchmark.keys, rc.pipeline.horizon_days);
  out.write("labels.csv", labels_to_csv(table.labels));
  out.write("label_summary.csv", label_summary_to_csv(table.summary));
  std::printf("%zu rows, positive rate %.4f\n", table.labels.size(), table.positive_rate());
  return {{"rows", table.labels.size()}, {"positive_rate", table.positive_rate()}};
}

json cmd_featurize(const RunConfig& rc, OutDir& out) {
  auto l = load_bundle(rc, out);
  auto split = split_keys(l->data.labels, rc.pipeline.split);
  std::vector<CleanDocument> train;
  for (const auto& d : l->data.documents)
    if (!split.in_holdout(d.key())) train.push_back(d);
  auto featurizer = fit_featurizer(rc.pipeline, train, l->resources);
  std::unordered_map<RowKey, int, RowKeyHash> labels;
  for (const auto& lab : l->data.labels) labels.emplace(lab.key(), lab.label);
  auto features = featurizer.transform_all(l->data.documents, labels);
  out.write("features.csv", features.to_csv());
  write_featurizer_artifacts(featurizer, out);
  std::printf("%zu documents x %zu features (%s)\n", features.rows(), features.cols(), to_string(rc.pipeline.approach));
  return {{"rows", features.rows()}, {"features", features.cols()}, {"featurizer_train_documents", train.size()}};
}

json cmd_train(const RunConfig& rc, OutDir& out) {
  auto l = load_bundle(rc, out);
  auto run = train_news_model(l->data, l->resources, rc.pipeline);
  write_featurizer_artifacts(run.news.featurizer, out);
  out.write("news_model.json", run.news.model.to_json());
  out.write("holdout_news_scores.csv", scored_to_csv(run.holdout));
  double recall = recall_at_threshold(run.holdout, rc.pipeline.threshold);
  json metrics = {{"news_auc", run.auc},
                  {"news_recall", recall},
                  {"threshold", rc.pipeline.threshold},
                  {"holdout_rows", run.holdout.size()},
                  {"holdout_positives", positives(run.holdout)}};
  out.write("news_metrics.json", metrics.dump(2) + "\n");
  std::printf("news AUC %.4f, recall %.4f (%s)\n", run.auc, recall, to_string(rc.pipeline.approach));
  return metrics;
}

json cmd_evaluate(const Flags& flags, const RunConfig& rc, OutDir& out) {
  if (flags.scores.empty()) throw Error(ErrorKind::ConfigError, "--scores is required for evaluate");
  out.input("scores", flags.scores);
  auto scored = parse_scored_csv(io::read_file(flags.scores));
  auto gains = cumulative_gains(scored, default_gains_grid());
  json metrics = {{"auc", auc(scored)},
                  {"recall", recall_at_threshold(scored, rc.pipeline.threshold)},
                  {"threshold", rc.pipeline.threshold},
                  {"rows", scored.size()},
                  {"positives", positives(scored)}};
  out.write("metrics.json", metrics.dump(2) + "\n");
  out.write("gains.csv", gains_to_csv(gains));
  out.write("gains.svg", plots::line_chart({"Cumulative gains", "fraction reviewed", "positives captured"},
                                           {gains_series("model", gains), {"random", {{0, 0}, {1, 1}}, true}}));
  std::printf("AUC %.6f\nrecall %.6f at threshold %g\n", metrics["auc"].get<double>(),
              metrics["recall"].get<double>(), rc.pipeline.threshold);
  return metrics;
}

json cmd_stack(const RunConfig& rc, OutDir& out) {
  auto l = load_bundle(rc, out);
  auto run = run_full_pipeline(l->data, l->resources, rc.pipeline);
  write_full_run(run, out);
  print_metrics(run.metrics);
  return metrics_json(run.metrics, rc.pipeline.threshold);
}

json cmd_robustness(const RunConfig& rc, OutDir& out, int threads) {
  auto l = load_bundle(rc, out);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < rc.seeds; ++i) seeds.push_back(rc.pipeline.seed + static_cast<std::uint64_t>(i));
  int n_threads = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto report = run_robustness(l->data, l->resources, rc.pipeline, seeds, n_threads);
  out.write("runs.csv", report.runs_to_csv());
  out.write("robustness.json", report.to_json());
  if (!report.gains.empty()) {
    auto h = histogram(report.gains, 10);
    out.write("histogram.csv", histogram_to_csv(h));
    out.write("histogram.svg", plots::histogram_chart({"AUC gain over seeds", "final AUC - benchmark AUC", "runs"}, h));
  }
  std::printf("%zu seeds, %zu positive gains, mean %.4f, std %.4f, std error %.4f, %zu failed\n", seeds.size(),
              report.positive_count, report.mean_gain, report.std_gain, report.std_error, report.failed_count);
  return json::parse(report.to_json());
}

json cmd_report(const RunConfig& rc, OutDir& out) {
  auto l = load_bundle(rc, out);
  auto run = run_full_pipeline(l->data, l->resources, rc.pipeline);
  write_full_run(run, out);
  std::unordered_set<RowKey, RowKeyHash> with_news;
  for (const auto& d : l->data.documents) with_news.insert(d.key());
  ScoredSet covered;
  for (const auto& r : run.final_model.holdout)
    if (with_news.count({r.pid, r.date})) covered.push_back(r);
  auto report = inspection_report(covered, rc.pipeline.threshold, l->data.documents);
  out.write("report.md", report.to_markdown());
  out.write("report.json", report.to_json());
  print_metrics(run.metrics);
  std::printf("true positives %zu (%zu companies), false negatives %zu (%zu companies)\n",
              report.true_positives.size(), report.tp_companies(), report.false_negatives.size(),
              report.fn_companies());
  auto summary = metrics_json(run.metrics, rc.pipeline.threshold);
  summary["true_positives"] = report.true_positives.size();
  summary["false_negatives"] = report.false_negatives.size();
  return summary;
}

json cmd_topics_select(const RunConfig& rc, OutDir& out) {
  auto paths = bundle_paths(rc, out);
  auto aliases = CompanyAliasTable::load(paths.aliases);
  auto stopwords = paths.stopwords ? load_stopwords(*paths.stopwords) : default_stopwords();
  auto docs = preprocess_corpus(load_articles(paths.articles), aliases, stopwords, rc.pipeline.preprocess).documents;
  std::vector<TokenList> corpus;
  for (const auto& d : docs) corpus.push_back(stem_tokens(d.tokens, stopwords));
  auto selection = select_topic_count(corpus, rc.k_grid, rc.pipeline.lda);
  out.write("coherence.csv", coherence_curve_to_csv(selection));
  plots::Series curve{"coherence", {}, false};
  for (const auto& [k, c] : selection.curve) curve.points.emplace_back(k, c);
  out.write("coherence.svg", plots::line_chart({"Topic coherence", "number of topics", "NPMI coherence"}, {curve}));
  json sel = {{"best_k", selection.best_k}, {"curve", json::array()}};
  for (const auto& [k, c] : selection.curve) sel["curve"].push_back({{"k", k}, {"coherence", c}});
  out.write("selection.json", sel.dump(2) + "\n");
  for (const auto& [k, c] : selection.curve) std::printf("K=%-3d coherence %.4f\n", k, c);
  std::printf("best K = %d\n", selection.best_k);
  return sel;
}

void report_error(bool as_json, const std::string& kind, const std::string& message, int code) {
  if (as_json)
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
  else
    std::cerr << "error: " << message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Credit downgrade prediction from company news"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Print errors as JSON on standard error");

  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "Generate a synthetic bundle"},
      {"preprocess", "Clean, filter and aggregate articles into company-day documents"},
      {"label", "Build downgrade labels from rating timelines"},
      {"featurize", "Fit a featurizer on the training split and featurize every document"},
      {"train", "Train and score the news model"},
      {"evaluate", "Compute AUC, recall and cumulative gains for a scored CSV"},
      {"stack", "Run the full news + benchmark stacking pipeline"},
      {"robustness", "Repeat the full pipeline over several seeds"},
      {"report", "Full pipeline plus true-positive / false-negative inspection"},
      {"topics-select", "Choose the LDA topic count by coherence"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON run configuration");
    sub->add_option("--seed", flags.seed, "Master seed");
    sub->add_option("--out-dir", flags.out_dir, "Output directory")->required();
    sub->add_flag("--json-errors", json_errors, "Print errors as JSON on standard error");
    if (name != "synth") {
      sub->add_option("--bundle", flags.bundle, "Input bundle directory");
      sub->add_option("--approach", flags.approach, "lexicon-lda | doc2vec | wordvec-avg");
      sub->add_option("--threshold", flags.threshold, "Classification threshold for recall");
    }
    if (name == "robustness") {
      sub->add_option("--seeds", flags.seeds, "Number of seeds");
      sub->add_option("--threads", flags.threads, "Worker threads (default: all cores)");
    }
    if (name == "evaluate") sub->add_option("--scores", flags.scores, "Scored CSV pid,date,score,label");
    if (name == "topics-select") sub->add_option("--k-grid", flags.k_grid, "Comma-separated topic counts");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    for (int i = 1; i < argc; ++i) json_errors = json_errors || std::string(argv[i]) == "--json-errors";
    report_error(json_errors, "UsageError", e.what(), 1);
    return 1;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    auto rc = resolve_config(flags);
    OutDir out(flags.out_dir);
    json summary;
    if (name == "synth") summary = cmd_synth(rc, out);
    else if (name == "preprocess") summary = cmd_preprocess(rc, out);
    else if (name == "label") summary = cmd_label(rc, out);
    else if (name == "featurize") summary = cmd_featurize(rc, out);
    else if (name == "train") summary = cmd_train(rc, out);
    else if (name == "evaluate") summary = cmd_evaluate(flags, rc, out);
    else if (name == "stack") summary = cmd_stack(rc, out);
    else if (name == "robustness") summary = cmd_robustness(rc, out, flags.threads);
    else if (name == "report") summary = cmd_report(rc, out);
    else summary = cmd_topics_select(rc, out);
    out.finish(name, rc, summary);
    return 0;
  } catch (const Error& e) {
    int code = is_validation_error(e.kind()) ? 1 : 2;
    report_error(json_errors, to_string(e.kind()), e.what(), code);
    return code;
  } catch (const json::exception& e) {
    report_error(json_errors, "ConfigError", e.what(), 1);
    return 1;
  } catch (const std::exception& e) {
    report_error(json_errors, "RuntimeError", e.what(), 2);
    return 2;
  }
}
