#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "newsrisk/classifier.hpp"
#include "newsrisk/embeddings.hpp"
#include "newsrisk/evaluation.hpp"
#include "newsrisk/io.hpp"
#include "newsrisk/pipeline.hpp"
#include "newsrisk/synthgen.hpp"
#include "newsrisk/topics.hpp"

namespace fs = std::filesystem;
using namespace newsrisk;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("newsrisk_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Bundle {
  NewsData data;
  NewsResources resources;
};

std::unique_ptr<Bundle> load(const GeneratorConfig& g, const std::string& name) {
  auto dir = work_dir() / name;
  generate(g).write(dir);
  auto b = std::make_unique<Bundle>();
  auto paths = BundlePaths::in(dir);
  b->data = prepare_news_data(paths, PipelineConfig{});
  auto vocab = corpus_vocabulary(b->data.documents);
  b->resources = load_resources(paths, &vocab);
  return b;
}

GeneratorConfig desk_bundle(double news, double bench, double complementarity) {
  GeneratorConfig g;
  g.n_companies = 100;
  g.n_days = 20;
  g.downgrade_rate = 0.05;
  g.news_signal_strength = news;
  g.benchmark_signal_strength = bench;
  g.complementarity = complementarity;
  g.seed = 1;
  return g;
}

// A3 and A5 share one bundle
const Bundle& stacking_bundle() {
  static const auto b = load(desk_bundle(0.6, 0.6, 0.75), "stacking");
  return *b;
}

// ---------------------------------------------------------------- A1

double brute_force_auc(const ScoredSet& s) {
  long double wins = 0, pairs = 0;
  for (const auto& p : s) {
    if (p.label != 1) continue;
    for (const auto& n : s) {
      if (n.label != 0) continue;
      pairs += 1;
      wins += p.score > n.score ? 1.0L : p.score == n.score ? 0.5L : 0.0L;
    }
  }
  return static_cast<double>(wins / pairs);
}

Outcome a1() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  bool gains_ok = true, recall_ok = true;
  auto grid = default_gains_grid();
  for (int set = 0; set < 200; ++set) {
    std::size_t n = set == 0 ? 10000 : 2 + rng() % 9999;
    int levels = 1 + static_cast<int>(rng() % 50);  // few levels inject ties
    double prevalence = 0.02 + 0.5 * static_cast<double>(rng() % 1000) / 1000.0;
    ScoredSet s;
    for (std::size_t i = 0; i < n; ++i) {
      int label = std::uniform_real_distribution<double>(0, 1)(rng) < prevalence;
      double score = set % 2 ? static_cast<double>(rng() % static_cast<unsigned>(levels)) / levels
                             : std::uniform_real_distribution<double>(0, 1)(rng);
      s.push_back({"P" + std::to_string(i % 17), Date(2020, 1, 1), score, label});
    }
    s[0].label = 1;
    s[1].label = 0;
    worst = std::max(worst, std::abs(auc(s) - brute_force_auc(s)));

    auto curve = cumulative_gains(s, grid);
    for (std::size_t i = 1; i < curve.size(); ++i) gains_ok = gains_ok && curve[i].captured >= curve[i - 1].captured;
    gains_ok = gains_ok && curve.back().fraction == 1.0 && curve.back().captured == 1.0;

    double previous = 2.0;
    for (int t = 0; t <= 50; ++t) {
      double r = recall_at_threshold(s, t / 50.0);
      recall_ok = recall_ok && r <= previous;
      previous = r;
    }
  }
  return {worst <= 1e-12 && gains_ok && recall_ok,
          fmt("200 sets, max |auc - brute force| = %.2e, gains monotone+anchored %s, recall non-increasing %s", worst,
              gains_ok ? "yes" : "no", recall_ok ? "yes" : "no")};
}

// ---------------------------------------------------------------- A2

Outcome a2() {
  auto b = load(desk_bundle(0.8, 0.6, 0.0), "signal");
  std::size_t positives = 0;
  for (const auto& l : b->data.labels) positives += static_cast<std::size_t>(l.label);
  double result[3];
  const Approach approaches[3] = {Approach::LexiconLda, Approach::Doc2Vec, Approach::WordvecAverage};
  for (int i = 0; i < 3; ++i) {
    PipelineConfig cfg;
    cfg.approach = approaches[i];
    result[i] = train_news_model(b->data, b->resources, cfg).auc;
  }
  double lex = result[0], d2v = result[1], wv = result[2];
  bool pass = wv >= 0.85 && lex <= d2v && d2v <= wv && wv - std::max(lex, d2v) >= 0.03;
  return {pass, fmt("%zu rows, %zu positives; holdout AUC lexicon-lda %.4f, doc2vec %.4f, wordvec-avg %.4f "
                    "(need wordvec >= 0.85, ordering, margin >= 0.03: margin %.4f)",
                    b->data.labels.size(), positives, lex, d2v, wv, wv - std::max(lex, d2v))};
}

// ---------------------------------------------------------------- A3

Outcome a3() {
  const auto& b = stacking_bundle();
  auto run = run_full_pipeline(b.data, b.resources, PipelineConfig{});
  double gain = run.metrics.final_auc - run.metrics.benchmark_auc;
  return {gain >= 0.02, fmt("benchmark AUC %.4f, final AUC %.4f, gain %+.4f (need >= 0.02); news AUC %.4f",
                            run.metrics.benchmark_auc, run.metrics.final_auc, gain, run.metrics.news_auc)};
}

// ---------------------------------------------------------------- A4

double rel_error(double numeric, double analytic) {
  return std::abs(numeric - analytic) / std::max(1e-8, std::abs(numeric) + std::abs(analytic));
}

double logistic_check() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 200, d = 10;
    Eigen::MatrixXd x(n, d);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
      y[static_cast<std::size_t>(i)] = normal(rng) + x(i, 0) > 0.8;
    }
    Eigen::VectorXd w(d);
    for (Eigen::Index j = 0; j < d; ++j) w(j) = normal(rng);
    double b = normal(rng), lambda = 0.01 * trial;
    auto g = logistic_gradient(x, y, w, b, lambda);
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < d; ++j) {
      Eigen::VectorXd up = w, down = w;
      up(j) += h;
      down(j) -= h;
      double numeric = (logistic_objective(x, y, up, b, lambda) - logistic_objective(x, y, down, b, lambda)) / (2 * h);
      worst = std::max(worst, rel_error(numeric, g.w(j)));
    }
    double numeric_b = (logistic_objective(x, y, w, b + h, lambda) - logistic_objective(x, y, w, b - h, lambda)) / (2 * h);
    worst = std::max(worst, rel_error(numeric_b, g.b));
  }
  return worst;
}

double pvdm_check() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 0.5);
  const std::size_t dim = 16;
  auto vec = [&] {
    std::vector<double> v(dim);
    for (auto& x : v) x = normal(rng);
    return v;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto doc = vec();
    std::vector<std::vector<double>> context(static_cast<std::size_t>(2 + trial % 9));
    for (auto& c : context) c = vec();
    auto target = vec();
    std::vector<std::vector<double>> noise(5);
    for (auto& v : noise) v = vec();
    auto g = pvdm_gradient(doc, context, target, noise);
    const double h = 1e-5;
    auto check = [&](std::vector<double>& param, const std::vector<double>& analytic) {
      for (std::size_t k = 0; k < dim; ++k) {
        double saved = param[k];
        param[k] = saved + h;
        double up = pvdm_objective(doc, context, target, noise);
        param[k] = saved - h;
        double down = pvdm_objective(doc, context, target, noise);
        param[k] = saved;
        worst = std::max(worst, rel_error((up - down) / (2 * h), analytic[k]));
      }
    };
    check(doc, g.doc);
    for (std::size_t c = 0; c < context.size(); ++c) check(context[c], g.context[c]);
    check(target, g.target);
    for (std::size_t v = 0; v < noise.size(); ++v) check(noise[v], g.noise[v]);
  }
  return worst;
}

// Recounts every count matrix from the raw assignments.
bool counts_consistent(const GibbsTrainer& t) {
  const auto& m = t.model();
  const auto k = static_cast<std::size_t>(m.num_topics);
  const std::size_t v = m.vocab.size();
  std::vector<std::int64_t> kw(k * v, 0), totals(k, 0);
  const auto& offsets = t.doc_offsets();
  std::vector<std::int64_t> dk((offsets.size() - 1) * k, 0);
  for (std::size_t d = 0; d + 1 < offsets.size(); ++d)
    for (std::size_t i = offsets[d]; i < offsets[d + 1]; ++i) {
      auto topic = static_cast<std::size_t>(t.assignments()[i]);
      if (topic >= k) return false;
      ++kw[topic * v + static_cast<std::size_t>(t.token_words()[i])];
      ++totals[topic];
      ++dk[d * k + topic];
    }
  std::int64_t sum = 0;
  for (auto c : t.topic_totals()) sum += c;
  return kw == t.topic_word_counts() && totals == t.topic_totals() && dk == t.doc_topic_counts() &&
         sum == t.total_tokens();
}

Outcome a4() {
  double logistic = logistic_check();
  double pvdm = pvdm_check();
  auto corpus = planted_topic_corpus(5, 500, 60, 20, 0.7, 11);
  LdaConfig cfg;
  cfg.num_topics = 5;
  cfg.iterations = 200;
  int sweeps = 0, violations = 0;
  train_lda(corpus.documents, cfg, [&](const GibbsTrainer& t) {
    ++sweeps;
    if (!counts_consistent(t)) ++violations;
  });
  bool pass = logistic <= 1e-6 && pvdm <= 1e-4 && sweeps == cfg.iterations && violations == 0;
  return {pass, fmt("logistic max rel err %.2e (<= 1e-6), PV-DM max rel err %.2e (<= 1e-4), LDA 500 docs: "
                    "%d sweeps, %d count violations",
                    logistic, pvdm, sweeps, violations)};
}

// ---------------------------------------------------------------- A5

Outcome a5() {
  const auto& b = stacking_bundle();
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto report = run_robustness(b.data, b.resources, PipelineConfig{}, seeds, threads);
  auto h = histogram(report.gains, 10);
  auto csv = io::parse_csv(histogram_to_csv(h));
  bool csv_ok = csv.header == std::vector<std::string>{"bin_left", "bin_right", "count"} && csv.rows.size() == 10;
  long total = 0;
  double last_right = -INFINITY;
  for (const auto& row : csv.rows) {
    if (row.size() != 3) {
      csv_ok = false;
      continue;
    }
    double left = std::stod(row[0]), right = std::stod(row[1]);
    csv_ok = csv_ok && left < right && (std::isinf(last_right) || left == last_right);
    last_right = right;
    total += std::stol(row[2]);
  }
  csv_ok = csv_ok && total == static_cast<long>(report.gains.size());
  bool pass = report.failed_count == 0 && report.positive_count >= 18 && csv_ok;
  return {pass, fmt("%zu/20 positive gains (need >= 18), mean %.4f, std %.4f, std error %.4f, failed %zu, "
                    "histogram CSV %s",
                    report.positive_count, report.mean_gain, report.std_gain, report.std_error, report.failed_count,
                    csv_ok ? "well-formed" : "malformed")};
}

// ---------------------------------------------------------------- A6

Outcome a6() {
  auto corpus = planted_topic_corpus(4, 400, 80, 30, 0.8, 1);
  LdaConfig base;
  base.seed = 1;
  auto sel = select_topic_count(corpus.documents, {2, 4, 6, 8}, base);
  std::string curve;
  for (const auto& [k, c] : sel.curve) curve += fmt(" K=%d:%.4f", k, c);
  bool exact = sel.best_k == 4;
  bool pass = exact || sel.best_k == 2 || sel.best_k == 6;
  return {pass, fmt("selected K=%d (%s);%s", sel.best_k, exact ? "exact" : "within one grid step", curve.c_str())};
}

// ---------------------------------------------------------------- A7

std::string slurp(const fs::path& p) { return fs::exists(p) ? io::read_file(p) : std::string("<missing>"); }

Outcome a7(const std::string& cli) {
  if (cli.empty()) return {false, "CLI path not provided"};
  auto dir = work_dir() / "determinism";
  auto run = [&](const std::string& args) {
    std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  std::string bundle = (dir / "bundle").string();
  int rc = run("synth --seed 7 --out-dir \"" + bundle + "\"");
  rc |= run("synth --seed 7 --out-dir \"" + (dir / "bundle_again").string() + "\"");
  for (const char* out : {"run1", "run2"})
    rc |= run("stack --approach doc2vec --seed 3 --bundle \"" + bundle + "\" --out-dir \"" + (dir / out).string() + "\"");
  if (rc != 0) return {false, "CLI invocation failed"};
  bool same = slurp(dir / "bundle" / "synth.manifest.json") == slurp(dir / "bundle_again" / "synth.manifest.json");
  int compared = 1;
  for (const char* f : {"stack.manifest.json", "run_manifest.json", "metrics.csv", "gains.csv"}) {
    same = same && slurp(dir / "run1" / f) == slurp(dir / "run2" / f) && slurp(dir / "run1" / f) != "<missing>";
    ++compared;
  }

  // in-process runs of every approach
  const auto& b = stacking_bundle();
  for (auto a : {Approach::LexiconLda, Approach::Doc2Vec, Approach::WordvecAverage}) {
    PipelineConfig cfg;
    cfg.approach = a;
    cfg.lda.iterations = 200;
    auto x = run_full_pipeline(b.data, b.resources, cfg);
    auto y = run_full_pipeline(b.data, b.resources, cfg);
    same = same && x.manifest_json() == y.manifest_json() && x.metrics_csv() == y.metrics_csv();
    compared += 2;
  }
  return {same, fmt("%d manifest/metric files compared across repeated runs: %s", compared,
                    same ? "byte-identical" : "DIFFERENT")};
}

// ---------------------------------------------------------------- A8

double segment_distance(const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  Eigen::RowVectorXd ab = b - a;
  double len2 = ab.squaredNorm();
  double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

Outcome a8() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  const std::size_t majority = 4000, minority = 200, d = 5;
  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(majority + minority), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < majority + minority; ++r) {
    int y = r >= majority;
    for (std::size_t c = 0; c < d; ++c)
      data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          normal(rng) * static_cast<double>(c + 1) + (y ? 1.5 : 0.0);
    data.labels.push_back(y);
  }
  for (std::size_t c = 0; c < d; ++c) data.feature_names.push_back("x" + std::to_string(c));
  const Dataset original = data;

  SmoteConfig cfg;
  cfg.k_neighbors = 5;
  cfg.target_minority_ratio = 0.3;  // ceil(0.3 * 4000) - 200 = 1000 synthetic rows
  auto out = smote(data, cfg);

  // independent k-NN among minority rows on z-scored features
  Eigen::RowVectorXd mean = original.features.colwise().mean();
  Eigen::RowVectorXd sd = ((original.features.rowwise() - mean).array().square().colwise().sum() /
                           static_cast<double>(original.rows() - 1)).sqrt();
  std::vector<std::vector<std::size_t>> knn(minority);
  for (std::size_t i = 0; i < minority; ++i) {
    std::vector<std::pair<double, std::size_t>> dist;
    auto zi = ((original.features.row(static_cast<Eigen::Index>(majority + i)) - mean).array() / sd.array()).matrix();
    for (std::size_t j = 0; j < minority; ++j) {
      if (j == i) continue;
      auto zj = ((original.features.row(static_cast<Eigen::Index>(majority + j)) - mean).array() / sd.array()).matrix();
      dist.emplace_back((zi - zj).squaredNorm(), j);
    }
    std::sort(dist.begin(), dist.end());
    // allow neighbours tied with the k-th distance
    for (const auto& [dd, j] : dist)
      if (knn[i].size() < 5 || dd <= dist[4].first * (1 + 1e-12)) knn[i].push_back(j);
  }

  std::size_t synthetic = out.rows() - original.rows();
  std::size_t off_segment = 0;
  double worst = 0.0;
  for (std::size_t s = 0; s < synthetic; ++s) {
    Eigen::RowVectorXd p = out.features.row(static_cast<Eigen::Index>(original.rows() + s));
    double best = INFINITY;
    for (std::size_t i = 0; i < minority; ++i)
      for (auto j : knn[i])
        best = std::min(best, segment_distance(p, original.features.row(static_cast<Eigen::Index>(majority + i)),
                                               original.features.row(static_cast<Eigen::Index>(majority + j))));
    worst = std::max(worst, best);
    off_segment += best > 1e-9;
  }
  std::size_t pos = 0;
  for (int y : out.labels) pos += static_cast<std::size_t>(y);
  bool ratio_exact = pos * 10 == (out.rows() - pos) * 3;
  std::size_t mutated = 0;
  for (std::size_t r = 0; r < original.rows(); ++r)
    mutated += !(out.features.row(static_cast<Eigen::Index>(r)) == original.features.row(static_cast<Eigen::Index>(r))) ||
               out.labels[r] != original.labels[r];
  bool pass = synthetic == 1000 && off_segment == 0 && ratio_exact && mutated == 0;
  return {pass, fmt("%zu synthetic rows, %zu off a neighbour segment (max distance %.2e), minority:majority %zu:%zu "
                    "(target 0.3 %s), %zu original rows mutated",
                    synthetic, off_segment, worst, pos, out.rows() - pos, ratio_exact ? "exact" : "missed", mutated)};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli = argc > 1 ? argv[1] : "";
  struct Criterion {
    const char* id;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"A1", 30, a1},  {"A2", 600, a2},  {"A3", 600, a3}, {"A4", 0, a4},
      {"A5", 1800, a5}, {"A6", 300, a6}, {"A7", 0, [&] { return a7(cli); }}, {"A8", 0, a8}};
  int failures = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && seconds > c.budget_seconds) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.budget_seconds);
    }
    failures += !o.pass;
    std::printf("%s %s %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::error_code ec;
  fs::remove_all(work_dir(), ec);
  return failures == 0 ? 0 : 1;
}
