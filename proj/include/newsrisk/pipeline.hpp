#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "newsrisk/classifier.hpp"
#include "newsrisk/corpus.hpp"
#include "newsrisk/embeddings.hpp"
#include "newsrisk/evaluation.hpp"
#include "newsrisk/lexicon.hpp"
#include "newsrisk/ratings.hpp"
#include "newsrisk/topics.hpp"

namespace newsrisk {

enum class Approach { LexiconLda, Doc2Vec, WordvecAverage };

/// "lexicon-lda", "doc2vec", "wordvec-avg"
const char* to_string(Approach approach);
/// Accepts the hyphenated names and their underscore spellings.
Approach parse_approach(std::string_view text);

struct SplitConfig {
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  bool stratify = false;
};

struct PipelineConfig {
  Approach approach = Approach::WordvecAverage;
  PreprocessConfig preprocess = [] {
    PreprocessConfig p;
    p.cleaning.boilerplate_patterns = {"^(reporting|writing|editing) by "};
    return p;
  }();
  int horizon_days = 365;
  LdaConfig lda;
  int lda_infer_iterations = 50;
  Doc2VecConfig doc2vec;
  SplitConfig split;
  SmoteConfig smote;
  FitConfig fit;
  int stack_folds = 5;
  double missing_news_fill = 0.5;
  bool drop_missing_news = false;
  double threshold = 0.5;
  /// Master seed; with_seed() derives every stage seed from it.
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
  /// Copy whose split, fold, SMOTE, LDA, Doc2Vec and fit seeds all derive from `seed`.
  PipelineConfig with_seed(std::uint64_t seed) const;
  nlohmann::json to_json() const;
  /// Missing keys keep defaults; unknown keys throw ConfigError.
  static PipelineConfig from_json(const nlohmann::json& j);
};

struct NewsResources {
  LexiconSet lexicons;
  WordSet negators = default_negators();
  WordVectorTable vectors;
  StopwordSet stopwords = default_stopwords();
};

/// Loads lexicons/<name>.txt for every lexicon in the fixed order.
LexiconSet load_lexicon_dir(const std::filesystem::path& dir);

struct NewsData {
  std::vector<CleanDocument> documents;  // unstemmed tokens, sorted by key
  std::vector<DowngradeLabel> labels;    // one per observation key
  Dataset benchmark;                     // 9 columns, labelled, row-aligned with `labels`
};

inline constexpr std::size_t kBenchmarkFeatures = 9;

/// CSV pid,date,<9 feature columns>. Labels are left empty.
Dataset parse_benchmark_csv(std::string_view text);
/// Fills labels by key; throws JoinKeyMismatch for rows without a label.
void attach_labels(Dataset& data, std::span<const DowngradeLabel> labels);

/// Bundle layout produced by the generator.
struct BundlePaths {
  std::filesystem::path articles, aliases, ratings, benchmark, vectors, lexicon_dir;
  std::optional<std::filesystem::path> stopwords;
  static BundlePaths in(const std::filesystem::path& dir);
};

/// Reads lexicons and stopwords; word vectors are loaded only when
/// `vocabulary` is given, restricted to those words.
NewsResources load_resources(const BundlePaths& paths, const std::unordered_set<std::string>* vocabulary);
/// Preprocesses articles, labels every benchmark row, and joins.
NewsData prepare_news_data(const BundlePaths& paths, const PipelineConfig& config);
std::unordered_set<std::string> corpus_vocabulary(std::span<const CleanDocument> documents);

/// Porter-stems tokens and drops any that become stopwords.
TokenList stem_tokens(std::span<const std::string> tokens, const StopwordSet& stopwords);

/// [5 lexicon scores] ++ [K topic proportions] ++ [articles_merged, downgrade indicator].
std::vector<double> featurize_lexicon_lda(const CleanDocument& doc, const NewsResources& resources,
                                          const LdaModel& lda, int infer_iterations, std::uint64_t seed);
std::vector<double> featurize_embedding(const CleanDocument& doc, const Doc2VecModel& model, const StopwordSet& stopwords,
                                        std::uint64_t seed);
std::vector<double> featurize_embedding(const CleanDocument& doc, const WordVectorTable& table);

/// Which keys each stage consumed, in execution order.
struct TraceEvent {
  std::string stage;
  std::vector<RowKey> keys;
};

struct RunTrace {
  std::vector<TraceEvent> events;
  void record(std::string stage, std::vector<RowKey> keys);
};

/// Featurizer artifacts fitted on one set of training documents.
struct FittedFeaturizer {
  Approach approach = Approach::WordvecAverage;
  std::vector<std::string> feature_names;
  std::optional<LdaModel> lda;
  std::optional<Doc2VecModel> doc2vec;
  const NewsResources* resources = nullptr;
  int lda_infer_iterations = 50;
  std::uint64_t seed = 1;

  std::vector<double> transform(const CleanDocument& doc) const;
  /// Rows in document order, labels looked up by key (JoinKeyMismatch when absent).
  Dataset transform_all(std::span<const CleanDocument> docs,
                        const std::unordered_map<RowKey, int, RowKeyHash>& labels) const;
};

FittedFeaturizer fit_featurizer(const PipelineConfig& config, std::span<const CleanDocument> train_docs,
                                const NewsResources& resources, RunTrace* trace = nullptr);

struct Split {
  std::vector<RowKey> train;    // sorted
  std::vector<RowKey> holdout;  // sorted
  bool in_holdout(const RowKey& key) const;
};

/// Random split of labelled keys; stratified per class when configured.
Split split_keys(std::span<const DowngradeLabel> labels, const SplitConfig& config);

/// SMOTE then logistic fit on the given training rows.
LogisticModel fit_balanced(const Dataset& train, const PipelineConfig& config, RunTrace* trace = nullptr,
                           const std::string& stage = "model");

ScoredSet score_dataset(const LogisticModel& model, const Dataset& data);

struct NewsModel {
  FittedFeaturizer featurizer;
  LogisticModel model;
};

NewsModel fit_news_model(const PipelineConfig& config, std::span<const CleanDocument> train_docs,
                         const std::unordered_map<RowKey, int, RowKeyHash>& labels, const NewsResources& resources,
                         RunTrace* trace = nullptr);

struct NewsRun {
  Split split;
  NewsModel news;
  ScoredSet holdout;  // holdout rows that have a document
  double auc = 0.0;
};

/// Splits all labelled rows, fits the featurizer and classifier on training
/// documents, and scores holdout documents.
NewsRun train_news_model(const NewsData& data, const NewsResources& resources, const PipelineConfig& config,
                         RunTrace* trace = nullptr);

struct ModelRun {
  LogisticModel model;
  ScoredSet holdout;
};

/// Fits on split.train rows of a labelled dataset and scores split.holdout rows.
ModelRun train_on_split(const Dataset& data, const Split& split, const PipelineConfig& config, RunTrace* trace,
                        const std::string& stage);
ModelRun train_benchmark(const Dataset& benchmark, const Split& split, const PipelineConfig& config,
                         RunTrace* trace = nullptr);

struct StackResult {
  Dataset stacked;                          // benchmark columns + news_prob, all rows
  std::vector<int> fold;                    // per row: OOF fold, -1 for holdout, -2 for no news
  std::vector<std::vector<RowKey>> fold_fit_keys;
};

/// Adds `news_prob`: out-of-fold predictions for training rows, the full news
/// model's predictions for holdout rows, and the configured fill when a row has
/// no document (or drops such rows when drop_missing_news is set).
StackResult stack(const Dataset& benchmark, const NewsData& data, const Split& split, const NewsModel& news,
                  const NewsResources& resources, const PipelineConfig& config, RunTrace* trace = nullptr);

struct RunMetrics {
  double news_auc = 0.0;
  double benchmark_auc = 0.0;
  double final_auc = 0.0;
  double benchmark_recall = 0.0;
  double final_recall = 0.0;
  GainsCurve benchmark_gains;
  GainsCurve final_gains;
};

struct FullRun {
  PipelineConfig config;
  NewsRun news;
  ModelRun benchmark;
  ModelRun final_model;
  StackResult stacked;
  RunMetrics metrics;
  RunTrace trace;

  std::string metrics_csv() const;
  /// Config, seeds, artifact hashes and metrics; contains no timestamps.
  std::string manifest_json() const;
};

FullRun run_full_pipeline(const NewsData& data, const NewsResources& resources, const PipelineConfig& config);

/// Robustness harness over `seeds`, each run using config.with_seed(seed).
RobustnessReport run_robustness(const NewsData& data, const NewsResources& resources, const PipelineConfig& config,
                                std::span<const std::uint64_t> seeds, int threads = 1);

}  // namespace newsrisk
