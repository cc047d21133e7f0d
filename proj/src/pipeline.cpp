#include "newsrisk/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>

#include "newsrisk/io.hpp"
#include "newsrisk/porter.hpp"

namespace newsrisk {

using json = nlohmann::json;

const char* to_string(Approach approach) {
  switch (approach) {
    case Approach::LexiconLda: return "lexicon-lda";
    case Approach::Doc2Vec: return "doc2vec";
    case Approach::WordvecAverage: return "wordvec-avg";
  }
  return "?";
}

Approach parse_approach(std::string_view text) {
  if (text == "lexicon-lda" || text == "lexicon_lda") return Approach::LexiconLda;
  if (text == "doc2vec") return Approach::Doc2Vec;
  if (text == "wordvec-avg" || text == "wordvec_avg" || text == "wordvec_average" || text == "wordvec-average")
    return Approach::WordvecAverage;
  throw Error(ErrorKind::ConfigError, "unknown approach '" + std::string(text) + "'");
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); };
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) fail("split.train_fraction must be in (0, 1)");
  if (preprocess.stemming) fail("preprocess.stemming must be false: stemming is applied inside the topic and doc2vec featurizers");
  if (lda.num_topics < 1 || lda.iterations < 0 || lda_infer_iterations < 1) fail("invalid lda settings");
  if (doc2vec.dim < 1 || doc2vec.window < 1 || doc2vec.epochs < 1) fail("invalid doc2vec settings");
  if (smote.k_neighbors < 1 || !(smote.target_minority_ratio > 0.0 && smote.target_minority_ratio <= 1.0))
    fail("invalid smote settings");
  if (fit.l2_lambda < 0 || fit.max_epochs < 0 || fit.tolerance <= 0) fail("invalid classifier settings");
  if (stack_folds < 2) fail("stacking.folds must be >= 2");
  if (!(missing_news_fill >= 0.0 && missing_news_fill <= 1.0)) fail("stacking.missing_news_fill must be in [0, 1]");
  if (horizon_days < 1) fail("horizon_days must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) fail("threshold must be in [0, 1]");
}

PipelineConfig PipelineConfig::with_seed(std::uint64_t s) const {
  PipelineConfig c = *this;
  c.seed = s;
  c.split.seed = s;
  c.smote.seed = mix_seed(s, "smote");
  c.lda.seed = mix_seed(s, "lda");
  c.doc2vec.seed = mix_seed(s, "doc2vec");
  c.fit.seed = s;
  return c;
}

json PipelineConfig::to_json() const {
  json formats = json::array();
  for (auto tag : preprocess.multi_company_formats) formats.push_back(newsrisk::to_string(tag));
  json j;
  j["approach"] = newsrisk::to_string(approach);
  j["preprocess"] = {{"min_body_tokens", preprocess.cleaning.min_body_tokens},
                     {"boilerplate_patterns", preprocess.cleaning.boilerplate_patterns},
                     {"strip_html", preprocess.cleaning.strip_html},
                     {"fuzzy_threshold", preprocess.fuzzy_threshold},
                     {"multi_company_formats", formats},
                     {"stemming", preprocess.stemming}};
  j["horizon_days"] = horizon_days;
  j["lda"] = {{"num_topics", lda.num_topics},
              {"alpha", lda.alpha ? json(*lda.alpha) : json(nullptr)},
              {"beta", lda.beta},
              {"iterations", lda.iterations},
              {"infer_iterations", lda_infer_iterations},
              {"seed", lda.seed},
              {"min_count", lda.min_count},
              {"max_doc_fraction", lda.max_doc_fraction}};
  j["doc2vec"] = {{"dim", doc2vec.dim},
                  {"window", doc2vec.window},
                  {"epochs", doc2vec.epochs},
                  {"negative_samples", doc2vec.negative_samples},
                  {"initial_lr", doc2vec.initial_lr},
                  {"min_lr", doc2vec.min_lr},
                  {"min_count", doc2vec.min_count},
                  {"infer_steps", doc2vec.infer_steps},
                  {"seed", doc2vec.seed}};
  j["split"] = {{"train_fraction", split.train_fraction}, {"seed", split.seed}, {"stratify", split.stratify}};
  j["smote"] = {{"k_neighbors", smote.k_neighbors},
                {"target_minority_ratio", smote.target_minority_ratio},
                {"seed", smote.seed}};
  j["classifier"] = {{"l2_lambda", fit.l2_lambda},
                     {"max_epochs", fit.max_epochs},
                     {"tolerance", fit.tolerance},
                     {"seed", fit.seed}};
  j["stacking"] = {{"folds", stack_folds},
                   {"missing_news_fill", missing_news_fill},
                   {"drop_missing_news", drop_missing_news}};
  j["threshold"] = threshold;
  j["seed"] = seed;
  return j;
}

namespace {

template <class Handler>
void each_key(const json& obj, const std::string& where, Handler&& handle) {
  if (!obj.is_object()) throw Error(ErrorKind::ConfigError, "'" + where + "' must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    std::string path = where.empty() ? key : where + "." + key;
    if (!handle(key, value)) throw Error(ErrorKind::ConfigError, "unknown config key '" + path + "'");
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  try {
    each_key(j, "", [&](const std::string& key, const json& v) {
      if (key == "approach") {
        c.approach = parse_approach(v.get<std::string>());
      } else if (key == "preprocess") {
        each_key(v, key, [&](const std::string& k, const json& x) {
          if (k == "min_body_tokens") c.preprocess.cleaning.min_body_tokens = x.get<std::size_t>();
          else if (k == "boilerplate_patterns") c.preprocess.cleaning.boilerplate_patterns = x.get<std::vector<std::string>>();
          else if (k == "strip_html") c.preprocess.cleaning.strip_html = x.get<bool>();
          else if (k == "fuzzy_threshold") c.preprocess.fuzzy_threshold = x.get<double>();
          else if (k == "stemming") c.preprocess.stemming = x.get<bool>();
          else if (k == "multi_company_formats") {
            c.preprocess.multi_company_formats.clear();
            for (const auto& t : x) c.preprocess.multi_company_formats.insert(parse_format_tag(t.get<std::string>()));
          } else return false;
          return true;
        });
      } else if (key == "horizon_days") {
        c.horizon_days = v.get<int>();
      } else if (key == "lda") {
        each_key(v, key, [&](const std::string& k, const json& x) {
          if (k == "num_topics") c.lda.num_topics = x.get<int>();
          else if (k == "alpha") c.lda.alpha = x.is_null() ? std::nullopt : std::optional<double>(x.get<double>());
          else if (k == "beta") c.lda.beta = x.get<double>();
          else if (k == "iterations") c.lda.iterations = x.get<int>();
          else if (k == "infer_iterations") c.lda_infer_iterations = x.get<int>();
          else if (k == "seed") c.lda.seed = x.get<std::uint64_t>();
          else if (k == "min_count") c.lda.min_count = x.get<int>();
          else if (k == "max_doc_fraction") c.lda.max_doc_fraction = x.get<double>();
          else return false;
          return true;
        });
      } else if (key == "doc2vec") {
        each_key(v, key, [&](const std::string& k, const json& x) {
          if (k == "dim") c.doc2vec.dim = x.get<int>();
          else if (k == "window") c.doc2vec.window = x.get<int>();
          else if (k == "epochs") c.doc2vec.epochs = x.get<int>();
          else if (k == "negative_samples") c.doc2vec.negative_samples = x.get<int>();
          else if (k == "initial_lr") c.doc2vec.initial_lr = x.get<double>();
          else if (k == "min_lr") c.doc2vec.min_lr = x.get<double>();
          else if (k == "min_count") c.doc2vec.min_count = x.get<int>();
          else if (k == "infer_steps") c.doc2vec.infer_steps = x.get<int>();
          else if (k == "seed") c.doc2vec.seed = x.get<std::uint64_t>();
          else return false;
          return true;
        });
      } else if (key == "split") {
        each_key(v, key, [&](const std::string& k, const json& x) {
          if (k == "train_fraction") c.split.train_fraction = x.get<double>();
          else if (k == "seed") c.split.seed = x.get<std::uint64_t>();
          else if (k == "stratify") c.split.stratify = x.get<bool>();
          else return false;
          return true;
        });
      } else if (key == "smote") {
        each_key(v, key, [&](const std::string& k, const json& x) {
          if (k == "k_neighbors") c.smote.k_neighbors = x.get<int>();
          else if (k == "target_minority_ratio") c.smote.target_minority_ratio = x.get<double>();
          else if (k == "seed") c.smote.seed = x.get<std::uint64_t>();
          else return false;
          return true;
        });
      } else if (key == "classifier") {
        each_key(v, key, [&](const std::string& k, const json& x) {
          if (k == "l2_lambda") c.fit.l2_lambda = x.get<double>();
          else if (k == "max_epochs") c.fit.max_epochs = x.get<int>();
          else if (k == "tolerance") c.fit.tolerance = x.get<double>();
          else if (k == "seed") c.fit.seed = x.get<std::uint64_t>();
          else return false;
          return true;
        });
      } else if (key == "stacking") {
        each_key(v, key, [&](const std::string& k, const json& x) {
          if (k == "folds") c.stack_folds = x.get<int>();
          else if (k == "missing_news_fill") c.missing_news_fill = x.get<double>();
          else if (k == "drop_missing_news") c.drop_missing_news = x.get<bool>();
          else return false;
          return true;
        });
      } else if (key == "threshold") {
        c.threshold = v.get<double>();
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else {
        return false;
      }
      return true;
    });
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

LexiconSet load_lexicon_dir(const std::filesystem::path& dir) {
  LexiconSet set;
  for (std::size_t i = 0; i < kLexiconOrder.size(); ++i)
    set[i] = load_lexicon(dir / (std::string(to_string(kLexiconOrder[i])) + ".txt"), kLexiconOrder[i]);
  return set;
}

Dataset parse_benchmark_csv(std::string_view text) {
  auto table = io::parse_csv(text);
  if (table.header.size() < 2 || table.header[0] != "pid" || table.header[1] != "date")
    throw Error(ErrorKind::ParseError, "benchmark CSV must start with pid,date");
  Dataset d;
  d.feature_names.assign(table.header.begin() + 2, table.header.end());
  if (d.feature_names.size() != kBenchmarkFeatures)
    throw Error(ErrorKind::FeatureMismatch, "benchmark CSV has " + std::to_string(d.feature_names.size()) +
                                                " feature columns, expected 9");
  d.features.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(kBenchmarkFeatures));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size())
      throw Error(ErrorKind::ParseError, "benchmark row " + std::to_string(r + 2) + " has the wrong field count");
    d.keys.push_back({row[0], Date::parse(row[1])});
    for (std::size_t c = 0; c < kBenchmarkFeatures; ++c)
      d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          io::parse_double(row[c + 2], "benchmark feature");
  }
  return d;
}

void attach_labels(Dataset& data, std::span<const DowngradeLabel> labels) {
  std::unordered_map<RowKey, int, RowKeyHash> by_key;
  for (const auto& l : labels) by_key.emplace(l.key(), l.label);
  data.labels.clear();
  for (const auto& key : data.keys) {
    auto it = by_key.find(key);
    if (it == by_key.end()) throw Error(ErrorKind::JoinKeyMismatch, "no label for " + key.to_string());
    data.labels.push_back(it->second);
  }
}

BundlePaths BundlePaths::in(const std::filesystem::path& dir) {
  BundlePaths p;
  p.articles = dir / "articles.jsonl";
  p.aliases = dir / "aliases.json";
  p.ratings = dir / "ratings.csv";
  p.benchmark = dir / "benchmark.csv";
  p.vectors = dir / "vectors.vec";
  p.lexicon_dir = dir / "lexicons";
  if (std::filesystem::exists(dir / "stopwords.txt")) p.stopwords = dir / "stopwords.txt";
  return p;
}

NewsResources load_resources(const BundlePaths& paths, const std::unordered_set<std::string>* vocabulary) {
  NewsResources r;
  r.lexicons = load_lexicon_dir(paths.lexicon_dir);
  if (paths.stopwords) r.stopwords = load_stopwords(*paths.stopwords);
  if (vocabulary) r.vectors = load_vec_file(paths.vectors, vocabulary);
  return r;
}

std::unordered_set<std::string> corpus_vocabulary(std::span<const CleanDocument> documents) {
  std::unordered_set<std::string> vocab;
  for (const auto& d : documents) vocab.insert(d.tokens.begin(), d.tokens.end());
  return vocab;
}

NewsData prepare_news_data(const BundlePaths& paths, const PipelineConfig& config) {
  config.validate();
  NewsData data;
  auto aliases = CompanyAliasTable::load(paths.aliases);
  StopwordSet stopwords = paths.stopwords ? load_stopwords(*paths.stopwords) : default_stopwords();
  data.documents = preprocess_corpus(load_articles(paths.articles), aliases, stopwords, config.preprocess).documents;
  data.benchmark = parse_benchmark_csv(io::read_file(paths.benchmark));
  auto table = build_label_table(load_ratings(paths.ratings), data.benchmark.keys, config.horizon_days);
  data.labels = std::move(table.labels);
  attach_labels(data.benchmark, data.labels);
  std::unordered_set<RowKey, RowKeyHash> keys(data.benchmark.keys.begin(), data.benchmark.keys.end());
  for (const auto& d : data.documents)
    if (!keys.count(d.key())) throw Error(ErrorKind::JoinKeyMismatch, "document " + d.key().to_string() + " has no label");
  return data;
}

TokenList stem_tokens(std::span<const std::string> tokens, const StopwordSet& stopwords) {
  TokenList out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto s = porter_stem(t);
    if (!stopwords.count(s)) out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> featurize_lexicon_lda(const CleanDocument& doc, const NewsResources& resources,
                                          const LdaModel& lda, int infer_iterations, std::uint64_t seed) {
  static const std::string downgrade_stem = porter_stem("downgrade");
  auto sentiments = score_all(doc.tokens, resources.lexicons, resources.negators);
  std::vector<double> out(sentiments.begin(), sentiments.end());
  auto stemmed = stem_tokens(doc.tokens, resources.stopwords);
  auto mixture = infer_topic_mixture(lda, stemmed, infer_iterations, seed);
  out.insert(out.end(), mixture.begin(), mixture.end());
  out.push_back(static_cast<double>(doc.articles_merged));
  bool downgrade = std::any_of(doc.tokens.begin(), doc.tokens.end(),
                               [](const std::string& t) { return porter_stem(t) == downgrade_stem; });
  out.push_back(downgrade ? 1.0 : 0.0);
  return out;
}

std::vector<double> featurize_embedding(const CleanDocument& doc, const Doc2VecModel& model,
                                        const StopwordSet& stopwords, std::uint64_t seed) {
  return infer_doc_vector(model, stem_tokens(doc.tokens, stopwords), model.config.infer_steps, seed).vector;
}

std::vector<double> featurize_embedding(const CleanDocument& doc, const WordVectorTable& table) {
  return doc_embedding_average(table, doc.tokens).vector;
}

void RunTrace::record(std::string stage, std::vector<RowKey> keys) {
  events.push_back({std::move(stage), std::move(keys)});
}

std::vector<double> FittedFeaturizer::transform(const CleanDocument& doc) const {
  std::uint64_t doc_seed = mix_seed(seed, doc.key().to_string());
  switch (approach) {
    case Approach::LexiconLda: return featurize_lexicon_lda(doc, *resources, *lda, lda_infer_iterations, doc_seed);
    case Approach::Doc2Vec: return featurize_embedding(doc, *doc2vec, resources->stopwords, doc_seed);
    case Approach::WordvecAverage: return featurize_embedding(doc, resources->vectors);
  }
  return {};
}

Dataset FittedFeaturizer::transform_all(std::span<const CleanDocument> docs,
                                        const std::unordered_map<RowKey, int, RowKeyHash>& labels) const {
  Dataset d;
  d.feature_names = feature_names;
  d.features.resize(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(feature_names.size()));
  for (const auto& doc : docs) {
    auto it = labels.find(doc.key());
    if (it == labels.end()) throw Error(ErrorKind::JoinKeyMismatch, "no label for " + doc.key().to_string());
    d.keys.push_back(doc.key());
    d.labels.push_back(it->second);
  }
  parallel_for(docs.size(), [&](std::size_t i) {
    auto row = transform(docs[i]);
    if (row.size() != feature_names.size())
      throw Error(ErrorKind::FeatureMismatch, "featurizer produced " + std::to_string(row.size()) + " features");
    for (std::size_t c = 0; c < row.size(); ++c)
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
  });
  return d;
}

FittedFeaturizer fit_featurizer(const PipelineConfig& config, std::span<const CleanDocument> train_docs,
                                const NewsResources& resources, RunTrace* trace) {
  FittedFeaturizer f;
  f.approach = config.approach;
  f.resources = &resources;
  f.lda_infer_iterations = config.lda_infer_iterations;
  if (trace) {
    std::vector<RowKey> keys;
    for (const auto& d : train_docs) keys.push_back(d.key());
    trace->record("featurizer_fit", std::move(keys));
  }
  switch (config.approach) {
    case Approach::LexiconLda: {
      std::vector<TokenList> corpus;
      for (const auto& d : train_docs) corpus.push_back(stem_tokens(d.tokens, resources.stopwords));
      f.lda = train_lda(corpus, config.lda);
      f.seed = config.lda.seed;
      for (auto name : kLexiconOrder) f.feature_names.push_back(std::string("sent_") + to_string(name));
      for (int k = 1; k <= config.lda.num_topics; ++k) f.feature_names.push_back("topic_" + std::to_string(k));
      f.feature_names.push_back("articles_merged");
      f.feature_names.push_back("has_downgrade");
      break;
    }
    case Approach::Doc2Vec: {
      std::vector<TokenList> corpus;
      for (const auto& d : train_docs) corpus.push_back(stem_tokens(d.tokens, resources.stopwords));
      f.doc2vec = train_doc2vec_dm(corpus, config.doc2vec);
      f.seed = config.doc2vec.seed;
      for (int k = 1; k <= config.doc2vec.dim; ++k) f.feature_names.push_back("emb_" + std::to_string(k));
      break;
    }
    case Approach::WordvecAverage:
      if (resources.vectors.dim() < 1) throw Error(ErrorKind::ConfigError, "wordvec-avg needs a loaded .vec table");
      for (int k = 1; k <= resources.vectors.dim(); ++k) f.feature_names.push_back("emb_" + std::to_string(k));
      break;
  }
  return f;
}

bool Split::in_holdout(const RowKey& key) const { return std::binary_search(holdout.begin(), holdout.end(), key); }

Split split_keys(std::span<const DowngradeLabel> labels, const SplitConfig& config) {
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
    throw Error(ErrorKind::ConfigError, "train_fraction must be in (0, 1)");
  std::vector<std::vector<RowKey>> groups(config.stratify ? 2 : 1);
  for (const auto& l : labels) groups[config.stratify ? static_cast<std::size_t>(l.label) : 0].push_back(l.key());
  Rng rng(mix_seed(config.seed, "split"));
  Split split;
  for (auto& keys : groups) {
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = keys.size(); i > 1; --i) std::swap(keys[i - 1], keys[uniform_index(rng, i)]);
    auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(keys.size())));
    split.train.insert(split.train.end(), keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.holdout.insert(split.holdout.end(), keys.begin() + static_cast<std::ptrdiff_t>(n_train), keys.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.holdout.begin(), split.holdout.end());
  return split;
}

LogisticModel fit_balanced(const Dataset& train, const PipelineConfig& config, RunTrace* trace,
                           const std::string& stage) {
  if (trace) trace->record(stage + ".smote_fit", train.keys);
  auto balanced = smote(train, config.smote);
  return fit_logistic(balanced, config.fit);
}

ScoredSet score_dataset(const LogisticModel& model, const Dataset& data) {
  auto p = model.predict_proba(data);
  ScoredSet out;
  for (std::size_t i = 0; i < p.size(); ++i) out.push_back({data.keys[i].pid, data.keys[i].date, p[i], data.labels[i]});
  return out;
}

NewsModel fit_news_model(const PipelineConfig& config, std::span<const CleanDocument> train_docs,
                         const std::unordered_map<RowKey, int, RowKeyHash>& labels, const NewsResources& resources,
                         RunTrace* trace) {
  NewsModel m;
  m.featurizer = fit_featurizer(config, train_docs, resources, trace);
  auto data = m.featurizer.transform_all(train_docs, labels);
  m.model = fit_balanced(data, config, trace, "news");
  return m;
}

namespace {

std::unordered_map<RowKey, int, RowKeyHash> label_map(std::span<const DowngradeLabel> labels) {
  std::unordered_map<RowKey, int, RowKeyHash> out;
  for (const auto& l : labels) out.emplace(l.key(), l.label);
  return out;
}

std::vector<std::size_t> rows_for(const Dataset& data, const std::vector<RowKey>& keys) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < data.rows(); ++r)
    if (std::binary_search(keys.begin(), keys.end(), data.keys[r])) rows.push_back(r);
  return rows;
}

std::vector<RowKey> keys_of(const ScoredSet& s) {
  std::vector<RowKey> keys;
  for (const auto& r : s) keys.push_back({r.pid, r.date});
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace

NewsRun train_news_model(const NewsData& data, const NewsResources& resources, const PipelineConfig& config,
                         RunTrace* trace) {
  config.validate();
  NewsRun run;
  run.split = split_keys(data.labels, config.split);
  auto labels = label_map(data.labels);
  std::vector<CleanDocument> train_docs, holdout_docs;
  for (const auto& d : data.documents) (run.split.in_holdout(d.key()) ? holdout_docs : train_docs).push_back(d);
  run.news = fit_news_model(config, train_docs, labels, resources, trace);
  auto holdout = run.news.featurizer.transform_all(holdout_docs, labels);
  if (trace) trace->record("news.score", holdout.keys);
  run.holdout = score_dataset(run.news.model, holdout);
  run.auc = auc(run.holdout);
  return run;
}

ModelRun train_on_split(const Dataset& data, const Split& split, const PipelineConfig& config, RunTrace* trace,
                        const std::string& stage) {
  auto train_rows = rows_for(data, split.train);
  auto holdout_rows = rows_for(data, split.holdout);
  auto train = data.subset(train_rows);
  auto holdout = data.subset(holdout_rows);
  ModelRun run;
  run.model = fit_balanced(train, config, trace, stage);
  if (trace) trace->record(stage + ".score", holdout.keys);
  run.holdout = score_dataset(run.model, holdout);
  return run;
}

ModelRun train_benchmark(const Dataset& benchmark, const Split& split, const PipelineConfig& config, RunTrace* trace) {
  if (benchmark.cols() != kBenchmarkFeatures)
    throw Error(ErrorKind::FeatureMismatch, "benchmark model expects 9 features");
  return train_on_split(benchmark, split, config, trace, "benchmark");
}

StackResult stack(const Dataset& benchmark, const NewsData& data, const Split& split, const NewsModel& news,
                  const NewsResources& resources, const PipelineConfig& config, RunTrace* trace) {
  if (benchmark.cols() != kBenchmarkFeatures) throw Error(ErrorKind::FeatureMismatch, "stacking expects 9 benchmark features");
  auto labels = label_map(data.labels);
  std::unordered_map<RowKey, const CleanDocument*, RowKeyHash> doc_of;
  for (const auto& d : data.documents) doc_of.emplace(d.key(), &d);
  for (const auto& key : benchmark.keys)
    if (!labels.count(key)) throw Error(ErrorKind::JoinKeyMismatch, "benchmark row " + key.to_string() + " has no label");

  // fold assignment over training rows that have news
  std::vector<RowKey> train_news;
  for (const auto& key : split.train)
    if (doc_of.count(key)) train_news.push_back(key);
  Rng rng(mix_seed(config.split.seed, "folds"));
  for (std::size_t i = train_news.size(); i > 1; --i) std::swap(train_news[i - 1], train_news[uniform_index(rng, i)]);
  const auto folds = static_cast<std::size_t>(config.stack_folds);
  std::unordered_map<RowKey, int, RowKeyHash> fold_of;
  for (std::size_t i = 0; i < train_news.size(); ++i) fold_of.emplace(train_news[i], static_cast<int>(i % folds));

  StackResult result;
  result.fold_fit_keys.resize(folds);
  std::vector<std::vector<const CleanDocument*>> fold_docs(folds);
  for (const auto& key : split.train) {
    auto it = fold_of.find(key);
    if (it != fold_of.end()) fold_docs[static_cast<std::size_t>(it->second)].push_back(doc_of.at(key));
  }
  std::unordered_map<RowKey, double, RowKeyHash> news_prob;
  std::vector<RunTrace> fold_traces(folds);
  std::vector<std::vector<std::pair<RowKey, double>>> fold_scores(folds);
  parallel_for(folds, [&](std::size_t f) {
    std::vector<CleanDocument> fit_docs;
    for (std::size_t g = 0; g < folds; ++g)
      if (g != f)
        for (const auto* d : fold_docs[g]) fit_docs.push_back(*d);
    std::sort(fit_docs.begin(), fit_docs.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
    for (const auto& d : fit_docs) result.fold_fit_keys[f].push_back(d.key());
    auto model = fit_news_model(config, fit_docs, labels, resources, &fold_traces[f]);
    std::vector<CleanDocument> scored;
    for (const auto* d : fold_docs[f]) scored.push_back(*d);
    auto rows = model.featurizer.transform_all(scored, labels);
    fold_traces[f].record("stack.fold_score", rows.keys);
    auto p = model.model.predict_proba(rows);
    for (std::size_t i = 0; i < p.size(); ++i) fold_scores[f].emplace_back(rows.keys[i], p[i]);
  });
  for (std::size_t f = 0; f < folds; ++f) {
    if (trace)
      for (auto& e : fold_traces[f].events) trace->record("stack.fold" + std::to_string(f) + "." + e.stage, e.keys);
    for (const auto& [key, p] : fold_scores[f]) news_prob[key] = p;
  }

  std::vector<CleanDocument> holdout_docs;
  for (const auto& key : split.holdout) {
    auto it = doc_of.find(key);
    if (it != doc_of.end()) holdout_docs.push_back(*it->second);
  }
  auto holdout_rows = news.featurizer.transform_all(holdout_docs, labels);
  if (trace) trace->record("stack.holdout_score", holdout_rows.keys);
  auto holdout_p = news.model.predict_proba(holdout_rows);
  for (std::size_t i = 0; i < holdout_p.size(); ++i) news_prob[holdout_rows.keys[i]] = holdout_p[i];

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < benchmark.rows(); ++r)
    if (!config.drop_missing_news || news_prob.count(benchmark.keys[r])) keep.push_back(r);
  Dataset& out = result.stacked;
  out = benchmark.subset(keep);
  out.feature_names.push_back("news_prob");
  out.features.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(kBenchmarkFeatures + 1));
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const auto& key = out.keys[i];
    auto it = news_prob.find(key);
    out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(kBenchmarkFeatures)) =
        it == news_prob.end() ? config.missing_news_fill : it->second;
    auto f = fold_of.find(key);
    result.fold.push_back(f != fold_of.end() ? f->second : it == news_prob.end() ? -2 : -1);
  }
  return result;
}

std::string FullRun::metrics_csv() const {
  std::string out = "metric,value\n";
  out += "news_auc," + io::format_double(metrics.news_auc) + "\n";
  out += "benchmark_auc," + io::format_double(metrics.benchmark_auc) + "\n";
  out += "final_auc," + io::format_double(metrics.final_auc) + "\n";
  out += "benchmark_recall," + io::format_double(metrics.benchmark_recall) + "\n";
  out += "final_recall," + io::format_double(metrics.final_recall) + "\n";
  out += "auc_gain," + io::format_double(metrics.final_auc - metrics.benchmark_auc) + "\n";
  return out;
}

std::string FullRun::manifest_json() const {
  json j;
  j["format"] = "newsrisk-run";
  j["version"] = 1;
  j["approach"] = to_string(config.approach);
  j["config"] = config.to_json();
  j["seeds"] = {{"master", config.seed},
                {"split", config.split.seed},
                {"smote", config.smote.seed},
                {"lda", config.lda.seed},
                {"doc2vec", config.doc2vec.seed},
                {"classifier", config.fit.seed}};
  std::size_t holdout_pos = 0;
  for (const auto& r : final_model.holdout) holdout_pos += static_cast<std::size_t>(r.label);
  j["rows"] = {{"labelled", news.split.train.size() + news.split.holdout.size()},
               {"train", news.split.train.size()},
               {"holdout", news.split.holdout.size()},
               {"holdout_positives", holdout_pos},
               {"holdout_with_news", news.holdout.size()}};
  j["metrics"] = {{"news_auc", metrics.news_auc},
                  {"benchmark_auc", metrics.benchmark_auc},
                  {"final_auc", metrics.final_auc},
                  {"benchmark_recall", metrics.benchmark_recall},
                  {"final_recall", metrics.final_recall},
                  {"threshold", config.threshold}};
  json artifacts = json::object();
  artifacts["news_model.json"] = fnv1a_hex(news.news.model.to_json());
  if (news.news.featurizer.lda) artifacts["lda_model.json"] = fnv1a_hex(news.news.featurizer.lda->to_json());
  if (news.news.featurizer.doc2vec) artifacts["doc2vec_model.json"] = fnv1a_hex(news.news.featurizer.doc2vec->to_json());
  artifacts["benchmark_model.json"] = fnv1a_hex(benchmark.model.to_json());
  artifacts["final_model.json"] = fnv1a_hex(final_model.model.to_json());
  artifacts["holdout_news_scores.csv"] = fnv1a_hex(scored_to_csv(news.holdout));
  artifacts["holdout_benchmark_scores.csv"] = fnv1a_hex(scored_to_csv(benchmark.holdout));
  artifacts["holdout_final_scores.csv"] = fnv1a_hex(scored_to_csv(final_model.holdout));
  artifacts["stacked_features.csv"] = fnv1a_hex(stacked.stacked.to_csv());
  artifacts["metrics.csv"] = fnv1a_hex(metrics_csv());
  j["artifacts"] = artifacts;
  return j.dump(2) + "\n";
}

FullRun run_full_pipeline(const NewsData& data, const NewsResources& resources, const PipelineConfig& config) {
  config.validate();
  FullRun run;
  run.config = config;
  run.news = train_news_model(data, resources, config, &run.trace);
  const Split& split = run.news.split;

  Dataset bench = data.benchmark;
  if (config.drop_missing_news) {
    std::unordered_set<RowKey, RowKeyHash> with_news;
    for (const auto& d : data.documents) with_news.insert(d.key());
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < bench.rows(); ++r)
      if (with_news.count(bench.keys[r])) keep.push_back(r);
    bench = bench.subset(keep);
  }
  run.benchmark = train_benchmark(bench, split, config, &run.trace);
  run.stacked = stack(bench, data, split, run.news.news, resources, config, &run.trace);
  run.final_model = train_on_split(run.stacked.stacked, split, config, &run.trace, "final");
  if (keys_of(run.benchmark.holdout) != keys_of(run.final_model.holdout))
    throw Error(ErrorKind::JoinKeyMismatch, "benchmark and final holdout sets differ");

  auto& m = run.metrics;
  m.news_auc = run.news.auc;
  m.benchmark_auc = auc(run.benchmark.holdout);
  m.final_auc = auc(run.final_model.holdout);
  m.benchmark_recall = recall_at_threshold(run.benchmark.holdout, config.threshold);
  m.final_recall = recall_at_threshold(run.final_model.holdout, config.threshold);
  auto grid = default_gains_grid();
  m.benchmark_gains = cumulative_gains(run.benchmark.holdout, grid);
  m.final_gains = cumulative_gains(run.final_model.holdout, grid);
  return run;
}

RobustnessReport run_robustness(const NewsData& data, const NewsResources& resources, const PipelineConfig& config,
                                std::span<const std::uint64_t> seeds, int threads) {
  return robustness_experiment(
      [&](std::uint64_t seed) {
        auto run = run_full_pipeline(data, resources, config.with_seed(seed));
        return std::pair<double, double>{run.metrics.benchmark_auc, run.metrics.final_auc};
      },
      seeds, threads);
}

}  // namespace newsrisk
