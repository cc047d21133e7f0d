#include "newsrisk/topics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "newsrisk/io.hpp"

namespace newsrisk {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<int>(i)).second)
      throw Error(ErrorKind::ParseError, "duplicate vocabulary word '" + words_[i] + "'");
  }
}

int Vocabulary::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? -1 : it->second;
}

Vocabulary build_topic_vocabulary(std::span<const TokenList> corpus, int min_count, double max_doc_fraction) {
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> stats;  // word -> (count, doc freq)
  for (const auto& doc : corpus) {
    std::unordered_set<std::string_view> seen;
    for (const auto& token : doc) {
      auto& s = stats[token];
      ++s.first;
      if (seen.insert(token).second) ++s.second;
    }
  }
  double max_docs = max_doc_fraction * static_cast<double>(corpus.size());
  std::vector<std::string> words;
  for (const auto& [word, s] : stats) {
    if (s.first >= min_count && static_cast<double>(s.second) <= max_docs) words.push_back(word);
  }
  return Vocabulary(std::move(words));
}

std::vector<int> LdaModel::top_words(int topic, std::size_t n) const {
  std::vector<int> order(vocab.size());
  std::iota(order.begin(), order.end(), 0);
  n = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), [&](int a, int b) {
    auto ca = count(topic, a), cb = count(topic, b);
    return ca != cb ? ca > cb : a < b;
  });
  order.resize(n);
  return order;
}

void LdaModel::validate() const {
  if (num_topics < 2) throw Error(ErrorKind::ParseError, "LDA model needs at least 2 topics");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw Error(ErrorKind::ParseError, "LDA alpha and beta must be positive");
  std::size_t k = static_cast<std::size_t>(num_topics);
  if (topic_word_counts.size() != k * vocab.size() || topic_totals.size() != k)
    throw Error(ErrorKind::ParseError, "LDA count matrix shape does not match K x V");
  for (std::size_t t = 0; t < k; ++t) {
    std::int64_t sum = 0;
    for (std::size_t v = 0; v < vocab.size(); ++v) {
      auto c = topic_word_counts[t * vocab.size() + v];
      if (c < 0) throw Error(ErrorKind::ParseError, "negative LDA count");
      sum += c;
    }
    if (sum != topic_totals[t]) throw Error(ErrorKind::ParseError, "LDA topic total mismatch");
  }
}

std::string LdaModel::to_json() const {
  nlohmann::json j;
  j["format"] = "newsrisk-lda";
  j["version"] = 1;
  j["num_topics"] = num_topics;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["seed"] = seed;
  j["vocab"] = vocab.words();
  auto rows = nlohmann::json::array();
  for (int t = 0; t < num_topics; ++t) {
    auto begin = topic_word_counts.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * vocab.size());
    rows.push_back(std::vector<std::int64_t>(begin, begin + static_cast<std::ptrdiff_t>(vocab.size())));
  }
  j["topic_word_counts"] = std::move(rows);
  return j.dump();
}

LdaModel LdaModel::from_json(std::string_view text) {
  LdaModel m;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "newsrisk-lda" || j.at("version") != 1)
      throw Error(ErrorKind::ParseError, "not a version-1 LDA model file");
    m.num_topics = j.at("num_topics").get<int>();
    m.alpha = j.at("alpha").get<double>();
    m.beta = j.at("beta").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.vocab = Vocabulary(j.at("vocab").get<std::vector<std::string>>());
    const auto& rows = j.at("topic_word_counts");
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(m.num_topics))
      throw Error(ErrorKind::ParseError, "LDA count matrix has wrong row count");
    for (const auto& row : rows) {
      auto counts = row.get<std::vector<std::int64_t>>();
      if (counts.size() != m.vocab.size()) throw Error(ErrorKind::ParseError, "LDA count row has wrong length");
      m.topic_totals.push_back(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}));
      m.topic_word_counts.insert(m.topic_word_counts.end(), counts.begin(), counts.end());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("LDA model: ") + e.what());
  }
  m.validate();
  return m;
}

void LdaModel::save(const std::filesystem::path& path) const { io::write_file(path, to_json()); }

LdaModel LdaModel::load(const std::filesystem::path& path) { return from_json(io::read_file(path)); }

GibbsTrainer::GibbsTrainer(std::span<const TokenList> corpus, const LdaConfig& config) : rng_(config.seed) {
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "LDA corpus has no documents");
  if (config.num_topics < 2) throw Error(ErrorKind::ConfigError, "LDA needs at least 2 topics");
  if (config.iterations < 1) throw Error(ErrorKind::ConfigError, "LDA needs at least one iteration");
  model_.num_topics = config.num_topics;
  model_.alpha = config.effective_alpha();
  model_.beta = config.beta;
  model_.seed = config.seed;
  if (!(model_.alpha > 0.0) || !(model_.beta > 0.0))
    throw Error(ErrorKind::ConfigError, "LDA alpha and beta must be positive");
  model_.vocab = build_topic_vocabulary(corpus, config.min_count, config.max_doc_fraction);
  const std::size_t v = model_.vocab.size();
  const std::size_t k = static_cast<std::size_t>(config.num_topics);

  doc_start_.push_back(0);
  for (const auto& doc : corpus) {
    for (const auto& token : doc) {
      int id = model_.vocab.lookup(token);
      if (id >= 0) words_.push_back(id);
    }
    doc_start_.push_back(words_.size());
  }
  if (words_.empty()) throw Error(ErrorKind::EmptyCorpus, "no LDA tokens survive vocabulary filtering");
  if (v < k)
    throw Error(ErrorKind::DegenerateVocabulary,
                "vocabulary of " + std::to_string(v) + " words is smaller than K=" + std::to_string(k));

  model_.topic_word_counts.assign(k * v, 0);
  model_.topic_totals.assign(k, 0);
  doc_topic_.assign(corpus.size() * k, 0);
  assignments_.resize(words_.size());
  weights_.resize(k);
  for (std::size_t d = 0; d + 1 < doc_start_.size(); ++d) {
    for (std::size_t i = doc_start_[d]; i < doc_start_[d + 1]; ++i) {
      int topic = static_cast<int>(uniform_index(rng_, k));
      assignments_[i] = topic;
      ++model_.topic_word_counts[static_cast<std::size_t>(topic) * v + static_cast<std::size_t>(words_[i])];
      ++model_.topic_totals[static_cast<std::size_t>(topic)];
      ++doc_topic_[d * k + static_cast<std::size_t>(topic)];
    }
  }
}

void GibbsTrainer::sweep() {
  const std::size_t v = model_.vocab.size();
  const std::size_t k = static_cast<std::size_t>(model_.num_topics);
  const double alpha = model_.alpha;
  const double beta = model_.beta;
  const double v_beta = static_cast<double>(v) * beta;
  auto& nkw = model_.topic_word_counts;
  auto& nk = model_.topic_totals;
  for (std::size_t d = 0; d + 1 < doc_start_.size(); ++d) {
    std::int64_t* ndk = &doc_topic_[d * k];
    for (std::size_t i = doc_start_[d]; i < doc_start_[d + 1]; ++i) {
      const std::size_t w = static_cast<std::size_t>(words_[i]);
      std::size_t old_topic = static_cast<std::size_t>(assignments_[i]);
      --nkw[old_topic * v + w];
      --nk[old_topic];
      --ndk[old_topic];
      double total = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        total += (static_cast<double>(ndk[t]) + alpha) * (static_cast<double>(nkw[t * v + w]) + beta) /
                 (static_cast<double>(nk[t]) + v_beta);
        weights_[t] = total;
      }
      double u = uniform01(rng_) * total;
      std::size_t new_topic = static_cast<std::size_t>(
          std::upper_bound(weights_.begin(), weights_.end(), u) - weights_.begin());
      if (new_topic >= k) new_topic = k - 1;
      assignments_[i] = static_cast<int>(new_topic);
      ++nkw[new_topic * v + w];
      ++nk[new_topic];
      ++ndk[new_topic];
    }
  }
  ++sweeps_;
}

LdaModel train_lda(std::span<const TokenList> corpus, const LdaConfig& config, const SweepObserver& observer) {
  GibbsTrainer trainer(corpus, config);
  for (int it = 0; it < config.iterations; ++it) {
    trainer.sweep();
    if (observer) observer(trainer);
  }
  return trainer.model();
}

TopicMixture infer_topic_mixture(const LdaModel& model, std::span<const std::string> tokens, int burn_in_iterations,
                                 std::uint64_t seed) {
  const std::size_t k = static_cast<std::size_t>(model.num_topics);
  const std::size_t v = model.vocab.size();
  std::vector<int> words;
  for (const auto& token : tokens) {
    int id = model.vocab.lookup(token);
    if (id >= 0) words.push_back(id);
  }
  TopicMixture mixture(k, 1.0 / static_cast<double>(k));
  if (words.empty()) return mixture;

  Rng rng(seed);
  std::vector<int> z(words.size());
  std::vector<std::int64_t> ndk(k, 0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    z[i] = static_cast<int>(uniform_index(rng, k));
    ++ndk[static_cast<std::size_t>(z[i])];
  }
  // frozen per-topic word likelihoods
  const double v_beta = static_cast<double>(v) * model.beta;
  std::vector<double> cumulative(k);
  for (int sweep = 0; sweep < burn_in_iterations; ++sweep) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      --ndk[static_cast<std::size_t>(z[i])];
      double total = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        total += (static_cast<double>(ndk[t]) + model.alpha) *
                 (static_cast<double>(model.topic_word_counts[t * v + static_cast<std::size_t>(words[i])]) +
                  model.beta) /
                 (static_cast<double>(model.topic_totals[t]) + v_beta);
        cumulative[t] = total;
      }
      double u = uniform01(rng) * total;
      std::size_t topic =
          static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      if (topic >= k) topic = k - 1;
      z[i] = static_cast<int>(topic);
      ++ndk[topic];
    }
  }
  double denom = static_cast<double>(words.size()) + static_cast<double>(k) * model.alpha;
  double sum = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    mixture[t] = (static_cast<double>(ndk[t]) + model.alpha) / denom;
    sum += mixture[t];
  }
  for (auto& p : mixture) p /= sum;
  return mixture;
}

double coherence(const LdaModel& model, std::span<const TokenList> reference, std::size_t top_n, int window) {
  if (window < 1) throw Error(ErrorKind::ConfigError, "coherence window must be positive");
  // Relevant words: union of all topics' top words, re-indexed densely.
  std::vector<std::vector<int>> topic_words;
  std::map<std::string, int> relevant;
  for (int t = 0; t < model.num_topics; ++t) {
    std::vector<int> ids;
    for (int w : model.top_words(t, top_n)) {
      auto [it, inserted] = relevant.emplace(model.vocab.word(w), static_cast<int>(relevant.size()));
      ids.push_back(it->second);
    }
    topic_words.push_back(std::move(ids));
  }
  const std::size_t r = relevant.size();
  std::vector<std::int64_t> single(r, 0);
  std::vector<std::int64_t> joint(r * r, 0);
  std::int64_t windows = 0;

  std::vector<int> in_window(r, 0);
  for (const auto& doc : reference) {
    if (doc.empty()) continue;
    std::vector<int> ids(doc.size(), -1);
    std::vector<int> doc_relevant;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      auto it = relevant.find(doc[i]);
      if (it != relevant.end()) {
        ids[i] = it->second;
        doc_relevant.push_back(it->second);
      }
    }
    std::sort(doc_relevant.begin(), doc_relevant.end());
    doc_relevant.erase(std::unique(doc_relevant.begin(), doc_relevant.end()), doc_relevant.end());

    const std::size_t width = std::min(doc.size(), static_cast<std::size_t>(window));
    const std::size_t n_windows = doc.size() - width + 1;
    for (std::size_t i = 0; i < width; ++i)
      if (ids[i] >= 0) ++in_window[static_cast<std::size_t>(ids[i])];
    std::vector<int> present;
    for (std::size_t start = 0; start < n_windows; ++start) {
      if (start > 0) {
        if (ids[start - 1] >= 0) --in_window[static_cast<std::size_t>(ids[start - 1])];
        std::size_t entering = start + width - 1;
        if (ids[entering] >= 0) ++in_window[static_cast<std::size_t>(ids[entering])];
      }
      present.clear();
      for (int id : doc_relevant)
        if (in_window[static_cast<std::size_t>(id)] > 0) present.push_back(id);
      for (std::size_t a = 0; a < present.size(); ++a) {
        ++single[static_cast<std::size_t>(present[a])];
        for (std::size_t b = a + 1; b < present.size(); ++b) {
          ++joint[static_cast<std::size_t>(present[a]) * r + static_cast<std::size_t>(present[b])];
          ++joint[static_cast<std::size_t>(present[b]) * r + static_cast<std::size_t>(present[a])];
        }
      }
      ++windows;
    }
    for (int id : doc_relevant) in_window[static_cast<std::size_t>(id)] = 0;
  }

  for (const auto& [word, id] : relevant) {
    if (single[static_cast<std::size_t>(id)] == 0)
      throw Error(ErrorKind::InsufficientCorpus, "top word '" + word + "' never occurs in the reference corpus");
  }

  const double total = static_cast<double>(windows + 1);
  auto npmi = [&](int a, int b) {
    double p_a = static_cast<double>(single[static_cast<std::size_t>(a)] + 1) / total;
    double p_b = static_cast<double>(single[static_cast<std::size_t>(b)] + 1) / total;
    double p_ab = static_cast<double>(joint[static_cast<std::size_t>(a) * r + static_cast<std::size_t>(b)] + 1) / total;
    if (p_ab >= 1.0) return 1.0;
    return std::log(p_ab / (p_a * p_b)) / -std::log(p_ab);
  };

  double sum_topics = 0.0;
  for (const auto& words : topic_words) {
    double sum_pairs = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < words.size(); ++a) {
      for (std::size_t b = a + 1; b < words.size(); ++b) {
        sum_pairs += npmi(words[a], words[b]);
        ++pairs;
      }
    }
    sum_topics += pairs ? sum_pairs / static_cast<double>(pairs) : 0.0;
  }
  return sum_topics / static_cast<double>(topic_words.size());
}

TopicSelection select_topic_count(std::span<const TokenList> corpus, const std::vector<int>& k_grid,
                                  const LdaConfig& base, std::size_t top_n) {
  if (k_grid.empty()) throw Error(ErrorKind::ConfigError, "topic-count grid is empty");
  for (int k : k_grid)
    if (k < 2) throw Error(ErrorKind::ConfigError, "topic counts must be >= 2");
  std::vector<std::future<double>> runs;
  runs.reserve(k_grid.size());
  for (int k : k_grid) {
    runs.push_back(std::async(std::launch::async, [&, k] {
      LdaConfig config = base;
      config.num_topics = k;
      if (!base.alpha) config.alpha.reset();
      auto model = train_lda(corpus, config);
      return coherence(model, corpus, top_n);
    }));
  }
  TopicSelection selection;
  for (std::size_t i = 0; i < k_grid.size(); ++i) selection.curve.emplace_back(k_grid[i], runs[i].get());
  auto best = selection.curve.front();
  for (const auto& point : selection.curve) {
    if (point.second > best.second || (point.second == best.second && point.first < best.first)) best = point;
  }
  selection.best_k = best.first;
  return selection;
}

std::string coherence_curve_to_csv(const TopicSelection& selection) {
  std::string out = "K,coherence\n";
  for (const auto& [k, c] : selection.curve) out += std::to_string(k) + "," + io::format_double(c) + "\n";
  return out;
}

}  // namespace newsrisk
