#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "newsrisk/common.hpp"

namespace newsrisk {

using TokenList = std::vector<std::string>;

/// Dense word <-> index map.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  /// -1 when absent.
  int lookup(std::string_view word) const;
  const std::string& word(int index) const { return words_[static_cast<std::size_t>(index)]; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

/// Keeps words with corpus frequency >= min_count that appear in at most
/// max_doc_fraction of the documents. Result is sorted lexicographically.
Vocabulary build_topic_vocabulary(std::span<const TokenList> corpus, int min_count, double max_doc_fraction);

struct LdaConfig {
  int num_topics = 10;
  /// Symmetric document-topic prior; defaults to 50 / num_topics.
  std::optional<double> alpha;
  double beta = 0.01;
  int iterations = 1000;
  std::uint64_t seed = 1;
  int min_count = 2;
  double max_doc_fraction = 0.5;

  double effective_alpha() const { return alpha.value_or(50.0 / num_topics); }
};

struct LdaModel {
  int num_topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  Vocabulary vocab;
  /// num_topics x vocab.size(), row-major.
  std::vector<std::int64_t> topic_word_counts;
  std::vector<std::int64_t> topic_totals;

  std::int64_t count(int topic, int word) const {
    return topic_word_counts[static_cast<std::size_t>(topic) * vocab.size() + static_cast<std::size_t>(word)];
  }
  /// Word indices of a topic ordered by count descending, index ascending on ties.
  std::vector<int> top_words(int topic, std::size_t n) const;
  /// Throws ParseError when totals, signs, shapes or hyperparameters are inconsistent.
  void validate() const;

  std::string to_json() const;
  static LdaModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static LdaModel load(const std::filesystem::path& path);
};

/// Collapsed Gibbs sampler over token-topic assignments. Exposed so callers
/// can observe the count matrices between sweeps.
class GibbsTrainer {
 public:
  GibbsTrainer(std::span<const TokenList> corpus, const LdaConfig& config);

  void sweep();
  int sweeps_done() const { return sweeps_; }
  std::int64_t total_tokens() const { return static_cast<std::int64_t>(words_.size()); }
  const std::vector<std::int64_t>& topic_word_counts() const { return model_.topic_word_counts; }
  const std::vector<std::int64_t>& topic_totals() const { return model_.topic_totals; }
  const LdaModel& model() const { return model_; }
  /// Per-token vocabulary index and topic, flattened over documents.
  const std::vector<int>& token_words() const { return words_; }
  const std::vector<int>& assignments() const { return assignments_; }
  const std::vector<std::size_t>& doc_offsets() const { return doc_start_; }
  const std::vector<std::int64_t>& doc_topic_counts() const { return doc_topic_; }

 private:
  LdaModel model_;
  std::vector<int> words_;        // flattened corpus, vocabulary indices
  std::vector<std::size_t> doc_start_;  // size docs+1
  std::vector<int> assignments_;
  std::vector<std::int64_t> doc_topic_;  // docs x K
  std::vector<double> weights_;
  Rng rng_;
  int sweeps_ = 0;
};

using SweepObserver = std::function<void(const GibbsTrainer&)>;

/// Throws EmptyCorpus when no token survives vocabulary filtering and
/// DegenerateVocabulary when the vocabulary is smaller than num_topics.
LdaModel train_lda(std::span<const TokenList> corpus, const LdaConfig& config, const SweepObserver& observer = {});

using TopicMixture = std::vector<double>;

/// Gibbs sampling on one held-out document against frozen topic-word counts;
/// OOV tokens are skipped and an all-OOV document gets the uniform mixture.
TopicMixture infer_topic_mixture(const LdaModel& model, std::span<const std::string> tokens, int burn_in_iterations,
                                 std::uint64_t seed);

inline constexpr int kCoherenceWindow = 110;

/// Mean over topics of the mean pairwise NPMI of each topic's top_n words,
/// with co-occurrence counted in sliding windows over `reference`.
/// Counts are smoothed by one pseudo-window that contains every word.
double coherence(const LdaModel& model, std::span<const TokenList> reference, std::size_t top_n = 10,
                 int window = kCoherenceWindow);

struct TopicSelection {
  int best_k = 0;
  std::vector<std::pair<int, double>> curve;  // (K, coherence), grid order
};

/// Trains one model per K (in parallel) and returns the argmax-coherence K,
/// preferring the smaller K on ties.
TopicSelection select_topic_count(std::span<const TokenList> corpus, const std::vector<int>& k_grid,
                                  const LdaConfig& base, std::size_t top_n = 10);

std::string coherence_curve_to_csv(const TopicSelection& selection);

}  // namespace newsrisk
