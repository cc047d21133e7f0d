#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "newsrisk/common.hpp"
#include "newsrisk/topics.hpp"

namespace newsrisk {

/// Pre-trained whole-word vectors, stored as float.
class WordVectorTable {
 public:
  explicit WordVectorTable(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  /// nullptr when absent.
  const float* find(std::string_view word) const;
  std::span<const float> vector(std::size_t index) const {
    return {data_.data() + index * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  /// Returns false (and stores nothing) when the word is already present.
  bool add(std::string word, std::span<const float> values);

  /// Load-time diagnostics: duplicate words, header count drift.
  std::vector<std::string> warnings;

 private:
  int dim_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> data_;
};

/// Parses the `.vec` text format: a "<count> <dim>" header, then
/// "<word> <f1> ... <fdim>" per line. Words are lowercased; the first
/// occurrence of a duplicate wins. When `keep` is given, other words are skipped.
WordVectorTable parse_vec(std::string_view text, const std::unordered_set<std::string>* keep = nullptr);
WordVectorTable load_vec_file(const std::filesystem::path& path, const std::unordered_set<std::string>* keep = nullptr);
/// Writes the `.vec` format with 9 significant digits per component.
std::string format_vec(const WordVectorTable& table);
void save_vec_file(const WordVectorTable& table, const std::filesystem::path& path);

struct DocEmbedding {
  std::string pid;
  Date date;
  std::vector<double> vector;
  /// Fraction of tokens found in the vocabulary.
  double coverage = 0.0;
};

/// Mean of in-vocabulary token vectors (every occurrence counts); zero vector
/// with coverage 0 when no token is known.
DocEmbedding doc_embedding_average(const WordVectorTable& table, std::span<const std::string> tokens);

/// CSV with header pid,date,coverage,f1..fdim.
std::string embeddings_to_csv(std::span<const DocEmbedding> embeddings);

struct Doc2VecConfig {
  int dim = 100;
  int window = 5;
  int epochs = 20;
  int negative_samples = 5;
  double initial_lr = 0.025;
  double min_lr = 1e-4;
  int min_count = 1;
  int infer_steps = 20;
  std::uint64_t seed = 1;
};

/// PV-DM with negative sampling. The context input h is the mean of the
/// document vector and the context word vectors.
struct Doc2VecModel {
  Doc2VecConfig config;
  Vocabulary vocab;
  std::vector<std::int64_t> counts;   // per vocabulary word
  std::vector<double> word_input;     // V x dim
  std::vector<double> word_output;    // V x dim (negative-sampling weights)
  std::vector<double> doc_vectors;    // D x dim, training documents
  std::vector<double> epoch_losses;   // mean objective per epoch

  std::size_t num_docs() const { return config.dim ? doc_vectors.size() / static_cast<std::size_t>(config.dim) : 0; }
  std::span<const double> doc_vector(std::size_t d) const {
    return {doc_vectors.data() + d * static_cast<std::size_t>(config.dim), static_cast<std::size_t>(config.dim)};
  }
  /// Cumulative unigram^0.75 noise distribution over the vocabulary.
  std::vector<double> noise_cdf() const;

  std::string to_json() const;
  static Doc2VecModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Doc2VecModel load(const std::filesystem::path& path);
};

Doc2VecModel train_doc2vec_dm(std::span<const TokenList> corpus, const Doc2VecConfig& config);

/// Gradient descent on a fresh document vector with all word weights frozen.
DocEmbedding infer_doc_vector(const Doc2VecModel& model, std::span<const std::string> tokens, int steps,
                              std::uint64_t seed);

/// Negative-sampling objective for one (context, target, noise) example:
/// -log s(u_t . h) - sum_n log s(-u_n . h), h = (doc + sum(context)) / (1 + |context|).
double pvdm_objective(std::span<const double> doc, const std::vector<std::vector<double>>& context,
                      std::span<const double> target, const std::vector<std::vector<double>>& noise);

struct PvdmGradient {
  std::vector<double> doc;
  std::vector<std::vector<double>> context;
  std::vector<double> target;
  std::vector<std::vector<double>> noise;
};

/// Analytic gradient of pvdm_objective, computed by the same kernel the trainer uses.
PvdmGradient pvdm_gradient(std::span<const double> doc, const std::vector<std::vector<double>>& context,
                           std::span<const double> target, const std::vector<std::vector<double>>& noise);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace newsrisk
