#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "newsrisk/common.hpp"
#include "newsrisk/topics.hpp"

namespace newsrisk {

struct GeneratorConfig {
  int n_companies = 100;
  int n_days = 20;
  int day_spacing = 7;
  double downgrade_rate = 0.015;
  double news_signal_strength = 0.8;
  double benchmark_signal_strength = 0.6;
  /// Probability that a positive with a strong benchmark signal gets no news signal.
  double complementarity = 0.75;
  double news_coverage = 0.9;
  int topic_count = 5;
  int topic_block_size = 30;
  int vocab_size = 300;       // neutral filler words
  int event_vocab_size = 800; // negative-event words
  int sentiment_vocab_size = 60;
  double lm_event_coverage = 0.1;
  int vec_dim = 50;
  int vec_distractors = 500;
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Ground truth for one company-day.
struct PlantedRow {
  RowKey key;
  int label = 0;
  bool bench_strong = false;
  bool news_eligible = false;
  int articles = 0;
  int sentences = 0;
  int event_sentences = 0;
  int topic = 0;
};

/// Relative file name -> content, plus the planted facts.
struct SynthBundle {
  GeneratorConfig config;
  std::map<std::string, std::string> files;
  std::vector<PlantedRow> truth;
  std::size_t positives = 0;
  std::vector<std::string> event_words;

  void write(const std::filesystem::path& dir) const;
};

/// Bundle file names.
namespace bundle_files {
inline const std::string kArticles = "articles.jsonl";
inline const std::string kAliases = "aliases.json";
inline const std::string kRatings = "ratings.csv";
inline const std::string kBenchmark = "benchmark.csv";
inline const std::string kVectors = "vectors.vec";
inline const std::string kManifest = "manifest.json";
inline const std::string kProvenance = "provenance.csv";
std::string lexicon(const char* name);
}  // namespace bundle_files

SynthBundle generate(const GeneratorConfig& config);

std::string generator_config_to_json(const GeneratorConfig& config);
/// Rejects unknown keys with ConfigError.
GeneratorConfig generator_config_from_json(std::string_view text);

/// Pronounceable lowercase pseudo-words that the Porter stemmer leaves unchanged.
std::vector<std::string> pseudo_words(std::size_t count, Rng& rng, int min_syllables = 2, int max_syllables = 3);

struct PlantedTopicCorpus {
  std::vector<TokenList> documents;
  std::vector<int> dominant_topic;
  std::vector<std::vector<std::string>> blocks;  // vocabulary block per topic
};

/// Each document draws `primary_share` of its tokens from one topic's block and
/// the rest from a second topic.
PlantedTopicCorpus planted_topic_corpus(int n_topics, int n_docs, int doc_len, int block_size, double primary_share,
                                        std::uint64_t seed);

}  // namespace newsrisk
