#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "newsrisk/common.hpp"
#include "newsrisk/corpus.hpp"

namespace newsrisk {

struct ScoredRow {
  std::string pid;
  Date date;
  double score = 0.0;
  int label = 0;
};

using ScoredSet = std::vector<ScoredRow>;

/// Mann-Whitney AUC with midranks for ties. Throws SingleClass.
double auc(std::span<const ScoredRow> scored);
double auc(std::span<const double> scores, std::span<const int> labels);

/// TP / (TP + FN) with score >= threshold predicted positive. Throws NoPositives.
double recall_at_threshold(std::span<const ScoredRow> scored, double threshold = 0.5);

struct GainsPoint {
  double fraction;
  double captured;
};

using GainsCurve = std::vector<GainsPoint>;

/// Fractions 0.01, 0.02, ..., 1.0.
std::vector<double> default_gains_grid();

/// Ranks by score descending (stable on ties) and reports the share of all
/// positives inside the top ceil(f * N) rows for every grid fraction f.
GainsCurve cumulative_gains(std::span<const ScoredRow> scored, std::span<const double> grid);
std::string gains_to_csv(const GainsCurve& curve);

std::string scored_to_csv(std::span<const ScoredRow> scored);
ScoredSet parse_scored_csv(std::string_view text);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  double benchmark_auc = 0.0;
  double final_auc = 0.0;
  double gain = 0.0;
  std::string error;
};

struct RobustnessReport {
  std::vector<SeedOutcome> runs;  // one per requested seed, in request order
  std::vector<double> gains;      // successful runs only
  double mean_gain = 0.0;
  double std_gain = 0.0;          // sample standard deviation
  double std_error = 0.0;         // std_gain / sqrt(n)
  std::size_t positive_count = 0;
  std::size_t failed_count = 0;
  bool single_run = false;        // std is 0 by convention

  std::string to_json() const;
  std::string runs_to_csv() const;
};

/// seed -> (benchmark AUC, final AUC)
using SeedRun = std::function<std::pair<double, double>(std::uint64_t)>;

/// Runs every seed (up to `threads` at a time); errors are recorded per seed.
RobustnessReport robustness_experiment(const SeedRun& run, std::span<const std::uint64_t> seeds, int threads = 1);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max]; the last bin is closed on the right.
Histogram histogram(std::span<const double> values, int bins = 10);
std::string histogram_to_csv(const Histogram& h);

struct InspectionEntry {
  std::string pid;
  Date date;
  double score = 0.0;
  std::string snippet;
};

struct InspectionReport {
  double threshold = 0.5;
  std::vector<InspectionEntry> true_positives;   // score descending
  std::vector<InspectionEntry> false_negatives;  // score ascending
  std::size_t tp_companies() const;
  std::size_t fn_companies() const;

  std::string to_markdown() const;
  std::string to_json() const;
};

inline constexpr std::size_t kSnippetTokens = 200;

/// Splits holdout positives into TP and FN and attaches the first 200 tokens of
/// each row's document. Throws JoinKeyMismatch when a positive has no document.
InspectionReport inspection_report(std::span<const ScoredRow> scored, double threshold,
                                   std::span<const CleanDocument> documents);

}  // namespace newsrisk
