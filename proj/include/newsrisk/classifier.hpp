#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "newsrisk/common.hpp"

namespace newsrisk {

struct Dataset {
  Eigen::MatrixXd features;  // rows = observations
  std::vector<int> labels;   // 0 or 1
  std::vector<std::string> feature_names;
  /// Empty, or one key per row.
  std::vector<RowKey> keys;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t positives() const;
  /// Throws ParseError on shape problems and NonFinite on NaN/Inf.
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;

  /// CSV: optional pid,date columns, one column per feature, then `label`.
  std::string to_csv() const;
  static Dataset from_csv(std::string_view text);
};

/// Per-column z-score parameters. Constant columns keep std 1 and are flagged;
/// the logistic fit pins their weights to zero.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> constant;

  static Standardization compute(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  std::size_t size() const { return mean.size(); }
};

struct SmoteConfig {
  int k_neighbors = 5;
  /// minority:majority after augmentation
  double target_minority_ratio = 1.0;
  std::uint64_t seed = 1;
};

/// Synthetic row = base + u * (neighbor - base); indices refer to input rows.
struct SmoteOrigin {
  std::size_t base;
  std::size_t neighbor;
  double u;
};

struct SmoteResult {
  Dataset data;  // original rows first, in input order, then synthetic rows
  std::vector<SmoteOrigin> origins;
};

/// Oversamples label-1 rows until positives >= ceil(ratio * negatives).
/// Neighbors are found by Euclidean distance on z-scored features.
SmoteResult smote_with_origins(const Dataset& data, const SmoteConfig& config);
Dataset smote(const Dataset& data, const SmoteConfig& config);

inline const std::string kSyntheticPid = "<synthetic>";

struct FitConfig {
  double l2_lambda = 0.01;
  int max_epochs = 2000;
  double tolerance = 1e-6;
  std::uint64_t seed = 1;
};

struct LogisticModel {
  std::vector<std::string> feature_names;
  Standardization stats;
  Eigen::VectorXd weights;  // on standardized features
  double intercept = 0.0;
  double l2_lambda = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> loss_history;  // one entry per accepted step, starting at the initial point
  bool converged = false;

  /// Affine score on a raw (unstandardized) row.
  double predict_logit(std::span<const double> row) const;
  double predict_proba(std::span<const double> row) const;
  /// Checks feature names, then scores every row.
  std::vector<double> predict_proba(const Dataset& data) const;

  std::string to_json() const;
  static LogisticModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static LogisticModel load(const std::filesystem::path& path);
};

/// Sigmoid kept strictly inside (0, 1) for any finite score.
double stable_sigmoid(double score);

/// Mean negative log-likelihood + (lambda/2)|w|^2 on already standardized x.
double logistic_objective(const Eigen::MatrixXd& x, std::span<const int> labels, const Eigen::VectorXd& w, double b,
                          double lambda);

struct LogisticGradient {
  Eigen::VectorXd w;
  double b = 0.0;
};

LogisticGradient logistic_gradient(const Eigen::MatrixXd& x, std::span<const int> labels, const Eigen::VectorXd& w,
                                   double b, double lambda);

/// Full-batch, diagonally preconditioned gradient descent with Barzilai-Borwein
/// trial steps and Armijo backtracking. Throws DegenerateData when one class is absent.
LogisticModel fit_logistic(const Dataset& data, const FitConfig& config);

}  // namespace newsrisk
