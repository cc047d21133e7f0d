#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "newsrisk/classifier.hpp"

using namespace newsrisk;

namespace {

Dataset make_dataset(const std::vector<std::vector<double>>& rows, std::vector<int> labels) {
  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.empty() ? 0 : rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  d.labels = std::move(labels);
  for (Eigen::Index c = 0; c < d.features.cols(); ++c) d.feature_names.push_back("x" + std::to_string(c));
  return d;
}

Dataset random_dataset(std::mt19937& rng, std::size_t n, std::size_t d, double positive_rate) {
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(positive_rate);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    int y = coin(rng);
    std::vector<double> row(d);
    for (std::size_t c = 0; c < d; ++c) row[c] = normal(rng) * static_cast<double>(c + 1) + (y ? 0.8 : 0.0);
    rows.push_back(row);
    labels.push_back(y);
  }
  return make_dataset(rows, labels);
}

// Distance from p to the segment [a, b].
double segment_distance(const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  Eigen::RowVectorXd ab = b - a;
  double len2 = ab.squaredNorm();
  double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

}  // namespace

TEST_CASE("smote examples") {
  SmoteConfig config;
  config.k_neighbors = 1;

  auto twins = make_dataset({{2, 3}, {2, 3}, {0, 0}, {1, 0}, {0, 1}, {5, 5}}, {1, 1, 0, 0, 0, 0});
  auto out = smote(twins, config);
  CHECK(out.positives() == 4);
  for (std::size_t r = 6; r < out.rows(); ++r) {
    CHECK(out.features(static_cast<Eigen::Index>(r), 0) == 2.0);
    CHECK(out.features(static_cast<Eigen::Index>(r), 1) == 3.0);
  }

  std::vector<std::vector<double>> rows = {{0, 0}, {1, 1}};
  std::vector<int> labels = {1, 1};
  for (int i = 0; i < 40; ++i) {
    rows.push_back({static_cast<double>(i % 7) - 3.0, static_cast<double>(i % 5)});
    labels.push_back(0);
  }
  auto seg = smote(make_dataset(rows, labels), config);
  CHECK(seg.positives() == 40);
  for (std::size_t r = 42; r < seg.rows(); ++r) {
    double a = seg.features(static_cast<Eigen::Index>(r), 0), b = seg.features(static_cast<Eigen::Index>(r), 1);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(seg.labels[r] == 1);
  }
}

TEST_CASE("smote reaches the target ratio at low prevalence") {
  std::mt19937 rng(3);
  auto data = random_dataset(rng, 2000, 3, 0.015);
  std::size_t pos = data.positives();
  REQUIRE(pos >= 6);
  auto out = smote(data, SmoteConfig{});
  CHECK(out.positives() == data.rows() - pos);
  CHECK(out.rows() - out.positives() == data.rows() - pos);

  SmoteConfig half;
  half.target_minority_ratio = 0.5;
  auto partial = smote(data, half);
  auto majority = static_cast<double>(data.rows() - pos);
  CHECK(partial.positives() == static_cast<std::size_t>(std::ceil(0.5 * majority)));
}

TEST_CASE("smote preserves originals and stays on segments") {
  std::mt19937 rng(4);
  auto data = random_dataset(rng, 300, 4, 0.1);
  data.keys.clear();
  for (std::size_t r = 0; r < data.rows(); ++r) data.keys.push_back({"P" + std::to_string(r), Date(2020, 1, 1)});
  auto before = data;
  auto result = smote_with_origins(data, SmoteConfig{});
  CHECK(data.features == before.features);
  CHECK(result.data.features.topRows(before.features.rows()) == before.features);
  CHECK(std::equal(before.labels.begin(), before.labels.end(), result.data.labels.begin()));
  REQUIRE(result.origins.size() == result.data.rows() - data.rows());
  for (std::size_t s = 0; s < result.origins.size(); ++s) {
    const auto& o = result.origins[s];
    CHECK(data.labels[o.base] == 1);
    CHECK(data.labels[o.neighbor] == 1);
    auto p = result.data.features.row(static_cast<Eigen::Index>(data.rows() + s));
    CHECK(segment_distance(p, data.features.row(static_cast<Eigen::Index>(o.base)),
                           data.features.row(static_cast<Eigen::Index>(o.neighbor))) <= 1e-9);
    CHECK(result.data.keys[data.rows() + s].pid == kSyntheticPid);
  }
  CHECK(smote(data, SmoteConfig{}).features == result.data.features);
}

TEST_CASE("smote errors") {
  auto few = make_dataset({{0}, {1}, {2}, {3}}, {1, 1, 0, 0});
  try {
    smote(few, SmoteConfig{});
    FAIL("expected TooFewMinority");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewMinority);
  }
  SmoteConfig bad;
  bad.target_minority_ratio = 1.5;
  CHECK_THROWS_AS(smote(few, bad), Error);
  bad.target_minority_ratio = 1.0;
  bad.k_neighbors = 0;
  CHECK_THROWS_AS(smote(few, bad), Error);
}

TEST_CASE("predict_proba examples") {
  LogisticModel m;
  m.feature_names = {"x"};
  m.stats = Standardization{{0.0}, {1.0}, {false}};
  m.weights = Eigen::VectorXd::Zero(1);
  CHECK(m.predict_proba(std::vector<double>{42.0}) == 0.5);
  m.weights(0) = 1.0;
  CHECK(m.predict_proba(std::vector<double>{std::log(3.0)}) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(stable_sigmoid(-50.0) > 0.0);
  CHECK(stable_sigmoid(-1000.0) > 0.0);
  CHECK(stable_sigmoid(1000.0) < 1.0);
  try {
    m.predict_proba(std::vector<double>{1.0, 2.0});
    FAIL("expected FeatureMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FeatureMismatch);
  }
}

TEST_CASE("fit_logistic small instances") {
  auto separable = make_dataset({{-1.0}, {1.0}}, {0, 1});
  FitConfig config;
  config.l2_lambda = 0.1;
  auto model = fit_logistic(separable, config);
  CHECK(model.predict_proba(std::vector<double>{-1.0}) < 0.5);
  CHECK(model.predict_proba(std::vector<double>{1.0}) > 0.5);
  CHECK(model.converged);

  auto zeros = make_dataset({{0, 0}, {0, 0}, {0, 0}, {0, 0}}, {1, 0, 0, 0});
  auto flat = fit_logistic(zeros, FitConfig{});
  CHECK(flat.weights.cwiseAbs().maxCoeff() == 0.0);
  CHECK(flat.intercept == doctest::Approx(std::log(0.25 / 0.75)).epsilon(1e-5));
  CHECK(flat.stats.constant == std::vector<bool>{true, true});

  std::mt19937 rng(6);
  auto data = random_dataset(rng, 200, 3, 0.3);
  double base = static_cast<double>(data.positives()) / static_cast<double>(data.rows());
  FitConfig heavy;
  heavy.l2_lambda = 1e8;
  auto shrunk = fit_logistic(data, heavy);
  CHECK(shrunk.weights.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(shrunk.intercept == doctest::Approx(std::log(base / (1 - base))).epsilon(1e-5));

  CHECK_THROWS_AS(fit_logistic(make_dataset({{1}, {2}}, {0, 0}), FitConfig{}), Error);
}

TEST_CASE("logistic gradient matches central finite differences") {
  std::mt19937 rng(9);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    auto data = random_dataset(rng, 20 + static_cast<std::size_t>(trial), 4, 0.4);
    Eigen::MatrixXd x = Standardization::compute(data.features).apply(data.features);
    Eigen::VectorXd w(4);
    for (Eigen::Index i = 0; i < 4; ++i) w(i) = normal(rng);
    double b = normal(rng);
    double lambda = 0.05 * trial;
    auto g = logistic_gradient(x, data.labels, w, b, lambda);
    const double h = 1e-6;
    auto rel = [](double numeric, double analytic) {
      return std::abs(numeric - analytic) / std::max(1e-8, std::abs(numeric) + std::abs(analytic));
    };
    for (Eigen::Index i = 0; i < 4; ++i) {
      Eigen::VectorXd up = w, down = w;
      up(i) += h;
      down(i) -= h;
      double numeric = (logistic_objective(x, data.labels, up, b, lambda) -
                        logistic_objective(x, data.labels, down, b, lambda)) / (2 * h);
      worst = std::max(worst, rel(numeric, g.w(i)));
    }
    double numeric_b = (logistic_objective(x, data.labels, w, b + h, lambda) -
                        logistic_objective(x, data.labels, w, b - h, lambda)) / (2 * h);
    worst = std::max(worst, rel(numeric_b, g.b));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("fit_logistic loss is monotone and converges") {
  std::mt19937 rng(10);
  auto data = random_dataset(rng, 400, 5, 0.2);
  auto model = fit_logistic(data, FitConfig{});
  CHECK(model.converged);
  for (std::size_t i = 1; i < model.loss_history.size(); ++i)
    CHECK(model.loss_history[i] <= model.loss_history[i - 1]);
  CHECK(model.weights.size() == 5);
  auto again = fit_logistic(data, FitConfig{});
  CHECK(again.weights == model.weights);
}

TEST_CASE("scores are invariant to positive column rescaling") {
  std::mt19937 rng(11);
  auto train = random_dataset(rng, 300, 4, 0.3);
  auto test = random_dataset(rng, 100, 4, 0.3);
  auto model = fit_logistic(train, FitConfig{});
  auto scaled_train = train, scaled_test = test;
  scaled_train.features.col(2) *= 3.0;
  scaled_test.features.col(2) *= 3.0;
  auto scaled = fit_logistic(scaled_train, FitConfig{});
  auto p = model.predict_proba(test), q = scaled.predict_proba(scaled_test);
  std::vector<std::size_t> order_p(p.size()), order_q(q.size());
  std::iota(order_p.begin(), order_p.end(), 0);
  std::iota(order_q.begin(), order_q.end(), 0);
  std::stable_sort(order_p.begin(), order_p.end(), [&](auto a, auto b) { return p[a] < p[b]; });
  std::stable_sort(order_q.begin(), order_q.end(), [&](auto a, auto b) { return q[a] < q[b]; });
  CHECK(order_p == order_q);
}

TEST_CASE("logistic model and dataset serialization") {
  std::mt19937 rng(12);
  auto data = random_dataset(rng, 50, 3, 0.4);
  auto model = fit_logistic(data, FitConfig{});
  auto loaded = LogisticModel::from_json(model.to_json());
  CHECK(loaded.weights == model.weights);
  CHECK(loaded.intercept == model.intercept);
  CHECK(loaded.predict_proba(data) == model.predict_proba(data));

  data.keys.clear();
  for (std::size_t r = 0; r < data.rows(); ++r) data.keys.push_back({"P" + std::to_string(r % 4), Date(2021, 3, 1)});
  auto back = Dataset::from_csv(data.to_csv());
  CHECK(back.features == data.features);
  CHECK(back.labels == data.labels);
  CHECK(back.keys == data.keys);
  CHECK(back.feature_names == data.feature_names);

  auto renamed = data;
  renamed.feature_names[0] = "other";
  CHECK_THROWS_AS(model.predict_proba(renamed), Error);
}
