#include "newsrisk/classifier.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <nlohmann/json.hpp>

#include "newsrisk/io.hpp"

namespace newsrisk {

std::size_t Dataset::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void Dataset::validate() const {
  if (labels.size() != rows())
    throw Error(ErrorKind::ParseError, "dataset has " + std::to_string(rows()) + " rows but " +
                                           std::to_string(labels.size()) + " labels");
  if (feature_names.size() != cols()) throw Error(ErrorKind::ParseError, "feature name count differs from columns");
  if (!keys.empty() && keys.size() != rows()) throw Error(ErrorKind::ParseError, "row key count differs from rows");
  for (int y : labels)
    if (y != 0 && y != 1) throw Error(ErrorKind::ParseError, "labels must be 0 or 1");
  if (!features.allFinite()) throw Error(ErrorKind::NonFinite, "dataset contains NaN or Inf");
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
  Dataset out;
  out.feature_names = feature_names;
  out.features.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(idx[i]));
    out.labels.push_back(labels[idx[i]]);
    if (!keys.empty()) out.keys.push_back(keys[idx[i]]);
  }
  return out;
}

std::string Dataset::to_csv() const {
  std::string out;
  bool with_keys = !keys.empty();
  if (with_keys) out += "pid,date,";
  for (const auto& name : feature_names) out += io::csv_escape(name) + ",";
  out += "label\n";
  for (std::size_t r = 0; r < rows(); ++r) {
    if (with_keys) out += io::csv_escape(keys[r].pid) + "," + keys[r].date.to_string() + ",";
    for (std::size_t c = 0; c < cols(); ++c)
      out += io::format_double(features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) + ",";
    out += std::to_string(labels[r]) + "\n";
  }
  return out;
}

Dataset Dataset::from_csv(std::string_view text) {
  auto table = io::parse_csv(text);
  std::size_t label_col = table.column("label");
  bool with_keys = table.header.size() >= 2 && table.header[0] == "pid" && table.header[1] == "date";
  std::size_t first = with_keys ? 2 : 0;
  Dataset d;
  for (std::size_t c = first; c < table.header.size(); ++c)
    if (c != label_col) d.feature_names.push_back(table.header[c]);
  d.features.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(d.feature_names.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size())
      throw Error(ErrorKind::ParseError, "dataset row " + std::to_string(r + 2) + " has the wrong field count");
    if (with_keys) d.keys.push_back({row[0], Date::parse(row[1])});
    Eigen::Index c_out = 0;
    for (std::size_t c = first; c < row.size(); ++c) {
      if (c == label_col) continue;
      d.features(static_cast<Eigen::Index>(r), c_out++) = io::parse_double(row[c], "dataset feature");
    }
    const auto& y = row[label_col];
    if (y != "0" && y != "1") throw Error(ErrorKind::ParseError, "label must be 0 or 1, got '" + y + "'");
    d.labels.push_back(y == "1");
  }
  d.validate();
  return d;
}

Standardization Standardization::compute(const Eigen::MatrixXd& x) {
  Standardization s;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    double mean = n > 0 ? x.col(c).mean() : 0.0;
    double var = n > 0 ? (x.col(c).array() - mean).square().sum() / n : 0.0;
    bool constant = n == 0 || x.col(c).maxCoeff() == x.col(c).minCoeff();
    s.mean.push_back(mean);
    s.stddev.push_back(constant || var <= 0.0 ? 1.0 : std::sqrt(var));
    s.constant.push_back(constant);
  }
  return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != size())
    throw Error(ErrorKind::FeatureMismatch, "standardization expects " + std::to_string(size()) + " columns");
  Eigen::MatrixXd z(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    auto i = static_cast<std::size_t>(c);
    if (constant[i])
      z.col(c).setZero();
    else
      z.col(c) = (x.col(c).array() - mean[i]) / stddev[i];
  }
  return z;
}

SmoteResult smote_with_origins(const Dataset& data, const SmoteConfig& config) {
  data.validate();
  if (config.k_neighbors < 1) throw Error(ErrorKind::ConfigError, "SMOTE k_neighbors must be >= 1");
  if (!(config.target_minority_ratio > 0.0 && config.target_minority_ratio <= 1.0))
    throw Error(ErrorKind::ConfigError, "SMOTE target_minority_ratio must be in (0, 1]");

  std::vector<std::size_t> minority;
  for (std::size_t r = 0; r < data.rows(); ++r)
    if (data.labels[r] == 1) minority.push_back(r);
  std::size_t majority = data.rows() - minority.size();
  const std::size_t k = static_cast<std::size_t>(config.k_neighbors);
  if (minority.size() < k + 1)
    throw Error(ErrorKind::TooFewMinority, "SMOTE needs at least " + std::to_string(k + 1) + " minority rows, found " +
                                               std::to_string(minority.size()));

  auto target = static_cast<std::size_t>(std::ceil(config.target_minority_ratio * static_cast<double>(majority)));
  std::size_t needed = target > minority.size() ? target - minority.size() : 0;

  SmoteResult result;
  result.data = data;
  if (needed == 0) return result;

  Eigen::MatrixXd z = Standardization::compute(data.features).apply(data.features);
  const std::size_t m = minority.size();
  std::vector<std::vector<std::size_t>> neighbors(m);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < m; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      double d = (z.row(static_cast<Eigen::Index>(minority[i])) - z.row(static_cast<Eigen::Index>(minority[j])))
                     .squaredNorm();
      dist.emplace_back(d, j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t n = 0; n < k; ++n) neighbors[i].push_back(minority[dist[n].second]);
  }

  Rng rng(mix_seed(config.seed, "smote"));
  const Eigen::Index old_rows = data.features.rows();
  result.data.features.conservativeResize(old_rows + static_cast<Eigen::Index>(needed), Eigen::NoChange);
  for (std::size_t s = 0; s < needed; ++s) {
    std::size_t i = uniform_index(rng, m);
    std::size_t base = minority[i];
    std::size_t nb = neighbors[i][uniform_index(rng, k)];
    double u = uniform01(rng);
    auto b = data.features.row(static_cast<Eigen::Index>(base));
    auto n = data.features.row(static_cast<Eigen::Index>(nb));
    result.data.features.row(old_rows + static_cast<Eigen::Index>(s)) = b + u * (n - b);
    result.data.labels.push_back(1);
    if (!data.keys.empty()) result.data.keys.push_back({kSyntheticPid, data.keys[base].date});
    result.origins.push_back({base, nb, u});
  }
  return result;
}

Dataset smote(const Dataset& data, const SmoteConfig& config) { return smote_with_origins(data, config).data; }

double stable_sigmoid(double score) {
  double p;
  if (score >= 0) {
    p = 1.0 / (1.0 + std::exp(-score));
  } else {
    double e = std::exp(score);
    p = e / (1.0 + e);
  }
  return std::clamp(p, DBL_MIN, std::nextafter(1.0, 0.0));
}

namespace {

// log(1 + exp(x)) without overflow
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Eigen::VectorXd label_vector(std::span<const int> labels) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels[i];
  return y;
}

}  // namespace

double logistic_objective(const Eigen::MatrixXd& x, std::span<const int> labels, const Eigen::VectorXd& w, double b,
                          double lambda) {
  Eigen::VectorXd score = (x * w).array() + b;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < score.size(); ++i)
    nll += labels[static_cast<std::size_t>(i)] ? softplus(-score(i)) : softplus(score(i));
  return nll / static_cast<double>(x.rows()) + 0.5 * lambda * w.squaredNorm();
}

LogisticGradient logistic_gradient(const Eigen::MatrixXd& x, std::span<const int> labels, const Eigen::VectorXd& w,
                                   double b, double lambda) {
  Eigen::VectorXd score = (x * w).array() + b;
  Eigen::VectorXd residual = score.unaryExpr([](double s) {
    return s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
  }) - label_vector(labels);
  const double n = static_cast<double>(x.rows());
  return {x.transpose() * residual / n + lambda * w, residual.sum() / n};
}

LogisticModel fit_logistic(const Dataset& data, const FitConfig& config) {
  data.validate();
  std::size_t pos = data.positives();
  if (pos == 0 || pos == data.rows())
    throw Error(ErrorKind::DegenerateData, "logistic fit needs both classes present");
  if (config.l2_lambda < 0 || config.max_epochs < 0 || config.tolerance <= 0)
    throw Error(ErrorKind::ConfigError, "invalid logistic fit configuration");

  LogisticModel model;
  model.feature_names = data.feature_names;
  model.stats = Standardization::compute(data.features);
  model.l2_lambda = config.l2_lambda;
  model.seed = config.seed;
  const Eigen::MatrixXd x = model.stats.apply(data.features);
  const std::span<const int> y(data.labels);
  const double lambda = config.l2_lambda;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
  double b = 0.0;
  double loss = logistic_objective(x, y, w, b, lambda);
  auto grad = logistic_gradient(x, y, w, b, lambda);
  model.loss_history.push_back(loss);
  // Diagonal preconditioner: standardized features bound the NLL curvature by 1/4.
  const double pw = 1.0 / (0.25 + lambda), pb = 4.0;
  double step = 1.0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    double gmax = std::max(grad.w.size() ? grad.w.cwiseAbs().maxCoeff() : 0.0, std::abs(grad.b));
    if (gmax < config.tolerance) {
      model.converged = true;
      break;
    }
    Eigen::VectorXd dw = -pw * grad.w;
    double db = -pb * grad.b;
    double slope = grad.w.dot(dw) + grad.b * db;
    Eigen::VectorXd w_new;
    double b_new = 0.0, loss_new = 0.0;
    bool accepted = false;
    for (double t = step; t > 1e-20; t *= 0.5) {
      w_new = w + t * dw;
      b_new = b + t * db;
      loss_new = logistic_objective(x, y, w_new, b_new, lambda);
      if (std::isfinite(loss_new) && loss_new <= loss + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    auto grad_new = logistic_gradient(x, y, w_new, b_new, lambda);
    // Barzilai-Borwein proposal for the next trial step, in the preconditioned metric
    Eigen::VectorXd sw = w_new - w, gw = grad_new.w - grad.w;
    double sb = b_new - b, gb = grad_new.b - grad.b;
    double sy = sw.dot(gw) + sb * gb;
    double ss = sw.squaredNorm() / pw + sb * sb / pb;
    step = sy > 0 ? std::clamp(ss / sy, 1e-10, 1e10) : step * 2.0;
    w = std::move(w_new);
    b = b_new;
    loss = loss_new;
    grad = std::move(grad_new);
    model.loss_history.push_back(loss);
  }
  if (!std::isfinite(loss) || !w.allFinite() || !std::isfinite(b))
    throw Error(ErrorKind::NonFinite, "logistic fit diverged");
  model.weights = w;
  model.intercept = b;
  return model;
}

double LogisticModel::predict_logit(std::span<const double> row) const {
  if (row.size() != feature_names.size())
    throw Error(ErrorKind::FeatureMismatch, "row has " + std::to_string(row.size()) + " features, model expects " +
                                                std::to_string(feature_names.size()));
  double score = intercept;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (stats.constant[i]) continue;
    score += weights(static_cast<Eigen::Index>(i)) * (row[i] - stats.mean[i]) / stats.stddev[i];
  }
  return score;
}

double LogisticModel::predict_proba(std::span<const double> row) const { return stable_sigmoid(predict_logit(row)); }

std::vector<double> LogisticModel::predict_proba(const Dataset& data) const {
  if (data.feature_names != feature_names)
    throw Error(ErrorKind::FeatureMismatch, "dataset features differ from the model's features");
  Eigen::VectorXd score = (stats.apply(data.features) * weights).array() + intercept;
  std::vector<double> out(static_cast<std::size_t>(score.size()));
  for (Eigen::Index i = 0; i < score.size(); ++i) out[static_cast<std::size_t>(i)] = stable_sigmoid(score(i));
  return out;
}

std::string LogisticModel::to_json() const {
  nlohmann::json j;
  j["format"] = "newsrisk-logistic";
  j["version"] = 1;
  j["feature_names"] = feature_names;
  j["mean"] = stats.mean;
  j["stddev"] = stats.stddev;
  j["constant"] = stats.constant;
  j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
  j["intercept"] = intercept;
  j["l2_lambda"] = l2_lambda;
  j["seed"] = seed;
  j["converged"] = converged;
  return j.dump(1);
}

LogisticModel LogisticModel::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "newsrisk-logistic" || j.at("version") != 1)
      throw Error(ErrorKind::ParseError, "not a version 1 logistic model");
    LogisticModel m;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.stats.mean = j.at("mean").get<std::vector<double>>();
    m.stats.stddev = j.at("stddev").get<std::vector<double>>();
    m.stats.constant = j.at("constant").get<std::vector<bool>>();
    auto w = j.at("weights").get<std::vector<double>>();
    m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.intercept = j.at("intercept");
    m.l2_lambda = j.at("l2_lambda");
    m.seed = j.at("seed");
    m.converged = j.at("converged");
    std::size_t n = m.feature_names.size();
    if (m.stats.mean.size() != n || m.stats.stddev.size() != n || m.stats.constant.size() != n || w.size() != n)
      throw Error(ErrorKind::ParseError, "logistic model arrays have inconsistent lengths");
    if (!m.weights.allFinite() || !std::isfinite(m.intercept))
      throw Error(ErrorKind::NonFinite, "logistic model has non-finite parameters");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("logistic model: ") + e.what());
  }
}

void LogisticModel::save(const std::filesystem::path& path) const { io::write_file(path, to_json()); }

LogisticModel LogisticModel::load(const std::filesystem::path& path) { return from_json(io::read_file(path)); }

}  // namespace newsrisk
