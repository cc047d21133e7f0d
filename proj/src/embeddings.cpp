#include "newsrisk/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "newsrisk/io.hpp"

namespace newsrisk {

const float* WordVectorTable::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return nullptr;
  return data_.data() + it->second * static_cast<std::size_t>(dim_);
}

bool WordVectorTable::add(std::string word, std::span<const float> values) {
  if (static_cast<int>(values.size()) != dim_)
    throw Error(ErrorKind::DimensionMismatch, "vector for '" + word + "' has " + std::to_string(values.size()) +
                                                  " components, expected " + std::to_string(dim_));
  if (index_.count(word)) return false;
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  data_.insert(data_.end(), values.begin(), values.end());
  return true;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

class VecParser {
 public:
  explicit VecParser(const std::unordered_set<std::string>* keep) : keep_(keep) {}

  void line(std::string_view text) {
    ++line_no_;
    if (line_no_ == 1) {
      header(text);
      return;
    }
    auto fields = split_ws(text);
    if (fields.empty()) return;
    if (static_cast<int>(fields.size()) - 1 != table_.dim())
      throw Error(ErrorKind::DimensionMismatch, "line " + std::to_string(line_no_) + ": expected " +
                                                    std::to_string(table_.dim()) + " components, found " +
                                                    std::to_string(fields.size() - 1));
    ++rows_;
    std::string word(fields[0]);
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (keep_ && !keep_->count(word)) return;
    values_.resize(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      float v = 0.0f;
      auto f = fields[i];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no_) + ": bad number '" + std::string(f) + "'");
      if (!std::isfinite(v))
        throw Error(ErrorKind::NonFinite, "line " + std::to_string(line_no_) + ": non-finite component");
      values_[i - 1] = v;
    }
    if (!table_.add(word, values_))
      table_.warnings.push_back("line " + std::to_string(line_no_) + ": duplicate word '" + word + "' ignored");
  }

  WordVectorTable finish() {
    if (line_no_ == 0) throw Error(ErrorKind::MalformedHeader, "empty .vec input");
    if (rows_ != declared_)
      table_.warnings.push_back("header declares " + std::to_string(declared_) + " rows, found " +
                                std::to_string(rows_));
    return std::move(table_);
  }

 private:
  void header(std::string_view text) {
    auto fields = split_ws(text);
    long long count = -1;
    int dim = 0;
    auto number = [](std::string_view f, auto& out) {
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
      return ec == std::errc() && ptr == f.data() + f.size();
    };
    if (fields.size() != 2 || !number(fields[0], count) || !number(fields[1], dim) || count < 0 || dim < 1)
      throw Error(ErrorKind::MalformedHeader, "expected '<count> <dim>' header, got '" + std::string(text) + "'");
    declared_ = count;
    table_ = WordVectorTable(dim);
  }

  const std::unordered_set<std::string>* keep_;
  WordVectorTable table_;
  std::vector<float> values_;
  long long declared_ = 0;
  long long rows_ = 0;
  std::size_t line_no_ = 0;
};

}  // namespace

WordVectorTable parse_vec(std::string_view text, const std::unordered_set<std::string>* keep) {
  VecParser parser(keep);
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    parser.line(text.substr(start, end - start));
    start = end + 1;
  }
  return parser.finish();
}

WordVectorTable load_vec_file(const std::filesystem::path& path, const std::unordered_set<std::string>* keep) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  VecParser parser(keep);
  std::string line;
  while (std::getline(in, line)) parser.line(line);
  return parser.finish();
}

std::string format_vec(const WordVectorTable& table) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim()) + "\n";
  char buf[32];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.words()[i];
    for (float v : table.vector(i)) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(v));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_vec_file(const WordVectorTable& table, const std::filesystem::path& path) {
  io::write_file(path, format_vec(table));
}

DocEmbedding doc_embedding_average(const WordVectorTable& table, std::span<const std::string> tokens) {
  DocEmbedding e;
  e.vector.assign(static_cast<std::size_t>(table.dim()), 0.0);
  std::size_t found = 0;
  for (const auto& t : tokens) {
    const float* v = table.find(t);
    if (!v) continue;
    ++found;
    for (std::size_t k = 0; k < e.vector.size(); ++k) e.vector[k] += static_cast<double>(v[k]);
  }
  if (found) {
    for (double& x : e.vector) x /= static_cast<double>(found);
    e.coverage = static_cast<double>(found) / static_cast<double>(tokens.size());
  }
  return e;
}

std::string embeddings_to_csv(std::span<const DocEmbedding> embeddings) {
  std::size_t dim = embeddings.empty() ? 0 : embeddings.front().vector.size();
  std::string out = "pid,date,coverage";
  for (std::size_t k = 1; k <= dim; ++k) out += ",f" + std::to_string(k);
  out += '\n';
  for (const auto& e : embeddings) {
    if (e.vector.size() != dim) throw Error(ErrorKind::DimensionMismatch, "embedding dimensions differ");
    out += io::csv_escape(e.pid) + "," + e.date.to_string() + "," + io::format_double(e.coverage);
    for (double v : e.vector) out += "," + io::format_double(v);
    out += '\n';
  }
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

namespace {

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double z = std::exp(x);
  return z / (1.0 + z);
}

// Negative-sampling loss at hidden input h. outputs[0] is the target, the rest
// are noise words. Writes dL/d(u_o . h) per output into coef and adds dL/dh
// into grad_h.
double ns_kernel(const double* h, std::size_t dim, std::span<const double* const> outputs, double* coef,
                 double* grad_h) {
  double loss = 0.0;
  for (std::size_t o = 0; o < outputs.size(); ++o) {
    const double* u = outputs[o];
    double score = 0.0;
    for (std::size_t k = 0; k < dim; ++k) score += u[k] * h[k];
    double label = o == 0 ? 1.0 : 0.0;
    loss -= o == 0 ? log_sigmoid(score) : log_sigmoid(-score);
    coef[o] = sigmoid(score) - label;
  }
  for (std::size_t o = 0; o < outputs.size(); ++o)
    for (std::size_t k = 0; k < dim; ++k) grad_h[k] += coef[o] * outputs[o][k];
  return loss;
}

std::vector<double> hidden_input(std::span<const double> doc, const std::vector<std::vector<double>>& context) {
  std::vector<double> h(doc.begin(), doc.end());
  for (const auto& c : context) {
    if (c.size() != h.size()) throw Error(ErrorKind::DimensionMismatch, "context vector dimension");
    for (std::size_t k = 0; k < h.size(); ++k) h[k] += c[k];
  }
  for (double& x : h) x /= static_cast<double>(1 + context.size());
  return h;
}

std::vector<const double*> output_pointers(std::span<const double> target,
                                           const std::vector<std::vector<double>>& noise) {
  std::vector<const double*> outs = {target.data()};
  for (const auto& n : noise) {
    if (n.size() != target.size()) throw Error(ErrorKind::DimensionMismatch, "noise vector dimension");
    outs.push_back(n.data());
  }
  return outs;
}

std::size_t sample_cdf(const std::vector<double>& cdf, Rng& rng) {
  double r = uniform01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<int> to_ids(const Vocabulary& vocab, std::span<const std::string> tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    int id = vocab.lookup(t);
    if (id >= 0) ids.push_back(id);
  }
  return ids;
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, std::string(what) + " contains a non-finite value");
}

// One SGD pass of PV-DM over a document. Word matrices are updated only through
// `trainable`, which is null during inference. Returns the summed objective
// and the number of examples.
std::pair<double, std::size_t> pvdm_pass(const Doc2VecModel& model, const std::vector<int>& ids, double* doc,
                                         const std::vector<double>& cdf, Rng& rng, Doc2VecModel* trainable,
                                         double lr_start, double lr_end) {
  const std::size_t dim = static_cast<std::size_t>(model.config.dim);
  const int window = model.config.window;
  const int n = static_cast<int>(ids.size());
  std::vector<double> h(dim), grad_h(dim);
  std::vector<const double*> outs;
  std::vector<std::size_t> out_ids;
  std::vector<double> coef;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double lr = n > 1 ? lr_start + (lr_end - lr_start) * static_cast<double>(i) / static_cast<double>(n - 1) : lr_start;
    std::copy(doc, doc + dim, h.begin());
    int lo = std::max(0, i - window), hi = std::min(n - 1, i + window);
    std::size_t context = 0;
    for (int j = lo; j <= hi; ++j) {
      if (j == i) continue;
      const double* w = model.word_input.data() + static_cast<std::size_t>(ids[static_cast<std::size_t>(j)]) * dim;
      for (std::size_t k = 0; k < dim; ++k) h[k] += w[k];
      ++context;
    }
    double inv = 1.0 / static_cast<double>(1 + context);
    for (double& x : h) x *= inv;

    std::size_t target = static_cast<std::size_t>(ids[static_cast<std::size_t>(i)]);
    out_ids.assign(1, target);
    for (int s = 0; s < model.config.negative_samples; ++s) {
      std::size_t noise = sample_cdf(cdf, rng);
      if (noise != target) out_ids.push_back(noise);
    }
    outs.clear();
    for (std::size_t id : out_ids) outs.push_back(model.word_output.data() + id * dim);
    coef.assign(outs.size(), 0.0);
    std::fill(grad_h.begin(), grad_h.end(), 0.0);
    total += ns_kernel(h.data(), dim, outs, coef.data(), grad_h.data());

    if (trainable) {
      for (std::size_t o = 0; o < out_ids.size(); ++o) {
        double* u = trainable->word_output.data() + out_ids[o] * dim;
        for (std::size_t k = 0; k < dim; ++k) u[k] -= lr * coef[o] * h[k];
      }
      for (int j = lo; j <= hi; ++j) {
        if (j == i) continue;
        double* w = trainable->word_input.data() + static_cast<std::size_t>(ids[static_cast<std::size_t>(j)]) * dim;
        for (std::size_t k = 0; k < dim; ++k) w[k] -= lr * inv * grad_h[k];
      }
    }
    for (std::size_t k = 0; k < dim; ++k) doc[k] -= lr * inv * grad_h[k];
  }
  return {total, ids.size()};
}

}  // namespace

double pvdm_objective(std::span<const double> doc, const std::vector<std::vector<double>>& context,
                      std::span<const double> target, const std::vector<std::vector<double>>& noise) {
  auto h = hidden_input(doc, context);
  auto outs = output_pointers(target, noise);
  std::vector<double> coef(outs.size()), grad_h(h.size(), 0.0);
  return ns_kernel(h.data(), h.size(), outs, coef.data(), grad_h.data());
}

PvdmGradient pvdm_gradient(std::span<const double> doc, const std::vector<std::vector<double>>& context,
                           std::span<const double> target, const std::vector<std::vector<double>>& noise) {
  auto h = hidden_input(doc, context);
  auto outs = output_pointers(target, noise);
  std::vector<double> coef(outs.size()), grad_h(h.size(), 0.0);
  ns_kernel(h.data(), h.size(), outs, coef.data(), grad_h.data());
  double inv = 1.0 / static_cast<double>(1 + context.size());
  PvdmGradient g;
  g.doc = grad_h;
  for (double& x : g.doc) x *= inv;
  g.context.assign(context.size(), g.doc);
  auto scaled_h = [&](double c) {
    std::vector<double> v(h);
    for (double& x : v) x *= c;
    return v;
  };
  g.target = scaled_h(coef[0]);
  for (std::size_t o = 1; o < coef.size(); ++o) g.noise.push_back(scaled_h(coef[o]));
  return g;
}

std::vector<double> Doc2VecModel::noise_cdf() const {
  std::vector<double> cdf(counts.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    acc += std::pow(static_cast<double>(counts[i]), 0.75);
    cdf[i] = acc;
  }
  return cdf;
}

Doc2VecModel train_doc2vec_dm(std::span<const TokenList> corpus, const Doc2VecConfig& config) {
  if (config.dim < 1 || config.window < 1 || config.epochs < 1 || config.negative_samples < 0)
    throw Error(ErrorKind::ConfigError, "doc2vec requires dim, window and epochs >= 1");
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "doc2vec corpus is empty");

  std::map<std::string, std::int64_t> freq;
  for (const auto& doc : corpus)
    for (const auto& t : doc) ++freq[t];
  Doc2VecModel model;
  model.config = config;
  std::vector<std::string> words;
  for (const auto& [w, c] : freq) {
    if (c < config.min_count) continue;
    words.push_back(w);
    model.counts.push_back(c);
  }
  if (words.empty()) throw Error(ErrorKind::EmptyCorpus, "doc2vec corpus has no tokens");
  model.vocab = Vocabulary(std::move(words));

  const std::size_t dim = static_cast<std::size_t>(config.dim);
  const std::size_t v = model.vocab.size();
  Rng rng(mix_seed(config.seed, "doc2vec"));
  double half = 0.5 / static_cast<double>(dim);
  model.word_input.resize(v * dim);
  for (double& x : model.word_input) x = (uniform01(rng) * 2.0 - 1.0) * half;
  model.word_output.assign(v * dim, 0.0);
  model.doc_vectors.resize(corpus.size() * dim);
  for (double& x : model.doc_vectors) x = (uniform01(rng) * 2.0 - 1.0) * half;

  std::vector<std::vector<int>> ids;
  std::size_t total_positions = 0;
  for (const auto& doc : corpus) {
    ids.push_back(to_ids(model.vocab, doc));
    total_positions += ids.back().size();
  }
  auto cdf = model.noise_cdf();
  std::vector<std::size_t> order(corpus.size());
  const double span_lr = config.initial_lr - config.min_lr;
  const double schedule = static_cast<double>(total_positions) * config.epochs;
  std::size_t processed = 0;
  auto lr_at = [&](std::size_t done) {
    return config.initial_lr - span_lr * std::min(1.0, static_cast<double>(done) / schedule);
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    double loss = 0.0;
    std::size_t examples = 0;
    for (std::size_t d : order) {
      std::size_t len = ids[d].size();
      if (len == 0) continue;
      double start = lr_at(processed), end = lr_at(processed + len - 1);
      auto [l, n] = pvdm_pass(model, ids[d], model.doc_vectors.data() + d * dim, cdf, rng, &model, start, end);
      loss += l;
      examples += n;
      processed += len;
    }
    model.epoch_losses.push_back(examples ? loss / static_cast<double>(examples) : 0.0);
  }
  require_finite(model.word_input, "doc2vec input matrix");
  require_finite(model.word_output, "doc2vec output matrix");
  require_finite(model.doc_vectors, "doc2vec document vectors");
  return model;
}

DocEmbedding infer_doc_vector(const Doc2VecModel& model, std::span<const std::string> tokens, int steps,
                              std::uint64_t seed) {
  const std::size_t dim = static_cast<std::size_t>(model.config.dim);
  Rng rng(mix_seed(seed, "doc2vec-infer"));
  DocEmbedding e;
  e.vector.resize(dim);
  double half = 0.5 / static_cast<double>(dim);
  for (double& x : e.vector) x = (uniform01(rng) * 2.0 - 1.0) * half;
  auto ids = to_ids(model.vocab, tokens);
  e.coverage = tokens.empty() ? 0.0 : static_cast<double>(ids.size()) / static_cast<double>(tokens.size());
  if (ids.empty() || steps <= 0) return e;

  auto cdf = model.noise_cdf();
  const double span_lr = model.config.initial_lr - model.config.min_lr;
  for (int s = 0; s < steps; ++s) {
    double start = model.config.initial_lr - span_lr * s / steps;
    double end = model.config.initial_lr - span_lr * (s + 1) / steps;
    pvdm_pass(model, ids, e.vector.data(), cdf, rng, nullptr, start, end);
  }
  require_finite(e.vector, "inferred document vector");
  return e;
}

std::string Doc2VecModel::to_json() const {
  nlohmann::json j;
  j["format"] = "newsrisk-doc2vec";
  j["version"] = 1;
  j["config"] = {{"dim", config.dim},
                 {"window", config.window},
                 {"epochs", config.epochs},
                 {"negative_samples", config.negative_samples},
                 {"initial_lr", config.initial_lr},
                 {"min_lr", config.min_lr},
                 {"min_count", config.min_count},
                 {"infer_steps", config.infer_steps},
                 {"seed", config.seed}};
  j["vocab"] = vocab.words();
  j["counts"] = counts;
  j["word_input"] = word_input;
  j["word_output"] = word_output;
  j["doc_vectors"] = doc_vectors;
  j["epoch_losses"] = epoch_losses;
  return j.dump();
}

Doc2VecModel Doc2VecModel::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "newsrisk-doc2vec" || j.at("version") != 1)
      throw Error(ErrorKind::ParseError, "not a version 1 doc2vec model");
    Doc2VecModel m;
    const auto& c = j.at("config");
    m.config.dim = c.at("dim");
    m.config.window = c.at("window");
    m.config.epochs = c.at("epochs");
    m.config.negative_samples = c.at("negative_samples");
    m.config.initial_lr = c.at("initial_lr");
    m.config.min_lr = c.at("min_lr");
    m.config.min_count = c.at("min_count");
    m.config.infer_steps = c.at("infer_steps");
    m.config.seed = c.at("seed");
    m.vocab = Vocabulary(j.at("vocab").get<std::vector<std::string>>());
    m.counts = j.at("counts").get<std::vector<std::int64_t>>();
    m.word_input = j.at("word_input").get<std::vector<double>>();
    m.word_output = j.at("word_output").get<std::vector<double>>();
    m.doc_vectors = j.at("doc_vectors").get<std::vector<double>>();
    m.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
    std::size_t dim = static_cast<std::size_t>(m.config.dim);
    if (m.config.dim < 1 || m.counts.size() != m.vocab.size() || m.word_input.size() != m.vocab.size() * dim ||
        m.word_output.size() != m.word_input.size() || m.doc_vectors.size() % dim != 0)
      throw Error(ErrorKind::ParseError, "doc2vec model matrices are inconsistent");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("doc2vec model: ") + e.what());
  }
}

void Doc2VecModel::save(const std::filesystem::path& path) const { io::write_file(path, to_json()); }

Doc2VecModel Doc2VecModel::load(const std::filesystem::path& path) { return from_json(io::read_file(path)); }

}  // namespace newsrisk
