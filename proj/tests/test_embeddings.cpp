#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "newsrisk/embeddings.hpp"

using namespace newsrisk;

TEST_CASE("parse_vec examples") {
  auto table = parse_vec("2 3\na 1 0 0\nb 0 1 0");
  CHECK(table.dim() == 3);
  CHECK(table.size() == 2);
  REQUIRE(table.find("a") != nullptr);
  CHECK(std::vector<float>(table.find("a"), table.find("a") + 3) == std::vector<float>{1, 0, 0});
  CHECK(std::vector<float>(table.find("b"), table.find("b") + 3) == std::vector<float>{0, 1, 0});
  CHECK(table.find("c") == nullptr);
  CHECK(table.warnings.empty());

  try {
    parse_vec("2 3\na 1 0 0\nb 0 1\n");
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  for (const char* bad : {"", "3\na 1 2 3\n", "x 3\n", "2 0\n", "2 3 4\n"}) {
    try {
      parse_vec(bad);
      FAIL("expected MalformedHeader");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MalformedHeader);
    }
  }
  CHECK_THROWS_AS(parse_vec("1 2\na 1 nan\n"), Error);
  CHECK_THROWS_AS(parse_vec("1 2\na 1 x\n"), Error);
}

TEST_CASE("parse_vec tolerates drift and keeps the first duplicate") {
  auto table = parse_vec("5 2\nWord 1 2 \nword 3 4\nother 0.5 -0.25\n");
  CHECK(table.size() == 2);
  CHECK(table.find("word")[0] == 1.0f);
  CHECK(table.find("Word") == nullptr);
  REQUIRE(table.warnings.size() == 2);
  CHECK(table.warnings[0].find("duplicate") != std::string::npos);
  CHECK(table.warnings[1].find("declares 5") != std::string::npos);

  std::unordered_set<std::string> keep = {"other"};
  auto filtered = parse_vec("3 2\nword 1 2\nother 0.5 -0.25\n", &keep);
  CHECK(filtered.size() == 1);
  CHECK(filtered.find("other")[1] == -0.25f);
}

TEST_CASE(".vec save and load round-trip exactly") {
  std::mt19937 rng(5);
  std::normal_distribution<float> normal(0.0f, 3.0f);
  WordVectorTable table(7);
  for (int w = 0; w < 50; ++w) {
    std::vector<float> v(7);
    for (auto& x : v) x = normal(rng) * std::pow(10.0f, static_cast<float>(w % 9) - 4.0f);
    table.add("w" + std::to_string(w), v);
  }
  auto path = std::filesystem::temp_directory_path() / "newsrisk_roundtrip.vec";
  save_vec_file(table, path);
  auto loaded = load_vec_file(path);
  std::filesystem::remove(path);
  REQUIRE(loaded.size() == table.size());
  CHECK(loaded.words() == table.words());
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto a = table.vector(i), b = loaded.vector(i);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
  CHECK(format_vec(loaded) == format_vec(table));
}

TEST_CASE("doc_embedding_average examples and properties") {
  auto table = parse_vec("2 3\na 1 0 0\nb 0 1 0");
  using Tokens = std::vector<std::string>;
  auto one = doc_embedding_average(table, Tokens{"a"});
  CHECK(one.vector == std::vector<double>{1, 0, 0});
  CHECK(one.coverage == 1.0);
  auto two = doc_embedding_average(table, Tokens{"a", "b"});
  CHECK(two.vector == std::vector<double>{0.5, 0.5, 0});
  CHECK(two.coverage == 1.0);
  auto oov = doc_embedding_average(table, Tokens{"zzz"});
  CHECK(oov.vector == std::vector<double>{0, 0, 0});
  CHECK(oov.coverage == 0.0);
  auto empty = doc_embedding_average(table, Tokens{});
  CHECK(empty.vector == std::vector<double>{0, 0, 0});
  auto partial = doc_embedding_average(table, Tokens{"a", "zzz", "a", "b"});
  CHECK(partial.coverage == 0.75);
  CHECK(partial.vector[0] == doctest::Approx(2.0 / 3.0));

  std::mt19937 rng(8);
  std::vector<std::string> pool = {"a", "b", "q"};
  for (int trial = 0; trial < 100; ++trial) {
    Tokens doc;
    for (unsigned i = rng() % 12 + 1; i > 0; --i) doc.push_back(pool[rng() % 3]);
    auto base = doc_embedding_average(table, doc);
    auto shuffled = doc;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto doubled = doc;
    doubled.insert(doubled.end(), doc.begin(), doc.end());
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(doc_embedding_average(table, shuffled).vector[k] == doctest::Approx(base.vector[k]).epsilon(1e-12));
      CHECK(doc_embedding_average(table, doubled).vector[k] == doctest::Approx(base.vector[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("embeddings_to_csv") {
  DocEmbedding e{"P1", Date::parse("2020-01-02"), {0.5, -1.0}, 1.0};
  std::vector<DocEmbedding> rows = {e};
  CHECK(embeddings_to_csv(rows) == "pid,date,coverage,f1,f2\nP1,2020-01-02,1,0.5,-1\n");
}

TEST_CASE("PV-DM analytic gradient matches central finite differences") {
  std::mt19937 rng(21);
  std::normal_distribution<double> normal(0.0, 0.7);
  const std::size_t dim = 8;
  auto random_vec = [&] {
    std::vector<double> v(dim);
    for (auto& x : v) x = normal(rng);
    return v;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto doc = random_vec();
    std::vector<std::vector<double>> context(static_cast<std::size_t>(1 + trial % 6));
    for (auto& c : context) c = random_vec();
    auto target = random_vec();
    std::vector<std::vector<double>> noise(5);
    for (auto& n : noise) n = random_vec();
    auto g = pvdm_gradient(doc, context, target, noise);

    const double h = 1e-5;
    auto check = [&](std::vector<double>& param, const std::vector<double>& analytic) {
      for (std::size_t k = 0; k < dim; ++k) {
        double saved = param[k];
        param[k] = saved + h;
        double up = pvdm_objective(doc, context, target, noise);
        param[k] = saved - h;
        double down = pvdm_objective(doc, context, target, noise);
        param[k] = saved;
        double numeric = (up - down) / (2 * h);
        double rel = std::abs(numeric - analytic[k]) / std::max(1e-8, std::abs(numeric) + std::abs(analytic[k]));
        worst = std::max(worst, rel);
      }
    };
    check(doc, g.doc);
    for (std::size_t c = 0; c < context.size(); ++c) check(context[c], g.context[c]);
    check(target, g.target);
    for (std::size_t n = 0; n < noise.size(); ++n) check(noise[n], g.noise[n]);
  }
  CHECK(worst <= 1e-4);
}

namespace {

std::vector<TokenList> cluster_corpus(int docs_per_cluster, int len, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<TokenList> corpus;
  for (int d = 0; d < 2 * docs_per_cluster; ++d) {
    std::string prefix = d % 2 ? "red" : "blue";
    TokenList doc;
    for (int i = 0; i < len; ++i) doc.push_back(prefix + std::to_string(rng() % 15));
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

Doc2VecConfig small_d2v() {
  Doc2VecConfig config;
  config.dim = 16;
  config.window = 3;
  config.epochs = 20;
  config.seed = 4;
  return config;
}

}  // namespace

TEST_CASE("train_doc2vec_dm") {
  auto corpus = cluster_corpus(20, 60, 1);
  auto model = train_doc2vec_dm(corpus, small_d2v());
  CHECK(model.num_docs() == corpus.size());
  CHECK(model.vocab.size() == 30);
  REQUIRE(model.epoch_losses.size() == 20);
  CHECK(model.epoch_losses.back() < model.epoch_losses.front());

  auto again = train_doc2vec_dm(corpus, small_d2v());
  CHECK(again.doc_vectors == model.doc_vectors);
  CHECK(again.word_output == model.word_output);

  double within = 0.0, between = 0.0;
  int nw = 0, nb = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (std::size_t j = i + 1; j < corpus.size(); ++j) {
      double c = cosine_similarity(model.doc_vector(i), model.doc_vector(j));
      if (i % 2 == j % 2) {
        within += c;
        ++nw;
      } else {
        between += c;
        ++nb;
      }
    }
  CHECK(within / nw > between / nb);

  CHECK_THROWS_AS(train_doc2vec_dm(std::vector<TokenList>{}, small_d2v()), Error);
  try {
    train_doc2vec_dm(std::vector<TokenList>{{}, {}}, small_d2v());
    FAIL("expected EmptyCorpus");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyCorpus);
  }
}

TEST_CASE("infer_doc_vector") {
  auto corpus = cluster_corpus(20, 60, 2);
  auto model = train_doc2vec_dm(corpus, small_d2v());
  double mean_cos = 0.0;
  for (std::size_t d = 0; d < 6; ++d) {
    auto inferred = infer_doc_vector(model, corpus[d], 20, 7);
    CHECK(inferred.coverage == 1.0);
    mean_cos += cosine_similarity(inferred.vector, model.doc_vector(d));
  }
  CHECK(mean_cos / 6 > 0.5);

  auto a = infer_doc_vector(model, corpus[0], 10, 3);
  auto b = infer_doc_vector(model, corpus[0], 10, 3);
  CHECK(a.vector == b.vector);

  auto oov = infer_doc_vector(model, std::vector<std::string>{"nothere", "neither"}, 10, 3);
  auto init = infer_doc_vector(model, corpus[0], 0, 3);
  CHECK(oov.coverage == 0.0);
  CHECK(oov.vector == init.vector);
}

TEST_CASE("Doc2Vec model serialization round-trips") {
  auto corpus = cluster_corpus(4, 20, 3);
  auto config = small_d2v();
  config.epochs = 2;
  auto model = train_doc2vec_dm(corpus, config);
  auto loaded = Doc2VecModel::from_json(model.to_json());
  CHECK(loaded.word_input == model.word_input);
  CHECK(loaded.word_output == model.word_output);
  CHECK(loaded.doc_vectors == model.doc_vectors);
  CHECK(loaded.vocab.words() == model.vocab.words());
  CHECK(loaded.config.seed == model.config.seed);
  CHECK(infer_doc_vector(loaded, corpus[1], 5, 1).vector == infer_doc_vector(model, corpus[1], 5, 1).vector);
  CHECK_THROWS_AS(Doc2VecModel::from_json(R"({"format":"newsrisk-lda","version":1})"), Error);
}
