#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "newsrisk/evaluation.hpp"

using namespace newsrisk;

namespace {

ScoredSet make_scored(const std::vector<double>& scores, const std::vector<int>& labels) {
  ScoredSet out;
  for (std::size_t i = 0; i < scores.size(); ++i)
    out.push_back({"P" + std::to_string(i % 3), Date(2020, 1, 1).plus_days(static_cast<int>(i)), scores[i], labels[i]});
  return out;
}

double brute_force_auc(const ScoredSet& s) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const auto& p : s)
    for (const auto& n : s) {
      if (p.label != 1 || n.label != 0) continue;
      pairs += 1.0;
      wins += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
    }
  return wins / pairs;
}

ScoredSet random_scored(std::mt19937& rng, std::size_t n, int levels) {
  ScoredSet s;
  for (std::size_t i = 0; i < n; ++i) {
    int label = static_cast<int>(rng() % 4 == 0);
    double score = static_cast<double>(rng() % static_cast<unsigned>(levels)) / levels;
    s.push_back({"P", Date(2020, 1, 1), score, label});
  }
  s[0].label = 1;
  s[1].label = 0;
  return s;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc(make_scored({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})) == 1.0);
  CHECK(auc(make_scored({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0})) == 0.5);
  CHECK(auc(make_scored({0.9, 0.8, 0.8, 0.1}, {1, 0, 1, 0})) == 0.875);
  try {
    auc(make_scored({0.1, 0.2}, {1, 1}));
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingleClass);
  }
}

TEST_CASE("auc matches brute force and is invariant to monotone transforms") {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = random_scored(rng, 2 + rng() % 300, 1 + static_cast<int>(rng() % 20));
    double a = auc(s);
    CHECK(std::abs(a - brute_force_auc(s)) <= 1e-12);
    auto t = s;
    for (auto& r : t) r.score = std::exp(3.0 * r.score) - 7.0;
    CHECK(auc(t) == a);
  }
  auto big = random_scored(rng, 10000, 1000);
  CHECK(std::abs(auc(big) - brute_force_auc(big)) <= 1e-12);
}

TEST_CASE("recall_at_threshold") {
  CHECK(recall_at_threshold(make_scored({0.9, 0.9, 0.1}, {1, 1, 0})) == 1.0);
  CHECK(recall_at_threshold(make_scored({0.6, 0.4, 0.9}, {1, 1, 0})) == 0.5);
  CHECK(recall_at_threshold(make_scored({0.5}, {1}), 0.5) == 1.0);
  CHECK_THROWS_AS(recall_at_threshold(make_scored({0.5}, {0})), Error);

  std::mt19937 rng(2);
  auto s = random_scored(rng, 200, 50);
  double previous = 1.0;
  for (int i = 0; i <= 100; ++i) {
    double r = recall_at_threshold(s, i / 100.0);
    CHECK(r <= previous);
    previous = r;
  }
}

TEST_CASE("cumulative_gains") {
  // perfect model, 5% positives
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) {
    scores.push_back(1.0 - i / 100.0);
    labels.push_back(i < 5);
  }
  auto s = make_scored(scores, labels);
  std::vector<double> grid = {0.05, 0.5, 1.0};
  auto curve = cumulative_gains(s, grid);
  CHECK(curve[0].captured == 1.0);
  CHECK(curve.back().fraction == 1.0);
  CHECK(curve.back().captured == 1.0);

  // ties are broken by input order: the second tied positive falls outside top 1
  auto tied = make_scored({0.5, 0.5, 0.5, 0.1}, {0, 1, 0, 1});
  std::vector<double> g = {0.25, 0.5, 1.0};
  auto tc = cumulative_gains(tied, g);
  CHECK(tc[0].captured == 0.0);
  CHECK(tc[1].captured == 0.5);

  // 0.07 * 100 must select 7 rows, not 8
  std::vector<double> g7 = {0.07, 1.0};
  std::vector<int> l7(100, 0);
  l7[7] = 1;
  std::vector<double> s7;
  for (int i = 0; i < 100; ++i) s7.push_back(1.0 - i / 100.0);
  CHECK(cumulative_gains(make_scored(s7, l7), g7)[0].captured == 0.0);

  std::mt19937 rng(3);
  auto grid_full = default_gains_grid();
  CHECK(grid_full.size() == 100);
  for (int trial = 0; trial < 50; ++trial) {
    auto r = random_scored(rng, 10 + rng() % 200, 7);
    auto c = cumulative_gains(r, grid_full);
    for (std::size_t i = 1; i < c.size(); ++i) {
      CHECK(c[i].fraction > c[i - 1].fraction);
      CHECK(c[i].captured >= c[i - 1].captured);
    }
    CHECK(c.back().captured == 1.0);
  }
  std::vector<double> bad = {0.5, 0.9};
  CHECK_THROWS_AS(cumulative_gains(s, bad), Error);
  CHECK(gains_to_csv({{0.5, 0.25}, {1.0, 1.0}}) == "fraction,captured\n0.5,0.25\n1,1\n");
}

TEST_CASE("robustness_experiment aggregates per-seed gains") {
  auto run = [](std::uint64_t seed) {
    if (seed == 99) throw Error(ErrorKind::DegenerateData, "bad seed");
    return std::pair<double, double>{0.7, 0.7 + 0.01 * static_cast<double>(seed % 4) - 0.005};
  };
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 99};
  auto report = robustness_experiment(run, seeds, 2);
  REQUIRE(report.runs.size() == 5);
  CHECK(report.failed_count == 1);
  CHECK_FALSE(report.runs[4].ok);
  CHECK(report.gains.size() == 4);
  // gains: 0.005, 0.015, 0.025, -0.005
  CHECK(report.positive_count == 3);
  CHECK(report.mean_gain == doctest::Approx(0.01));
  double sd = std::sqrt((0.005 * 0.005 + 0.005 * 0.005 + 0.015 * 0.015 + 0.015 * 0.015) / 3.0);
  CHECK(report.std_gain == doctest::Approx(sd));
  CHECK(report.std_error == doctest::Approx(sd / 2.0));
  CHECK(report.to_json() == robustness_experiment(run, seeds, 1).to_json());

  std::vector<std::uint64_t> one = {2};
  auto single = robustness_experiment(run, one);
  CHECK(single.single_run);
  CHECK(single.std_gain == 0.0);
  CHECK(single.runs_to_csv().rfind("seed,status,benchmark_auc,final_auc,gain\n2,ok,", 0) == 0);
}

TEST_CASE("histogram") {
  std::vector<double> values = {0.0, 0.1, 0.2, 0.25, 1.0};
  auto h = histogram(values, 4);
  CHECK(h.edges == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(h.counts == std::vector<std::size_t>{3, 1, 0, 1});
  CHECK(histogram_to_csv(h).rfind("bin_left,bin_right,count\n0,0.25,3\n", 0) == 0);
  std::vector<double> same = {0.2, 0.2};
  auto hs = histogram(same, 3);
  CHECK(hs.counts[0] + hs.counts[1] + hs.counts[2] == 2);
  CHECK(hs.edges.front() < 0.2);
  CHECK(hs.edges.back() > 0.2);
}

TEST_CASE("inspection_report") {
  std::vector<CleanDocument> docs;
  for (int i = 0; i < 4; ++i) {
    CleanDocument d;
    d.pid = i < 2 ? "A" : "B";
    d.date = Date(2020, 1, 1).plus_days(i);
    for (int t = 0; t < 250; ++t) d.tokens.push_back("t" + std::to_string(t));
    docs.push_back(d);
  }
  ScoredSet scored = {{"A", Date(2020, 1, 1), 0.7, 1},
                      {"A", Date(2020, 1, 2), 0.9, 1},
                      {"B", Date(2020, 1, 3), 0.2, 1},
                      {"B", Date(2020, 1, 4), 0.95, 0}};
  auto report = inspection_report(scored, 0.5, docs);
  REQUIRE(report.true_positives.size() == 2);
  CHECK(report.true_positives[0].score == 0.9);
  CHECK(report.tp_companies() == 1);
  REQUIRE(report.false_negatives.size() == 1);
  CHECK(report.false_negatives[0].pid == "B");
  auto words = std::count(report.true_positives[0].snippet.begin(), report.true_positives[0].snippet.end(), ' ') + 1;
  CHECK(words == 200);
  CHECK(report.to_markdown().find("### A") != std::string::npos);

  auto none = inspection_report(scored, 0.99, docs);
  CHECK(none.true_positives.empty());
  CHECK(none.false_negatives.size() == 3);

  scored.push_back({"C", Date(2020, 1, 1), 0.5, 1});
  try {
    inspection_report(scored, 0.5, docs);
    FAIL("expected JoinKeyMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::JoinKeyMismatch);
  }
}

TEST_CASE("scored CSV round-trip") {
  auto s = make_scored({0.25, 0.125}, {1, 0});
  auto back = parse_scored_csv(scored_to_csv(s));
  REQUIRE(back.size() == 2);
  CHECK(back[0].score == 0.25);
  CHECK(back[1].label == 0);
  CHECK(back[1].date == s[1].date);
}
