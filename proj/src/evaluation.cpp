#include "newsrisk/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "newsrisk/io.hpp"

namespace newsrisk {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::DimensionMismatch, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (double s : scores)
    if (!std::isfinite(s)) throw Error(ErrorKind::NonFinite, "AUC scores must be finite");
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) {
        rank_sum += midrank;
        ++positives;
      }
    i = j;
  }
  std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw Error(ErrorKind::SingleClass, "AUC needs both classes");
  double p = static_cast<double>(positives);
  double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double auc(std::span<const ScoredRow> scored) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& r : scored) {
    scores.push_back(r.score);
    labels.push_back(r.label);
  }
  return auc(scores, labels);
}

double recall_at_threshold(std::span<const ScoredRow> scored, double threshold) {
  std::size_t tp = 0, positives = 0;
  for (const auto& r : scored) {
    if (r.label != 1) continue;
    ++positives;
    tp += r.score >= threshold;
  }
  if (positives == 0) throw Error(ErrorKind::NoPositives, "recall needs at least one positive");
  return static_cast<double>(tp) / static_cast<double>(positives);
}

std::vector<double> default_gains_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(i / 100.0);
  return grid;
}

GainsCurve cumulative_gains(std::span<const ScoredRow> scored, std::span<const double> grid) {
  if (grid.empty() || grid.back() != 1.0) throw Error(ErrorKind::ConfigError, "gains grid must end at 1.0");
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!(grid[i] > 0.0) || (i > 0 && grid[i] <= grid[i - 1]))
      throw Error(ErrorKind::ConfigError, "gains grid must be strictly ascending in (0, 1]");
  std::size_t positives = 0;
  for (const auto& r : scored) positives += r.label == 1;
  if (positives == 0 || positives == scored.size()) throw Error(ErrorKind::SingleClass, "gains need both classes");

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scored[a].score > scored[b].score; });
  std::vector<std::size_t> captured_prefix(order.size() + 1, 0);
  for (std::size_t i = 0; i < order.size(); ++i)
    captured_prefix[i + 1] = captured_prefix[i] + (scored[order[i]].label == 1);

  const double n = static_cast<double>(scored.size());
  GainsCurve curve;
  for (double f : grid) {
    // tolerance keeps e.g. 0.07 * 100 from rounding up to 8 rows
    auto top = static_cast<std::size_t>(std::ceil(f * n - 1e-9));
    top = std::min(top, scored.size());
    curve.push_back({f, static_cast<double>(captured_prefix[top]) / static_cast<double>(positives)});
  }
  return curve;
}

std::string gains_to_csv(const GainsCurve& curve) {
  std::string out = "fraction,captured\n";
  for (const auto& p : curve) out += io::format_double(p.fraction) + "," + io::format_double(p.captured) + "\n";
  return out;
}

std::string scored_to_csv(std::span<const ScoredRow> scored) {
  std::string out = "pid,date,score,label\n";
  for (const auto& r : scored)
    out += io::csv_escape(r.pid) + "," + r.date.to_string() + "," + io::format_double(r.score) + "," +
           std::to_string(r.label) + "\n";
  return out;
}

ScoredSet parse_scored_csv(std::string_view text) {
  auto table = io::parse_csv(text);
  std::size_t pid = table.column("pid"), date = table.column("date"), score = table.column("score"),
              label = table.column("label");
  ScoredSet out;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw Error(ErrorKind::ParseError, "scored CSV row has wrong field count");
    const auto& y = row[label];
    if (y != "0" && y != "1") throw Error(ErrorKind::ParseError, "label must be 0 or 1");
    out.push_back({row[pid], Date::parse(row[date]), io::parse_double(row[score], "score"), y == "1"});
  }
  return out;
}

RobustnessReport robustness_experiment(const SeedRun& run, std::span<const std::uint64_t> seeds, int threads) {
  RobustnessReport report;
  report.runs.resize(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      SeedOutcome& out = report.runs[i];
      out.seed = seeds[i];
      try {
        auto [bench, final_auc] = run(seeds[i]);
        out.benchmark_auc = bench;
        out.final_auc = final_auc;
        out.gain = final_auc - bench;
        out.ok = true;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };
  std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, seeds.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : report.runs) {
    if (!r.ok) {
      ++report.failed_count;
      continue;
    }
    report.gains.push_back(r.gain);
    report.positive_count += r.gain > 0.0;
  }
  const std::size_t n = report.gains.size();
  if (n > 0) report.mean_gain = std::accumulate(report.gains.begin(), report.gains.end(), 0.0) / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double g : report.gains) ss += (g - report.mean_gain) * (g - report.mean_gain);
    report.std_gain = std::sqrt(ss / static_cast<double>(n - 1));
    report.std_error = report.std_gain / std::sqrt(static_cast<double>(n));
  }
  report.single_run = n == 1;
  return report;
}

std::string RobustnessReport::to_json() const {
  nlohmann::json j;
  j["requested_seeds"] = runs.size();
  j["completed_seeds"] = gains.size();
  j["failed_seeds"] = failed_count;
  j["mean_gain"] = mean_gain;
  j["std_gain"] = std_gain;
  j["std_error_of_mean"] = std_error;
  j["positive_gain_count"] = positive_count;
  j["single_run_std_convention"] = single_run;
  auto list = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json e = {{"seed", r.seed}, {"ok", r.ok}};
    if (r.ok) {
      e["benchmark_auc"] = r.benchmark_auc;
      e["final_auc"] = r.final_auc;
      e["gain"] = r.gain;
    } else {
      e["error"] = r.error;
    }
    list.push_back(e);
  }
  j["runs"] = list;
  return j.dump(2) + "\n";
}

std::string RobustnessReport::runs_to_csv() const {
  std::string out = "seed,status,benchmark_auc,final_auc,gain\n";
  for (const auto& r : runs) {
    out += std::to_string(r.seed) + "," + (r.ok ? "ok" : "failed") + ",";
    if (r.ok)
      out += io::format_double(r.benchmark_auc) + "," + io::format_double(r.final_auc) + "," +
             io::format_double(r.gain);
    else
      out += ",,";
    out += "\n";
  }
  return out;
}

Histogram histogram(std::span<const double> values, int bins) {
  if (bins < 1) throw Error(ErrorKind::ConfigError, "histogram needs at least one bin");
  Histogram h;
  if (values.empty()) return h;
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  if (lo == hi) {
    double pad = lo == 0.0 ? 0.5 : std::abs(lo) * 0.5;
    lo -= pad;
    hi += pad;
  }
  double width = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(b == bins ? hi : lo + width * b);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>(std::floor((v - lo) / width));
    h.counts[std::min(b, h.counts.size() - 1)]++;
  }
  return h;
}

std::string histogram_to_csv(const Histogram& h) {
  std::string out = "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out += io::format_double(h.edges[b]) + "," + io::format_double(h.edges[b + 1]) + "," +
           std::to_string(h.counts[b]) + "\n";
  return out;
}

namespace {

std::size_t unique_companies(const std::vector<InspectionEntry>& entries) {
  std::set<std::string> pids;
  for (const auto& e : entries) pids.insert(e.pid);
  return pids.size();
}

void render_section(std::string& out, const char* title, const std::vector<InspectionEntry>& entries) {
  out += std::string("## ") + title + " (" + std::to_string(entries.size()) + " rows, " +
         std::to_string(unique_companies(entries)) + " companies)\n\n";
  // group by company, companies ordered by their first row in the section
  std::vector<std::string> order;
  std::map<std::string, std::vector<const InspectionEntry*>> groups;
  for (const auto& e : entries) {
    if (!groups.count(e.pid)) order.push_back(e.pid);
    groups[e.pid].push_back(&e);
  }
  char buf[64];
  for (const auto& pid : order) {
    out += "### " + pid + "\n\n";
    for (const auto* e : groups[pid]) {
      std::snprintf(buf, sizeof buf, "%.4f", e->score);
      out += "- " + e->date.to_string() + " score " + buf + ": " + e->snippet + "\n";
    }
    out += "\n";
  }
}

}  // namespace

std::size_t InspectionReport::tp_companies() const { return unique_companies(true_positives); }

std::size_t InspectionReport::fn_companies() const { return unique_companies(false_negatives); }

std::string InspectionReport::to_markdown() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", threshold);
  std::string out = std::string("# Holdout positives at threshold ") + buf + "\n\n";
  render_section(out, "True positives", true_positives);
  render_section(out, "False negatives", false_negatives);
  return out;
}

std::string InspectionReport::to_json() const {
  auto section = [](const std::vector<InspectionEntry>& entries) {
    auto list = nlohmann::json::array();
    for (const auto& e : entries)
      list.push_back({{"pid", e.pid}, {"date", e.date.to_string()}, {"score", e.score}, {"snippet", e.snippet}});
    return list;
  };
  nlohmann::json j;
  j["threshold"] = threshold;
  j["true_positives"] = section(true_positives);
  j["false_negatives"] = section(false_negatives);
  j["tp_companies"] = tp_companies();
  j["fn_companies"] = fn_companies();
  return j.dump(2) + "\n";
}

InspectionReport inspection_report(std::span<const ScoredRow> scored, double threshold,
                                   std::span<const CleanDocument> documents) {
  std::unordered_map<RowKey, const CleanDocument*, RowKeyHash> by_key;
  for (const auto& d : documents) by_key.emplace(d.key(), &d);
  InspectionReport report;
  report.threshold = threshold;
  for (const auto& r : scored) {
    if (r.label != 1) continue;
    auto it = by_key.find({r.pid, r.date});
    if (it == by_key.end())
      throw Error(ErrorKind::JoinKeyMismatch, "no document for " + r.pid + " on " + r.date.to_string());
    InspectionEntry e{r.pid, r.date, r.score, {}};
    const auto& tokens = it->second->tokens;
    for (std::size_t i = 0; i < std::min(tokens.size(), kSnippetTokens); ++i) {
      if (i) e.snippet += ' ';
      e.snippet += tokens[i];
    }
    (r.score >= threshold ? report.true_positives : report.false_negatives).push_back(std::move(e));
  }
  std::stable_sort(report.true_positives.begin(), report.true_positives.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  std::stable_sort(report.false_negatives.begin(), report.false_negatives.end(),
                   [](const auto& a, const auto& b) { return a.score < b.score; });
  return report;
}

}  // namespace newsrisk
