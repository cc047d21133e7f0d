#include "newsrisk/ratings.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "newsrisk/io.hpp"

namespace newsrisk {

const NotchScale& NotchScale::standard() {
  static const NotchScale scale = [] {
    NotchScale s;
    const char* moodys[] = {"Aaa",  "Aa1", "Aa2", "Aa3", "A1", "A2", "A3",   "Baa1", "Baa2", "Baa3", "Ba1",
                            "Ba2",  "Ba3", "B1",  "B2",  "B3", "Caa1", "Caa2", "Caa3", "Ca",   "C"};
    const char* sp[] = {"AAA", "AA+", "AA", "AA-", "A+", "A",    "A-",  "BBB+", "BBB", "BBB-", "BB+",
                        "BB",  "BB-", "B+", "B",   "B-", "CCC+", "CCC", "CCC-", "CC",  "C"};
    for (int i = 0; i < 21; ++i) {
      s.moodys_[moodys[i]] = i + 1;
      s.sp_[sp[i]] = i + 1;
    }
    // default states share the bottom notch
    s.sp_["SD"] = 21;
    s.sp_["D"] = 21;
    return s;
  }();
  return scale;
}

NotchScale NotchScale::from_json_text(std::string_view text) {
  NotchScale scale;
  try {
    auto doc = nlohmann::json::parse(text);
    for (const auto& [symbol, notch] : doc.at("moodys").items()) scale.moodys_[symbol] = notch.get<int>();
    for (const auto& [symbol, notch] : doc.at("sp").items()) scale.sp_[symbol] = notch.get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("notch scale: ") + e.what());
  }
  for (const auto* map : {&scale.moodys_, &scale.sp_}) {
    for (const auto& [symbol, notch] : *map) {
      if (notch < RatingNotch::kBest || notch > RatingNotch::kWorst)
        throw Error(ErrorKind::ConfigError, "notch for '" + symbol + "' outside 1..21");
    }
  }
  return scale;
}

RatingNotch NotchScale::moodys(std::string_view symbol) const {
  auto it = moodys_.find(symbol);
  if (it == moodys_.end()) throw Error(ErrorKind::ParseError, "unknown Moody's symbol '" + std::string(symbol) + "'");
  return RatingNotch{it->second};
}

RatingNotch NotchScale::sp(std::string_view symbol) const {
  auto it = sp_.find(symbol);
  if (it == sp_.end()) throw Error(ErrorKind::ParseError, "unknown S&P symbol '" + std::string(symbol) + "'");
  return RatingNotch{it->second};
}

RatingNotch worst_rating(std::optional<RatingNotch> moodys, std::optional<RatingNotch> sp) {
  if (moodys && sp) return std::max(*moodys, *sp);
  if (moodys) return *moodys;
  if (sp) return *sp;
  throw Error(ErrorKind::BothMissing, "observation has no rating from either agency");
}

DowngradeLabel label_downgrade(std::span<const RatingObservation> timeline, Date date, int horizon_days) {
  auto after = std::upper_bound(timeline.begin(), timeline.end(), date,
                                [](const Date& d, const RatingObservation& obs) { return d < obs.date; });
  if (after == timeline.begin())
    throw Error(ErrorKind::NoCurrentRating, "no rating at or before " + date.to_string());
  const RatingObservation& latest = *std::prev(after);

  DowngradeLabel out;
  out.pid = latest.pid;
  out.date = date;
  out.current = worst_rating(latest.moodys, latest.sp);
  out.worst_future = out.current;
  Date horizon_end = date.plus_days(horizon_days);
  bool any_future = false;
  RatingNotch worst_seen{};
  for (auto it = after; it != timeline.end() && it->date <= horizon_end; ++it) {
    RatingNotch r = worst_rating(it->moodys, it->sp);
    worst_seen = any_future ? std::max(worst_seen, r) : r;
    any_future = true;
  }
  if (any_future) out.worst_future = worst_seen;
  out.label = out.worst_future > out.current ? 1 : 0;
  return out;
}

double LabelTable::positive_rate() const {
  if (labels.empty()) return 0.0;
  std::size_t positives = 0;
  for (const auto& l : labels) positives += static_cast<std::size_t>(l.label);
  return static_cast<double>(positives) / static_cast<double>(labels.size());
}

LabelTable build_label_table(const RatingTimelines& timelines, const std::vector<RowKey>& observation_dates,
                             int horizon_days) {
  LabelTable table;
  table.labels.reserve(observation_dates.size());
  std::map<std::pair<int, int>, std::size_t> counts;  // (label, year)
  for (const auto& key : observation_dates) {
    auto it = timelines.find(key.pid);
    if (it == timelines.end())
      throw Error(ErrorKind::NoCurrentRating, "no rating timeline for pid '" + key.pid + "'");
    try {
      auto label = label_downgrade(it->second, key.date, horizon_days);
      label.pid = key.pid;
      ++counts[{label.label, key.date.year()}];
      table.labels.push_back(std::move(label));
    } catch (const Error& e) {
      throw Error(e.kind(), key.to_string() + ": " + e.what());
    }
  }
  for (const auto& [k, n] : counts) table.summary.push_back({k.second, k.first, n});
  return table;
}

RatingTimelines parse_ratings_csv(std::string_view text, const NotchScale& scale) {
  auto csv = io::parse_csv(text);
  auto c_pid = csv.column("pid");
  auto c_date = csv.column("date");
  auto c_m = csv.column("moodys_symbol");
  auto c_s = csv.column("sp_symbol");
  RatingTimelines timelines;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    try {
      RatingObservation obs;
      obs.pid = row[c_pid];
      if (obs.pid.empty()) throw Error(ErrorKind::ParseError, "empty pid");
      obs.date = Date::parse(row[c_date]);
      if (!row[c_m].empty()) obs.moodys = scale.moodys(row[c_m]);
      if (!row[c_s].empty()) obs.sp = scale.sp(row[c_s]);
      if (!obs.moodys && !obs.sp) throw Error(ErrorKind::ParseError, "observation with no rating");
      timelines[obs.pid].push_back(std::move(obs));
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, "ratings row " + std::to_string(i + 2) + ": " + e.what());
    }
  }
  for (auto& [pid, obs] : timelines) {
    std::stable_sort(obs.begin(), obs.end(),
                     [](const RatingObservation& a, const RatingObservation& b) { return a.date < b.date; });
  }
  return timelines;
}

RatingTimelines load_ratings(const std::filesystem::path& path, const NotchScale& scale) {
  return parse_ratings_csv(io::read_file(path), scale);
}

std::string labels_to_csv(const std::vector<DowngradeLabel>& labels) {
  std::string out = "pid,date,current_notch,worst_future_notch,label\n";
  for (const auto& l : labels) {
    out += io::csv_escape(l.pid) + "," + l.date.to_string() + "," + std::to_string(l.current.value) + "," +
           std::to_string(l.worst_future.value) + "," + std::to_string(l.label) + "\n";
  }
  return out;
}

std::string label_summary_to_csv(const std::vector<LabelCount>& summary) {
  std::string out = "year,label,count\n";
  for (const auto& c : summary)
    out += std::to_string(c.year) + "," + std::to_string(c.label) + "," + std::to_string(c.count) + "\n";
  return out;
}

std::vector<DowngradeLabel> parse_labels_csv(std::string_view text) {
  auto csv = io::parse_csv(text);
  auto c_pid = csv.column("pid");
  auto c_date = csv.column("date");
  auto c_cur = csv.column("current_notch");
  auto c_fut = csv.column("worst_future_notch");
  auto c_label = csv.column("label");
  std::vector<DowngradeLabel> labels;
  for (const auto& row : csv.rows) {
    DowngradeLabel l;
    l.pid = row[c_pid];
    l.date = Date::parse(row[c_date]);
    l.current.value = static_cast<int>(io::parse_double(row[c_cur], "current_notch"));
    l.worst_future.value = static_cast<int>(io::parse_double(row[c_fut], "worst_future_notch"));
    l.label = row[c_label] == "1" ? 1 : 0;
    if (row[c_label] != "0" && row[c_label] != "1") throw Error(ErrorKind::ParseError, "label must be 0 or 1");
    labels.push_back(std::move(l));
  }
  return labels;
}

std::vector<DowngradeLabel> load_labels(const std::filesystem::path& path) {
  return parse_labels_csv(io::read_file(path));
}

}  // namespace newsrisk
