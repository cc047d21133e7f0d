#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "newsrisk/common.hpp"

namespace newsrisk {

/// Position on the unified 21-notch long-term scale: 1 = Aaa/AAA, 21 = C/D.
/// Larger is worse.
struct RatingNotch {
  static constexpr int kBest = 1;
  static constexpr int kWorst = 21;

  int value = kBest;

  auto operator<=>(const RatingNotch&) const = default;
};

/// Symbol -> notch maps for both agencies.
class NotchScale {
 public:
  /// Standard long-term scales: Moody's Aaa..C and S&P AAA..D.
  static const NotchScale& standard();
  /// {"moodys": {"Aaa": 1, ...}, "sp": {"AAA": 1, ...}}
  static NotchScale from_json_text(std::string_view text);

  RatingNotch moodys(std::string_view symbol) const;
  RatingNotch sp(std::string_view symbol) const;
  const std::map<std::string, int, std::less<>>& moodys_map() const { return moodys_; }
  const std::map<std::string, int, std::less<>>& sp_map() const { return sp_; }

 private:
  std::map<std::string, int, std::less<>> moodys_;
  std::map<std::string, int, std::less<>> sp_;
};

struct RatingObservation {
  std::string pid;
  Date date;
  std::optional<RatingNotch> moodys;
  std::optional<RatingNotch> sp;
};

struct DowngradeLabel {
  std::string pid;
  Date date;
  RatingNotch current;
  RatingNotch worst_future;
  int label = 0;

  RowKey key() const { return {pid, date}; }
};

/// Pessimistic combination of the two agencies; throws BothMissing.
RatingNotch worst_rating(std::optional<RatingNotch> moodys, std::optional<RatingNotch> sp);

/// `timeline` must be one company's observations sorted by date.
DowngradeLabel label_downgrade(std::span<const RatingObservation> timeline, Date date, int horizon_days = 365);

using RatingTimelines = std::map<std::string, std::vector<RatingObservation>>;

struct LabelCount {
  int year = 0;
  int label = 0;
  std::size_t count = 0;
};

struct LabelTable {
  std::vector<DowngradeLabel> labels;
  /// Year x label counts, ordered by (label, year).
  std::vector<LabelCount> summary;

  double positive_rate() const;
};

LabelTable build_label_table(const RatingTimelines& timelines, const std::vector<RowKey>& observation_dates,
                             int horizon_days = 365);

/// CSV with columns pid, date, moodys_symbol, sp_symbol (empty = missing).
/// Observations are grouped per pid and sorted by date.
RatingTimelines parse_ratings_csv(std::string_view text, const NotchScale& scale = NotchScale::standard());
RatingTimelines load_ratings(const std::filesystem::path& path, const NotchScale& scale = NotchScale::standard());

std::string labels_to_csv(const std::vector<DowngradeLabel>& labels);
std::string label_summary_to_csv(const std::vector<LabelCount>& summary);
std::vector<DowngradeLabel> parse_labels_csv(std::string_view text);
std::vector<DowngradeLabel> load_labels(const std::filesystem::path& path);

}  // namespace newsrisk
