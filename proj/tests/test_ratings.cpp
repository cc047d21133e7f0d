#include <random>

#include "doctest.h"
#include "newsrisk/ratings.hpp"

using namespace newsrisk;

namespace {

RatingObservation obs(const char* date, std::optional<int> moodys, std::optional<int> sp) {
  RatingObservation o;
  o.pid = "P";
  o.date = Date::parse(date);
  if (moodys) o.moodys = RatingNotch{*moodys};
  if (sp) o.sp = RatingNotch{*sp};
  return o;
}

// Independent oracle: scan the whole timeline without binary search.
int brute_force_label(const std::vector<RatingObservation>& timeline, Date date, int horizon) {
  int current = -1;
  int worst_future = -1;
  for (const auto& o : timeline) {
    int r = std::max(o.moodys ? o.moodys->value : 0, o.sp ? o.sp->value : 0);
    long offset = date.days_until(o.date);
    if (offset <= 0) current = r;  // timeline sorted: last one wins
    if (offset > 0 && offset <= horizon) worst_future = std::max(worst_future, r);
  }
  return worst_future > current ? 1 : 0;
}

}  // namespace

TEST_CASE("worst_rating examples") {
  CHECK(worst_rating(RatingNotch{7}, RatingNotch{7}).value == 7);
  CHECK(worst_rating(RatingNotch{15}, RatingNotch{17}).value == 17);
  CHECK(worst_rating(std::nullopt, RatingNotch{5}).value == 5);
  try {
    worst_rating(std::nullopt, std::nullopt);
    FAIL("expected BothMissing");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BothMissing);
  }
}

TEST_CASE("standard scale orders B above CCC and covers both agencies") {
  const auto& scale = NotchScale::standard();
  CHECK(scale.sp("B") < scale.sp("CCC"));
  CHECK(scale.moodys("B2") < scale.moodys("Caa2"));
  CHECK(scale.moodys("Aaa").value == 1);
  CHECK(scale.sp("AAA").value == 1);
  CHECK(scale.moodys("C").value == 21);
  CHECK(scale.sp("D").value == 21);
  CHECK(scale.moodys_map().size() == 21);
  CHECK_THROWS_AS(scale.sp("Z"), Error);
  int prev = 0;
  for (const char* s : {"AAA", "AA+", "AA", "AA-", "A+", "A", "A-", "BBB+", "BBB", "BBB-", "BB+", "BB", "BB-", "B+",
                        "B", "B-", "CCC+", "CCC", "CCC-", "CC", "C"}) {
    CHECK(scale.sp(s).value == prev + 1);
    prev = scale.sp(s).value;
  }
}

TEST_CASE("worst_rating is commutative, idempotent and monotone") {
  for (int a = 1; a <= 21; ++a) {
    for (int b = 1; b <= 21; ++b) {
      RatingNotch x{a}, y{b};
      CHECK(worst_rating(x, y) == worst_rating(y, x));
      CHECK(worst_rating(x, x) == x);
      if (b < 21) CHECK(worst_rating(x, RatingNotch{b + 1}) >= worst_rating(x, y));
    }
  }
}

TEST_CASE("label_downgrade examples") {
  Date d = Date::parse("2019-03-01");
  std::vector<RatingObservation> flat = {obs("2019-01-01", 10, 10), obs("2019-03-01", 10, 10),
                                         obs("2019-06-01", 10, 10)};
  CHECK(label_downgrade(flat, d).label == 0);

  std::vector<RatingObservation> b_to_ccc = {obs("2019-02-01", std::nullopt, 15), obs("2019-03-31", std::nullopt, 17)};
  auto l = label_downgrade(b_to_ccc, d);
  CHECK(l.current.value == 15);
  CHECK(l.worst_future.value == 17);
  CHECK(l.label == 1);

  std::vector<RatingObservation> upgrades = {obs("2019-02-01", 10, std::nullopt), obs("2019-04-01", 9, std::nullopt),
                                             obs("2019-05-01", 8, std::nullopt)};
  CHECK(label_downgrade(upgrades, d).label == 0);
  CHECK(label_downgrade(upgrades, d).worst_future.value == 9);

  std::vector<RatingObservation> none_future = {obs("2019-02-01", 12, 11)};
  auto nf = label_downgrade(none_future, d);
  CHECK(nf.worst_future == nf.current);
  CHECK(nf.label == 0);

  try {
    label_downgrade(upgrades, Date::parse("2019-01-01"));
    FAIL("expected NoCurrentRating");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoCurrentRating);
  }
}

TEST_CASE("label_downgrade agrees with brute force and is monotone in horizon") {
  std::mt19937 rng(42);
  Date start = Date::parse("2018-01-01");
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<RatingObservation> timeline;
    Date cursor = start;
    for (unsigned i = 1 + rng() % 8; i > 0; --i) {
      RatingObservation o;
      o.pid = "P";
      o.date = cursor;
      if (rng() % 3) o.moodys = RatingNotch{1 + static_cast<int>(rng() % 21)};
      if (!o.moodys || rng() % 2) o.sp = RatingNotch{1 + static_cast<int>(rng() % 21)};
      timeline.push_back(o);
      cursor = cursor.plus_days(1 + static_cast<long>(rng() % 200));
    }
    Date query = start.plus_days(static_cast<long>(rng() % 600));
    int prev = 0;
    for (int horizon : {0, 30, 90, 180, 365, 730}) {
      int l = label_downgrade(timeline, query, horizon).label;
      CHECK(l == brute_force_label(timeline, query, horizon));
      CHECK(l >= prev);
      if (horizon == 0) CHECK(l == 0);
      prev = l;
    }
  }
}

TEST_CASE("build_label_table and the ratings CSV") {
  const char* csv =
      "pid,date,moodys_symbol,sp_symbol\n"
      "A,2019-01-01,B2,\n"
      "A,2019-06-01,,CCC\n"
      "C,2018-12-01,Baa1,BBB+\n";
  auto timelines = parse_ratings_csv(csv);
  REQUIRE(timelines.size() == 2);
  std::vector<RowKey> keys = {{"A", Date::parse("2019-02-01")},
                              {"A", Date::parse("2019-07-01")},
                              {"C", Date::parse("2018-12-15")},
                              {"C", Date::parse("2019-01-15")}};
  auto table = build_label_table(timelines, keys);
  REQUIRE(table.labels.size() == 4);
  CHECK(table.labels[0].label == 1);
  CHECK(table.labels[1].label == 0);
  CHECK(table.labels[2].label == 0);
  CHECK(table.positive_rate() == doctest::Approx(0.25));
  REQUIRE(table.summary.size() == 3);
  CHECK(table.summary[0].year == 2018);
  CHECK(table.summary[0].label == 0);
  CHECK(table.summary[0].count == 1);
  CHECK(table.summary[1].year == 2019);
  CHECK(table.summary[1].count == 2);
  CHECK(table.summary[2].label == 1);
  CHECK(table.summary[2].count == 1);

  auto parsed = parse_labels_csv(labels_to_csv(table.labels));
  REQUIRE(parsed.size() == 4);
  CHECK(parsed[0].current.value == 15);
  CHECK(parsed[0].worst_future.value == 18);
  CHECK(label_summary_to_csv(table.summary) == "year,label,count\n2018,0,1\n2019,0,2\n2019,1,1\n");

  SUBCASE("single company, single date, flat ratings") {
    auto one = build_label_table(timelines, {{"C", Date::parse("2019-03-01")}});
    REQUIRE(one.labels.size() == 1);
    CHECK(one.labels[0].label == 0);
  }
  SUBCASE("unknown symbols and missing companies are reported") {
    CHECK_THROWS_AS(parse_ratings_csv("pid,date,moodys_symbol,sp_symbol\nA,2019-01-01,XX,\n"), Error);
    CHECK_THROWS_AS(parse_ratings_csv("pid,date,moodys_symbol,sp_symbol\nA,2019-01-01,,\n"), Error);
    CHECK_THROWS_AS(build_label_table(timelines, {{"Z", Date::parse("2019-01-01")}}), Error);
  }
}
