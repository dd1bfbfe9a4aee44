#include <gtest/gtest.h>

#include <random>

#include "chronoqa/error.hpp"
#include "chronoqa/timestamp.hpp"

using namespace chronoqa;

namespace {

// Independent day counter: days since 1970-01-01 by summing month lengths.
bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }
int month_len(int y, int m) {
  static const int len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && leap(y) ? 29 : len[m - 1];
}
long days_since_epoch(int y, int m, int d) {
  long n = 0;
  for (int yy = 1970; yy < y; ++yy) n += leap(yy) ? 366 : 365;
  for (int yy = y; yy < 1970; ++yy) n -= leap(yy) ? 366 : 365;
  for (int mm = 1; mm < m; ++mm) n += month_len(y, mm);
  return n + d - 1;
}

Timestamp ts(const char* s) { return parse_timestamp(s); }

}  // namespace

TEST(Timestamp, ParsesThreeGranularities) {
  const auto d = ts("2008-08-08");
  EXPECT_EQ(d.year(), 2008);
  EXPECT_EQ(d.month(), 8);
  EXPECT_EQ(d.day(), 8);
  EXPECT_EQ(d.granularity(), Granularity::Day);

  const auto y = ts("2009");
  EXPECT_EQ(y.granularity(), Granularity::Year);
  EXPECT_FALSE(y.month());
  EXPECT_FALSE(y.day());

  EXPECT_EQ(ts("2009-02").granularity(), Granularity::Month);
}

TEST(Timestamp, RejectsBadInput) {
  try {
    ts("2009-02-30");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidDate);
  }
  for (const char* bad : {"", "09", "2009-1-01", "2009/01/01", "2009-01-01T00", "abcd", "2009-13", " 2009"}) {
    try {
      ts(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == Errc::MalformedTimestamp || e.code() == Errc::InvalidDate) << bad;
    }
  }
  EXPECT_NO_THROW(ts("2008-02-29"));
  EXPECT_THROW(ts("2009-02-29"), Error);
}

TEST(Timestamp, CompareByIntervalStart) {
  EXPECT_EQ(compare_ts(ts("2009-02-10"), ts("2009-07-18")), std::strong_ordering::less);
  EXPECT_EQ(compare_ts(ts("2009"), ts("2009-06-01")), std::strong_ordering::less);
  EXPECT_EQ(compare_ts(ts("2012"), ts("2012")), std::strong_ordering::equal);
}

TEST(Timestamp, StrictlyBeforeUsesWholeIntervals) {
  EXPECT_TRUE(strictly_before(ts("2009-11-15"), ts("2010-06-26")));
  EXPECT_FALSE(strictly_before(ts("2009"), ts("2009-06-01")));
  EXPECT_FALSE(strictly_before(ts("2008-08-08"), ts("2008-08-08")));
  EXPECT_TRUE(strictly_before(ts("2008-12"), ts("2009")));
}

TEST(Timestamp, ContainsAndCoarsen) {
  EXPECT_TRUE(contains(ts("2008"), ts("2008-08-08")));
  EXPECT_FALSE(contains(ts("2008-08-08"), ts("2008")));
  EXPECT_EQ(coarsen(ts("2008-08-08")), ts("2008-08"));
  EXPECT_EQ(coarsen(ts("2008-08")), ts("2008"));
  EXPECT_EQ(coarsen(ts("2008")), ts("2008"));
}

TEST(Timestamp, RoundTripsText) {
  for (const char* s : {"2008", "2008-08", "2008-08-08", "1999-12-31", "0001-01-01"}) EXPECT_EQ(to_string(ts(s)), s);
}

// Property: start/end agree with an independent calendar walk, and the
// ordering and precedence relations follow from them.
TEST(TimestampProperty, IntervalsMatchIndependentCalendar) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> year(1950, 2050), month(1, 12), gran(0, 2);
  std::vector<Timestamp> sample;
  for (int i = 0; i < 2000; ++i) {
    const int y = year(rng), m = month(rng);
    const int d = std::uniform_int_distribution<int>(1, month_len(y, m))(rng);
    Timestamp t;
    long s = 0, e = 0;
    switch (gran(rng)) {
      case 0:
        t = Timestamp::of_year(y);
        s = days_since_epoch(y, 1, 1);
        e = days_since_epoch(y, 12, 31);
        break;
      case 1:
        t = Timestamp::of_month(y, m);
        s = days_since_epoch(y, m, 1);
        e = days_since_epoch(y, m, month_len(y, m));
        break;
      default:
        t = Timestamp::of_day(y, m, d);
        s = e = days_since_epoch(y, m, d);
    }
    ASSERT_EQ(t.start_day(), s) << to_string(t);
    ASSERT_EQ(t.end_day(), e) << to_string(t);
    ASSERT_LE(t.start_day(), t.end_day());
    ASSERT_EQ(from_days(s), Timestamp::of_day(y, t.month().value_or(1), t.day().value_or(1))) << to_string(t);
    sample.push_back(t);
  }
  for (std::size_t i = 0; i + 1 < sample.size(); ++i) {
    const auto& a = sample[i];
    const auto& b = sample[i + 1];
    ASSERT_EQ(strictly_before(a, b), a.end_day() < b.start_day());
    const auto c = compare_ts(a, b);
    if (a.start_day() < b.start_day()) ASSERT_EQ(c, std::strong_ordering::less);
    if (a.start_day() > b.start_day()) ASSERT_EQ(c, std::strong_ordering::greater);
    ASSERT_EQ(contains(a, b), a.start_day() <= b.start_day() && b.end_day() <= a.end_day());
  }
}
