#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace chronoqa {

enum class Granularity : std::uint8_t { Year, Month, Day };

std::string_view granularity_name(Granularity g);

// Calendar value at year, month or day resolution. A timestamp denotes the
// closed interval of days it covers: 2009 -> [2009-01-01, 2009-12-31].
class Timestamp {
 public:
  Timestamp() = default;

  // Validating constructors; throw Error{InvalidDate} on impossible dates.
  static Timestamp of_year(int year);
  static Timestamp of_month(int year, int month);
  static Timestamp of_day(int year, int month, int day);

  int year() const noexcept { return year_; }
  std::optional<int> month() const noexcept {
    return month_ ? std::optional<int>(month_) : std::nullopt;
  }
  std::optional<int> day() const noexcept {
    return day_ ? std::optional<int>(day_) : std::nullopt;
  }
  Granularity granularity() const noexcept {
    return day_ ? Granularity::Day : (month_ ? Granularity::Month : Granularity::Year);
  }

  std::chrono::sys_days start() const;
  std::chrono::sys_days end() const;
  // Day numbers relative to 1970-01-01.
  std::int64_t start_day() const { return start().time_since_epoch().count(); }
  std::int64_t end_day() const { return end().time_since_epoch().count(); }

  // Total order by (start, end).
  std::strong_ordering operator<=>(const Timestamp& other) const;
  bool operator==(const Timestamp& other) const noexcept {
    return year_ == other.year_ && month_ == other.month_ && day_ == other.day_;
  }

 private:
  Timestamp(int year, std::uint8_t month, std::uint8_t day) : year_(year), month_(month), day_(day) {}

  int year_ = 1970;
  std::uint8_t month_ = 0;
  std::uint8_t day_ = 0;
};

// Accepts exactly YYYY, YYYY-MM or YYYY-MM-DD.
Timestamp parse_timestamp(std::string_view text);
std::string to_string(const Timestamp& ts);

std::strong_ordering compare_ts(const Timestamp& a, const Timestamp& b);

// Whole-interval precedence: end(a) < start(b).
bool strictly_before(const Timestamp& a, const Timestamp& b);

// inner's interval lies within outer's interval.
bool contains(const Timestamp& outer, const Timestamp& inner);

// Day -> Month -> Year; a Year timestamp is returned unchanged.
Timestamp coarsen(const Timestamp& ts);

Timestamp from_days(std::int64_t day_number);

}  // namespace chronoqa
