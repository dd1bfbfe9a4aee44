#include "chronoqa/timestamp.hpp"

#include <charconv>

#include "chronoqa/error.hpp"

namespace chronoqa {

namespace chr = std::chrono;

std::string_view granularity_name(Granularity g) {
  switch (g) {
    case Granularity::Year: return "Year";
    case Granularity::Month: return "Month";
    case Granularity::Day: return "Day";
  }
  return "Year";
}

Timestamp Timestamp::of_year(int year) {
  if (year < 0 || year > 9999) throw Error(Errc::InvalidDate, "year out of range: " + std::to_string(year));
  return Timestamp(year, 0, 0);
}

Timestamp Timestamp::of_month(int year, int month) {
  of_year(year);
  if (month < 1 || month > 12) throw Error(Errc::InvalidDate, "month out of range: " + std::to_string(month));
  return Timestamp(year, static_cast<std::uint8_t>(month), 0);
}

Timestamp Timestamp::of_day(int year, int month, int day) {
  of_month(year, month);
  const chr::year_month_day ymd{chr::year{year}, chr::month{static_cast<unsigned>(month)},
                                chr::day{static_cast<unsigned>(day)}};
  if (day < 1 || !ymd.ok()) {
    throw Error(Errc::InvalidDate, "no such day: " + std::to_string(year) + "-" + std::to_string(month) +
                                       "-" + std::to_string(day));
  }
  return Timestamp(year, static_cast<std::uint8_t>(month), static_cast<std::uint8_t>(day));
}

chr::sys_days Timestamp::start() const {
  const unsigned m = month_ ? month_ : 1;
  const unsigned d = day_ ? day_ : 1;
  return chr::sys_days{chr::year{year_} / chr::month{m} / chr::day{d}};
}

chr::sys_days Timestamp::end() const {
  if (day_) return start();
  if (month_) return chr::sys_days{chr::year{year_} / chr::month{month_} / chr::last};
  return chr::sys_days{chr::year{year_} / chr::December / chr::day{31}};
}

std::strong_ordering Timestamp::operator<=>(const Timestamp& other) const {
  if (auto c = start() <=> other.start(); c != 0) return c;
  return end() <=> other.end();
}

namespace {

bool all_digits(std::string_view s) {
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return !s.empty();
}

int to_int(std::string_view s) {
  int value = 0;
  std::from_chars(s.data(), s.data() + s.size(), value);
  return value;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  const auto malformed = [&] {
    return Error(Errc::MalformedTimestamp, "expected YYYY, YYYY-MM or YYYY-MM-DD, got '" + std::string(text) + "'");
  };
  if (text.size() != 4 && text.size() != 7 && text.size() != 10) throw malformed();
  if (!all_digits(text.substr(0, 4))) throw malformed();
  const int year = to_int(text.substr(0, 4));
  if (text.size() == 4) return Timestamp::of_year(year);
  if (text[4] != '-' || !all_digits(text.substr(5, 2))) throw malformed();
  const int month = to_int(text.substr(5, 2));
  if (text.size() == 7) return Timestamp::of_month(year, month);
  if (text[7] != '-' || !all_digits(text.substr(8, 2))) throw malformed();
  return Timestamp::of_day(year, month, to_int(text.substr(8, 2)));
}

std::string to_string(const Timestamp& ts) {
  char buf[16];
  auto put = [](char* out, int value, int width) {
    for (int i = width - 1; i >= 0; --i) {
      out[i] = static_cast<char>('0' + value % 10);
      value /= 10;
    }
  };
  put(buf, ts.year(), 4);
  std::size_t len = 4;
  if (auto m = ts.month()) {
    buf[4] = '-';
    put(buf + 5, *m, 2);
    len = 7;
    if (auto d = ts.day()) {
      buf[7] = '-';
      put(buf + 8, *d, 2);
      len = 10;
    }
  }
  return std::string(buf, len);
}

std::strong_ordering compare_ts(const Timestamp& a, const Timestamp& b) { return a <=> b; }

bool strictly_before(const Timestamp& a, const Timestamp& b) { return a.end() < b.start(); }

bool contains(const Timestamp& outer, const Timestamp& inner) {
  return outer.start() <= inner.start() && inner.end() <= outer.end();
}

Timestamp coarsen(const Timestamp& ts) {
  switch (ts.granularity()) {
    case Granularity::Day: return Timestamp::of_month(ts.year(), *ts.month());
    case Granularity::Month: return Timestamp::of_year(ts.year());
    case Granularity::Year: return ts;
  }
  return ts;
}

Timestamp from_days(std::int64_t day_number) {
  const chr::year_month_day ymd{chr::sys_days{chr::days{day_number}}};
  return Timestamp::of_day(static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
                           static_cast<int>(static_cast<unsigned>(ymd.day())));
}

}  // namespace chronoqa
