#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace bess {

using Seconds = std::chrono::sys_seconds;
using Hour = std::chrono::sys_time<std::chrono::hours>;
using Date = std::chrono::year_month_day;

// Parses an ISO-8601 timestamp into UTC seconds. Accepted forms:
//   2018-01-01T05:00:00Z, 2018-01-01 05:00:00, 2018-01-01T05:00, 2018-01-01T00:00:00-05:00
// A missing zone designator means UTC.
Seconds parse_timestamp(std::string_view text);

// Parses YYYY-MM-DD.
Date parse_date(std::string_view text);

// Parses YYYY-MM into the first day of that month.
Date parse_month(std::string_view text);

std::string format_timestamp(Seconds t);  // 2018-01-01T05:00:00Z
std::string format_date(Date d);          // 2018-01-01
std::string format_month(Date d);         // 2018-01

Hour floor_hour(Seconds t);
Date date_of(Hour h);
Hour start_of(Date d);
int hour_of_day(Hour h);

// First day of the month containing d.
Date month_start(Date d);
Date next_month(Date d);
int days_in_month(Date d);

// [begin, end) window of whole hours.
struct HourWindow {
    Hour begin;
    Hour end;

    long long hours() const { return (end - begin).count(); }
    bool contains(Hour h) const { return h >= begin && h < end; }
};

}  // namespace bess
