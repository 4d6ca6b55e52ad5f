#include "bess/timeutil.hpp"

#include <charconv>

#include <fmt/format.h>

#include "bess/errors.hpp"

namespace bess {
namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count, std::string_view whole) {
    if (pos + count > text.size()) {
        throw InvalidInput(fmt::format("truncated timestamp '{}'", whole));
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + count, value);
    if (ec != std::errc{} || ptr != text.data() + pos + count) {
        throw InvalidInput(fmt::format("bad digits in timestamp '{}'", whole));
    }
    return value;
}

void expect_char(std::string_view text, std::size_t pos, char c, std::string_view whole) {
    if (pos >= text.size() || text[pos] != c) {
        throw InvalidInput(fmt::format("expected '{}' at offset {} in '{}'", c, pos, whole));
    }
}

Date checked_date(int y, int m, int d, std::string_view whole) {
    Date date{std::chrono::year{y} / std::chrono::month{static_cast<unsigned>(m)} /
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) {
        throw InvalidInput(fmt::format("invalid calendar date '{}'", whole));
    }
    return date;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

Date parse_date(std::string_view text) {
    const auto s = trim(text);
    if (s.size() != 10) throw InvalidInput(fmt::format("expected YYYY-MM-DD, got '{}'", text));
    const int y = parse_digits(s, 0, 4, text);
    expect_char(s, 4, '-', text);
    const int m = parse_digits(s, 5, 2, text);
    expect_char(s, 7, '-', text);
    const int d = parse_digits(s, 8, 2, text);
    return checked_date(y, m, d, text);
}

Date parse_month(std::string_view text) {
    const auto s = trim(text);
    if (s.size() != 7) throw InvalidInput(fmt::format("expected YYYY-MM, got '{}'", text));
    const int y = parse_digits(s, 0, 4, text);
    expect_char(s, 4, '-', text);
    const int m = parse_digits(s, 5, 2, text);
    return checked_date(y, m, 1, text);
}

Seconds parse_timestamp(std::string_view text) {
    const auto s = trim(text);
    if (s.size() < 16) throw InvalidInput(fmt::format("timestamp too short: '{}'", text));
    const Date date = parse_date(s.substr(0, 10));
    if (s[10] != 'T' && s[10] != ' ') {
        throw InvalidInput(fmt::format("expected 'T' separator in '{}'", text));
    }
    const int hh = parse_digits(s, 11, 2, text);
    expect_char(s, 13, ':', text);
    const int mm = parse_digits(s, 14, 2, text);
    std::size_t pos = 16;
    int ss = 0;
    if (pos < s.size() && s[pos] == ':') {
        ss = parse_digits(s, pos + 1, 2, text);
        pos += 3;
    }
    if (hh > 23 || mm > 59 || ss > 60) {
        throw InvalidInput(fmt::format("time of day out of range in '{}'", text));
    }
    int offset_minutes = 0;
    if (pos < s.size()) {
        const char z = s[pos];
        if (z == 'Z' && pos + 1 == s.size()) {
            // UTC
        } else if ((z == '+' || z == '-') && pos + 6 == s.size()) {
            const int oh = parse_digits(s, pos + 1, 2, text);
            expect_char(s, pos + 3, ':', text);
            const int om = parse_digits(s, pos + 4, 2, text);
            offset_minutes = (z == '+' ? 1 : -1) * (oh * 60 + om);
        } else {
            throw InvalidInput(fmt::format("unrecognised zone designator in '{}'", text));
        }
    }
    using namespace std::chrono;
    return sys_days{date} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
}

std::string format_timestamp(Seconds t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const Date d{day};
    const hh_mm_ss tod{t - day};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(d.year()),
                       static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()),
                       tod.hours().count(), tod.minutes().count(), tod.seconds().count());
}

std::string format_date(Date d) {
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                       static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

std::string format_month(Date d) {
    return fmt::format("{:04d}-{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()));
}

Hour floor_hour(Seconds t) { return std::chrono::floor<std::chrono::hours>(t); }

Date date_of(Hour h) { return Date{std::chrono::floor<std::chrono::days>(h)}; }

Hour start_of(Date d) { return std::chrono::sys_days{d}; }

int hour_of_day(Hour h) {
    return static_cast<int>((h - std::chrono::floor<std::chrono::days>(h)).count());
}

Date month_start(Date d) { return d.year() / d.month() / std::chrono::day{1}; }

Date next_month(Date d) {
    const auto ym = d.year() / d.month() + std::chrono::months{1};
    return ym / std::chrono::day{1};
}

int days_in_month(Date d) {
    const auto last = std::chrono::year_month_day_last{d.year() / d.month() / std::chrono::last};
    return static_cast<int>(static_cast<unsigned>(last.day()));
}

}  // namespace bess
