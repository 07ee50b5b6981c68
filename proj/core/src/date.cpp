#include "epicast/date.hpp"

#include "epicast/errors.hpp"

#include <charconv>
#include <cstdio>

namespace epicast {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    const auto *begin = text.data();
    const auto *end = text.data() + text.size();
    const auto res = std::from_chars(begin, end, value);
    if (text.empty() || res.ec != std::errc{} || res.ptr != end) {
        throw FormatError("invalid date '" + std::string(whole) + "'");
    }
    return value;
}

Date make_date(int y, int m, int d, std::string_view whole) {
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (m < 1 || m > 12 || d < 1 || !ymd.ok()) {
        throw FormatError("invalid date '" + std::string(whole) + "'");
    }
    return std::chrono::sys_days{ymd};
}

} // namespace

Date parse_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw FormatError("invalid ISO date '" + std::string(text) + "'");
    }
    return make_date(parse_int(text.substr(0, 4), text), parse_int(text.substr(5, 2), text),
                     parse_int(text.substr(8, 2), text), text);
}

Date parse_mdy_date(std::string_view text) {
    const auto first = text.find('/');
    const auto second = first == std::string_view::npos ? first : text.find('/', first + 1);
    if (first == std::string_view::npos || second == std::string_view::npos) {
        throw FormatError("invalid M/D/YY date '" + std::string(text) + "'");
    }
    const int m = parse_int(text.substr(0, first), text);
    const int d = parse_int(text.substr(first + 1, second - first - 1), text);
    const auto year_text = text.substr(second + 1);
    int y = parse_int(year_text, text);
    if (year_text.size() == 2) {
        y += 2000;
    } else if (year_text.size() != 4) {
        throw FormatError("invalid M/D/YY date '" + std::string(text) + "'");
    }
    return make_date(y, m, d, text);
}

std::string to_iso(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string to_mdy(Date date) {
    const std::chrono::year_month_day ymd{date};
    const int year = static_cast<int>(ymd.year());
    char buf[24];
    if (year >= 2000 && year < 2100) {
        std::snprintf(buf, sizeof buf, "%u/%u/%02d", static_cast<unsigned>(ymd.month()),
                      static_cast<unsigned>(ymd.day()), year - 2000);
    } else {
        std::snprintf(buf, sizeof buf, "%u/%u/%04d", static_cast<unsigned>(ymd.month()),
                      static_cast<unsigned>(ymd.day()), year);
    }
    return buf;
}

} // namespace epicast
