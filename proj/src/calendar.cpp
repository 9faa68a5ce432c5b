#include "ttcast/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "ttcast/error.hpp"

namespace ttcast {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw DataError("invalid date '" + std::string(whole) + "'");
    }
    return value;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year(year), std::chrono::month(month), std::chrono::day(day)};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                        std::to_string(day));
    }
    day_ = std::chrono::sys_days(ymd);
}

Date Date::parse(std::string_view text) {
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        return {parse_int(text.substr(0, 4), text), static_cast<unsigned>(parse_int(text.substr(5, 2), text)),
                static_cast<unsigned>(parse_int(text.substr(8, 2), text))};
    }
    if (text.size() == 8) {
        return {parse_int(text.substr(0, 4), text), static_cast<unsigned>(parse_int(text.substr(4, 2), text)),
                static_cast<unsigned>(parse_int(text.substr(6, 2), text))};
    }
    throw DataError("invalid date '" + std::string(text) + "'");
}

std::string Date::iso() const {
    const std::chrono::year_month_day ymd(day_);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string Date::compact() const {
    std::string s = iso();
    return s.substr(0, 4) + s.substr(5, 2) + s.substr(8, 2);
}

}  // namespace ttcast
