#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace ttcast {

/// Calendar day (proleptic Gregorian, UTC).
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days day) : day_(day) {}
    Date(int year, unsigned month, unsigned day);

    /// Accepts YYYY-MM-DD or YYYYMMDD.
    static Date parse(std::string_view text);
    static Date from_days(std::int64_t days_since_epoch) {
        return Date(std::chrono::sys_days(std::chrono::days(days_since_epoch)));
    }

    [[nodiscard]] std::int64_t days_since_epoch() const { return day_.time_since_epoch().count(); }
    [[nodiscard]] std::string iso() const;      // YYYY-MM-DD
    [[nodiscard]] std::string compact() const;  // YYYYMMDD

    [[nodiscard]] Date plus_days(std::int64_t n) const { return Date(day_ + std::chrono::days(n)); }

    friend std::int64_t operator-(const Date& a, const Date& b) { return (a.day_ - b.day_).count(); }
    friend auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days day_{};
};

}  // namespace ttcast
