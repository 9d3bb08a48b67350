#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smiledyn {

// Trading-day label. Calendar days since the Unix epoch.
using Date = std::chrono::sys_days;

inline std::optional<Date> parse_iso_date(std::string_view text) {
    // YYYY-MM-DD, four digit year
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto parse = [](std::string_view part, auto& out) {
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && ptr == part.data() + part.size();
    };
    if (!parse(text.substr(0, 4), y) || !parse(text.substr(5, 2), m) || !parse(text.substr(8, 2), d))
        return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok())
        return std::nullopt;
    return Date{ymd};
}

inline std::string format_iso_date(Date date) {
    std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

// n consecutive weekdays starting at (or after) start.
inline std::vector<Date> weekdays_from(Date start, std::size_t n) {
    using std::chrono::days;
    std::vector<Date> out;
    out.reserve(n);
    Date d = start;
    while (out.size() < n) {
        std::chrono::weekday wd{d};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday)
            out.push_back(d);
        d += days{1};
    }
    return out;
}

} // namespace smiledyn
