#include "covpanel/dates.hpp"

#include "covpanel/errors.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace covpanel {

namespace {

// Days-from-civil / civil-from-days (Howard Hinnant's algorithms).
int days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

std::array<int, 3> civil_from_days(int z) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

bool leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(int y, int m) {
    static constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && leap(y)) return 29;
    return lengths[m - 1];
}

} // namespace

Date Date::from_ymd(int year, int month, int day) {
    if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month))
        fail("BadDate", "invalid calendar date");
    return Date(days_from_civil(year, month, day));
}

Date Date::parse(std::string_view iso) {
    int y = 0, m = 0, d = 0;
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        fail("BadDate", "expected YYYY-MM-DD, got '" + std::string(iso) + "'");
    auto num = [&](int from, int to, int& out) {
        auto res = std::from_chars(iso.data() + from, iso.data() + to, out);
        return res.ec == std::errc{} && res.ptr == iso.data() + to;
    };
    if (!num(0, 4, y) || !num(5, 7, m) || !num(8, 10, d))
        fail("BadDate", "expected YYYY-MM-DD, got '" + std::string(iso) + "'");
    return from_ymd(y, m, d);
}

int Date::year() const { return civil_from_days(serial_)[0]; }
int Date::month() const { return civil_from_days(serial_)[1]; }
int Date::day() const { return civil_from_days(serial_)[2]; }

std::string Date::to_string() const {
    auto [y, m, d] = civil_from_days(serial_);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

std::string Date::year_month() const {
    auto [y, m, d] = civil_from_days(serial_);
    (void)d;
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", y, m);
    return buf;
}

} // namespace covpanel
