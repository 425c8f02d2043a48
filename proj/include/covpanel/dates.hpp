#ifndef COVPANEL_DATES_HPP
#define COVPANEL_DATES_HPP

#include <compare>
#include <string>
#include <string_view>

namespace covpanel {

/// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
class Date {
public:
    Date() = default;
    explicit Date(int serial) : serial_(serial) {}

    static Date from_ymd(int year, int month, int day);
    static Date parse(std::string_view iso); // "YYYY-MM-DD", throws Error("BadDate")

    int serial() const { return serial_; }
    int year() const;
    int month() const;
    int day() const;

    std::string to_string() const;  // YYYY-MM-DD
    std::string year_month() const; // YYYY-MM

    Date operator+(int days) const { return Date(serial_ + days); }
    Date operator-(int days) const { return Date(serial_ - days); }
    int operator-(Date other) const { return serial_ - other.serial_; }
    Date& operator++() { ++serial_; return *this; }

    auto operator<=>(const Date&) const = default;

private:
    int serial_ = 0;
};

} // namespace covpanel

#endif
