#pragma once

#include <charconv>
#include <compare>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pmtk {

/// Calendar date at daily granularity. Arithmetic goes through a serial
/// day count (days since 1970-01-01, Hinnant's civil-date algorithm) so
/// offsets between dates are plain integers.
class Date {
public:
    Date() = default;

    Date(int year, int month, int day) : y_(year), m_(month), d_(day) {
        if (!valid(year, month, day))
            throw std::domain_error("invalid calendar date");
    }

    /// Parses strict ISO 8601 "YYYY-MM-DD".
    static Date parse(std::string_view text) {
        if (text.size() != 10 || text[4] != '-' || text[7] != '-')
            throw std::domain_error("date not in YYYY-MM-DD form: " + std::string(text));
        int y = parse_int(text.substr(0, 4));
        int m = parse_int(text.substr(5, 2));
        int d = parse_int(text.substr(8, 2));
        return Date(y, m, d);
    }

    int year() const { return y_; }
    int month() const { return m_; }
    int day() const { return d_; }

    /// Days since 1970-01-01 (negative before).
    long serial() const {
        long y = y_ - (m_ <= 2);
        const long era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153u * (m_ + (m_ > 2 ? -3 : 9)) + 2) / 5 + d_ - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<long>(doe) - 719468;
    }

    static Date from_serial(long z) {
        z += 719468;
        const long era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const long y = static_cast<long>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp + (mp < 10 ? 3 : -9);
        Date out;
        out.y_ = static_cast<int>(y + (m <= 2));
        out.m_ = static_cast<int>(m);
        out.d_ = static_cast<int>(d);
        return out;
    }

    Date plus_days(long n) const { return from_serial(serial() + n); }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y_, m_, d_);
        return buf;
    }

    friend bool operator==(const Date&, const Date&) = default;
    friend std::strong_ordering operator<=>(const Date& a, const Date& b) {
        return a.serial() <=> b.serial();
    }

private:
    static bool valid(int y, int m, int d) {
        if (m < 1 || m > 12 || d < 1) return false;
        static constexpr int len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        int n = len[m - 1];
        if (m == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) n = 29;
        return d <= n;
    }

    static int parse_int(std::string_view s) {
        int v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw std::domain_error("bad number in date: " + std::string(s));
        return v;
    }

    int y_ = 1970;
    int m_ = 1;
    int d_ = 1;
};

}  // namespace pmtk
