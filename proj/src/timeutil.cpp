#include "somcm/timeutil.hpp"

#include <cstdio>

namespace somcm {

namespace {

// Howard Hinnant's days_from_civil / civil_from_days.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
    std::int64_t year;
    unsigned month;
    unsigned day;
};

constexpr Civil civil_from_days(std::int64_t z) noexcept {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2), m, d};
}

constexpr bool leap(std::int64_t y) noexcept {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

constexpr unsigned month_days(std::int64_t y, unsigned m) noexcept {
    constexpr unsigned table[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && leap(y) ? 29 : table[m - 1];
}

static_assert(days_from_civil(1970, 1, 1) == 0);
static_assert(days_from_civil(2000, 3, 1) == 11017);

class Cursor {
public:
    explicit Cursor(std::string_view text) : s_(text) {}

    bool digits(std::size_t count, int& out) {
        if (pos_ + count > s_.size()) {
            return false;
        }
        int v = 0;
        for (std::size_t k = 0; k < count; ++k) {
            const char c = s_[pos_ + k];
            if (c < '0' || c > '9') {
                return false;
            }
            v = v * 10 + (c - '0');
        }
        pos_ += count;
        out = v;
        return true;
    }
    bool eat(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    bool at_end() const noexcept { return pos_ == s_.size(); }
    char peek() const noexcept { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    void skip() noexcept { ++pos_; }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

std::optional<Timestamp> parse_iso8601(std::string_view text) {
    Cursor in(trim(text));
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    if (!in.digits(4, year) || !in.eat('-') || !in.digits(2, month) || !in.eat('-') ||
        !in.digits(2, day)) {
        return std::nullopt;
    }
    if (!in.eat('T') && !in.eat(' ')) {
        return std::nullopt;
    }
    if (!in.digits(2, hour) || !in.eat(':') || !in.digits(2, minute)) {
        return std::nullopt;
    }
    if (in.eat(':')) {
        if (!in.digits(2, second)) {
            return std::nullopt;
        }
        if (in.eat('.')) {
            int ignored = 0;
            if (!in.digits(1, ignored)) {
                return std::nullopt;
            }
            while (in.peek() >= '0' && in.peek() <= '9') {
                in.skip();
            }
        }
    }
    int offset = 0;
    if (!in.eat('Z') && (in.peek() == '+' || in.peek() == '-')) {
        const int sign = in.peek() == '-' ? -1 : 1;
        in.skip();
        int oh = 0, om = 0;
        if (!in.digits(2, oh)) {
            return std::nullopt;
        }
        in.eat(':');
        if (!in.digits(2, om) || oh > 23 || om > 59) {
            return std::nullopt;
        }
        offset = sign * (oh * 3600 + om * 60);
    }
    if (!in.at_end()) {
        return std::nullopt;
    }
    if (month < 1 || month > 12 || day < 1 ||
        static_cast<unsigned>(day) > month_days(year, static_cast<unsigned>(month)) || hour > 23 ||
        minute > 59 || second > 60) {
        return std::nullopt;
    }
    const std::int64_t days =
        days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return days * 86400 + hour * 3600 + minute * 60 + second - offset;
}

namespace {

struct Parts {
    Civil date;
    int hour, minute, second;
};

Parts split(Timestamp t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    return {civil_from_days(days), static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60),
            static_cast<int>(rem % 60)};
}

}  // namespace

std::string format_iso8601(Timestamp t) {
    const Parts p = split(t);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02d:%02d:%02dZ",
                  static_cast<long long>(p.date.year), p.date.month, p.date.day, p.hour, p.minute,
                  p.second);
    return buf;
}

std::string format_compact(Timestamp t) {
    const Parts p = split(t);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04lld%02u%02uT%02d%02d%02dZ",
                  static_cast<long long>(p.date.year), p.date.month, p.date.day, p.hour, p.minute,
                  p.second);
    return buf;
}

}  // namespace somcm
