#pragma once

// Shared value types for the itinera library: money in fen, calendar dates,
// typed identifiers, a portable seeded RNG and the exception hierarchy.

#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace itinera {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ArgumentError : Error {
    using Error::Error;
};

struct NotFoundError : Error {
    using Error::Error;
};

struct InfeasibleError : Error {
    using Error::Error;
};

struct ProtocolError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

// Malformed serialized input. `offset` is the byte position for syntax
// errors; schema errors carry the JSON pointer of the offending field.
struct ParseError : Error {
    ParseError(std::optional<std::size_t> off, std::string p, const std::string& msg)
        : Error(describe(off, p, msg)), offset(off), path(std::move(p)) {}

    std::optional<std::size_t> offset;
    std::string path;

private:
    static std::string describe(std::optional<std::size_t> off, const std::string& p,
                                const std::string& msg) {
        std::string s = "parse error";
        if (off) s += " at byte " + std::to_string(*off);
        if (!p.empty()) s += " at " + p;
        return s + ": " + msg;
    }
};

// ---------------------------------------------------------------------------
// Money: integer fen (1/100 CNY)
// ---------------------------------------------------------------------------

struct Money {
    std::int64_t fen = 0;

    static constexpr Money from_fen(std::int64_t f) { return Money{f}; }
    static constexpr Money yuan(std::int64_t y) { return Money{y * 100}; }

    // Exact conversion from a decimal CNY amount as found in source data.
    // Amounts finer than one fen are rejected.
    static Money from_yuan(double y) {
        if (!std::isfinite(y)) throw ArgumentError("money amount is not finite");
        const double scaled = y * 100.0;
        const double rounded = std::round(scaled);
        if (std::fabs(scaled - rounded) > 1e-6)
            throw ArgumentError("money amount has sub-fen precision: " + std::to_string(y));
        return Money{static_cast<std::int64_t>(rounded)};
    }

    double as_yuan() const { return static_cast<double>(fen) / 100.0; }

    std::string str() const {
        const std::int64_t a = fen < 0 ? -fen : fen;
        std::string cents = std::to_string(a % 100);
        if (cents.size() < 2) cents.insert(cents.begin(), '0');
        return (fen < 0 ? "-" : "") + std::to_string(a / 100) + "." + cents;
    }

    constexpr Money& operator+=(Money o) {
        fen += o.fen;
        return *this;
    }
    constexpr Money& operator-=(Money o) {
        fen -= o.fen;
        return *this;
    }
    friend constexpr Money operator+(Money a, Money b) { return Money{a.fen + b.fen}; }
    friend constexpr Money operator-(Money a, Money b) { return Money{a.fen - b.fen}; }
    friend constexpr Money operator*(Money a, std::int64_t k) { return Money{a.fen * k}; }
    friend constexpr auto operator<=>(const Money&, const Money&) = default;
};

// ---------------------------------------------------------------------------
// Calendar dates
// ---------------------------------------------------------------------------

class Date {
public:
    constexpr Date() = default;
    explicit constexpr Date(std::chrono::sys_days d) : days_(d.time_since_epoch().count()) {}
    Date(int y, unsigned m, unsigned d) {
        const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                              std::chrono::day{d}};
        if (!ymd.ok()) throw ArgumentError("invalid calendar date");
        days_ = std::chrono::sys_days{ymd}.time_since_epoch().count();
    }

    // Strict YYYY-MM-DD.
    static Date parse(std::string_view s) {
        auto digits = [&](std::size_t pos, std::size_t n) {
            int v = 0;
            for (std::size_t i = pos; i < pos + n; ++i) {
                if (s[i] < '0' || s[i] > '9') throw ArgumentError("malformed date: " + std::string(s));
                v = v * 10 + (s[i] - '0');
            }
            return v;
        };
        if (s.size() != 10 || s[4] != '-' || s[7] != '-')
            throw ArgumentError("malformed date: " + std::string(s));
        return Date(digits(0, 4), static_cast<unsigned>(digits(5, 2)),
                    static_cast<unsigned>(digits(8, 2)));
    }

    std::string str() const {
        const std::chrono::year_month_day ymd{sys()};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }

    constexpr std::chrono::sys_days sys() const { return std::chrono::sys_days{std::chrono::days{days_}}; }
    constexpr std::int32_t serial() const { return days_; }

    constexpr Date plus_days(int n) const {
        Date d;
        d.days_ = days_ + n;
        return d;
    }
    friend constexpr int operator-(Date a, Date b) { return a.days_ - b.days_; }
    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    std::int32_t days_ = 0;
};

// ---------------------------------------------------------------------------
// Minutes since midnight
// ---------------------------------------------------------------------------

using Minutes = int;
inline constexpr Minutes kMinutesPerDay = 1440;

constexpr Minutes hhmm(int h, int m) { return h * 60 + m; }

inline std::string format_hhmm(Minutes t) {
    char buf[8];
    const int v = ((t % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay;
    std::snprintf(buf, sizeof buf, "%02d:%02d", v / 60, v % 60);
    return buf;
}

// ---------------------------------------------------------------------------
// Typed identifiers
// ---------------------------------------------------------------------------

template <class Tag>
struct Id {
    std::string value;

    Id() = default;
    explicit Id(std::string v) : value(std::move(v)) {}
    Id(const char* v) : value(v) {}

    bool empty() const { return value.empty(); }
    const std::string& str() const { return value; }
    friend auto operator<=>(const Id&, const Id&) = default;
    friend bool operator==(const Id&, const Id&) = default;
};

struct CityTag {};
struct PoiTag {};
struct LinkTag {};
using CityId = Id<CityTag>;
using PoiId = Id<PoiTag>;
using LinkId = Id<LinkTag>;

// ---------------------------------------------------------------------------
// Portable seeded RNG
// ---------------------------------------------------------------------------

// std::mt19937_64 output is fixed by the standard; the distributions are not,
// so every draw is derived here from raw engine output.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [lo, hi].
    std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw ArgumentError("empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next());
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    // Uniform double in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return unit() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    template <class T>
    const T& pick(const std::vector<T>& v) {
        if (v.empty()) throw ArgumentError("pick from empty sequence");
        return v[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(v.size()) - 1))];
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace itinera

template <class Tag>
struct std::hash<itinera::Id<Tag>> {
    std::size_t operator()(const itinera::Id<Tag>& id) const noexcept {
        return std::hash<std::string>{}(id.value);
    }
};
