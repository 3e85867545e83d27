#pragma once

#include "memaudit/link_format.hpp"
#include "memaudit/time.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace memaudit {

/// Sampling step: either whole calendar months (a year is 12) or a fixed
/// number of seconds.
class Interval {
public:
    static Interval years(int n) { return Interval(Unit::Months, 12LL * n); }
    static Interval months(int n) { return Interval(Unit::Months, n); }
    static Interval days(int n) { return Interval(Unit::Seconds, 86400LL * n); }
    static Interval seconds(long long n) { return Interval(Unit::Seconds, n); }

    /// "1y", "6mo", "365d", "12h", "90s". Throws Error{InvalidArgument}.
    static Interval parse(std::string_view text);
    std::string to_string() const;

    /// t advanced by `steps` intervals.
    UtcTime advance(UtcTime t, long long steps = 1) const;
    /// Smallest k >= 1 with advance(origin, k) > t.
    long long first_step_after(UtcTime origin, UtcTime t) const;

    bool operator==(const Interval&) const = default;

private:
    enum class Unit { Months, Seconds };
    Interval(Unit unit, long long amount);
    Unit unit_;
    long long amount_;
};

enum class AnchorMode {
    Drifting,   // next target = previous chosen datetime + interval
    FixedGrid,  // targets = pivot + k * interval
};

struct Selection {
    UtcTime target;
    MementoRecord chosen;
    Seconds deviation;  // chosen - target

    bool operator==(const Selection&) const = default;
};

struct AnnualSample {
    std::vector<Selection> selections;
    Interval interval = Interval::years(1);
    AnchorMode mode = AnchorMode::Drifting;
};

/// The memento's datetime. When its URI embeds a 14-digit timestamp the two
/// must agree within 24 hours, otherwise Error{TimestampMismatch}.
UtcTime extract_date(const MementoRecord& memento);

/// Greedy one-per-interval selection with the first memento as pivot.
///
/// After the pivot, each step computes a target (see AnchorMode; in fixed-grid
/// mode the next grid point strictly after the previous choice) and picks,
/// among mementos strictly later than the previous choice, the one closest to
/// the target. Ties go to the earlier memento. Stops when no later memento
/// remains. Requires a non-empty TimeMap.
AnnualSample select_annual(const TimeMap& tm, Interval interval = Interval::years(1),
                           AnchorMode mode = AnchorMode::Drifting);

}  // namespace memaudit
