#include "memaudit/sampler.hpp"

#include "memaudit/error.hpp"
#include "memaudit/rewriter.hpp"

#include <algorithm>
#include <charconv>

namespace memaudit {

Interval::Interval(Unit unit, long long amount) : unit_(unit), amount_(amount)
{
    if (amount_ <= 0)
        throw Error(Errc::InvalidArgument, "interval must be positive");
}

Interval Interval::parse(std::string_view text)
{
    long long n = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    std::string_view unit(ptr, text.data() + text.size() - ptr);
    if (ec != std::errc{} || ptr == text.data() || n <= 0)
        throw Error(Errc::InvalidArgument, "bad interval \"" + std::string(text) + "\"");
    if (unit == "y")
        return Interval(Unit::Months, 12 * n);
    if (unit == "mo")
        return Interval(Unit::Months, n);
    if (unit == "d")
        return Interval(Unit::Seconds, 86400 * n);
    if (unit == "h")
        return Interval(Unit::Seconds, 3600 * n);
    if (unit == "s")
        return Interval(Unit::Seconds, n);
    throw Error(Errc::InvalidArgument, "bad interval unit in \"" + std::string(text) + "\" (use y, mo, d, h, s)");
}

std::string Interval::to_string() const
{
    if (unit_ == Unit::Months)
        return amount_ % 12 == 0 ? std::to_string(amount_ / 12) + "y" : std::to_string(amount_) + "mo";
    if (amount_ % 86400 == 0)
        return std::to_string(amount_ / 86400) + "d";
    if (amount_ % 3600 == 0)
        return std::to_string(amount_ / 3600) + "h";
    return std::to_string(amount_) + "s";
}

UtcTime Interval::advance(UtcTime t, long long steps) const
{
    if (unit_ == Unit::Months)
        return add_months(t, static_cast<int>(amount_ * steps));
    return t + Seconds{amount_ * steps};
}

long long Interval::first_step_after(UtcTime origin, UtcTime t) const
{
    long long k = 1;
    if (t > origin) {
        if (unit_ == Unit::Seconds) {
            k = (t - origin).count() / amount_;
        } else {
            auto a = std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(origin)};
            auto b = std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(t)};
            long long months = (static_cast<int>(b.year()) - static_cast<int>(a.year())) * 12LL
                               + static_cast<int>(static_cast<unsigned>(b.month()))
                               - static_cast<int>(static_cast<unsigned>(a.month()));
            k = months / amount_ - 1;
        }
        k = std::max(1LL, k);
    }
    while (advance(origin, k) <= t)
        ++k;
    return k;
}

UtcTime extract_date(const MementoRecord& memento)
{
    if (auto segment = embedded_timestamp(memento.uri)) {
        if (auto embedded = parse_timestamp14(*segment)) {
            auto gap = embedded > memento.datetime ? *embedded - memento.datetime : memento.datetime - *embedded;
            if (gap > std::chrono::hours{24})
                throw Error(Errc::TimestampMismatch, "datetime " + format_iso8601(memento.datetime)
                                                         + " disagrees with URI timestamp " + *segment);
        }
    }
    return memento.datetime;
}

AnnualSample select_annual(const TimeMap& tm, Interval interval, AnchorMode mode)
{
    if (tm.mementos.empty())
        throw Error(Errc::InvalidArgument, "cannot sample an empty TimeMap");

    const auto& ms = tm.mementos;
    AnnualSample sample{{}, interval, mode};
    const MementoRecord& pivot = ms.front();
    sample.selections.push_back({pivot.datetime, pivot, Seconds{0}});

    auto by_time = [](const MementoRecord& m, UtcTime t) { return m.datetime < t; };
    UtcTime previous = pivot.datetime;
    long long grid_step = 0;

    while (true) {
        auto first_admissible = std::upper_bound(ms.begin(), ms.end(), previous,
                                                 [](UtcTime t, const MementoRecord& m) { return t < m.datetime; });
        if (first_admissible == ms.end())
            break;

        UtcTime target;
        if (mode == AnchorMode::Drifting) {
            target = interval.advance(previous);
        } else {
            grid_step = std::max(grid_step + 1, interval.first_step_after(pivot.datetime, previous));
            target = interval.advance(pivot.datetime, grid_step);
        }

        // Closest candidates bracket the target: the first at-or-after it and
        // the last before it (earliest of its equal-datetime run).
        auto after = std::lower_bound(first_admissible, ms.end(), target, by_time);
        auto chosen = after;
        if (after != first_admissible) {
            auto before = std::prev(after);
            before = std::lower_bound(first_admissible, before, before->datetime, by_time);
            if (after == ms.end() || target - before->datetime <= after->datetime - target)
                chosen = before;
        }

        sample.selections.push_back({target, *chosen, chosen->datetime - target});
        previous = chosen->datetime;
    }
    return sample;
}

}  // namespace memaudit
