#include "memaudit/analysis.hpp"

#include "memaudit/error.hpp"

#include <algorithm>

namespace memaudit {

std::string_view to_string(FetchClass c) noexcept
{
    switch (c) {
    case FetchClass::ArchivedOk: return "archived_ok";
    case FetchClass::ArchivedMissing: return "archived_missing";
    case FetchClass::Leaked: return "leaked";
    case FetchClass::ReplayChrome: return "replay_chrome";
    case FetchClass::Skipped: return "skipped";
    case FetchClass::NetworkError: return "network_error";
    }
    return "unknown";
}

FetchClass classify_fetch(const ResourceFetch& fetch, const ArchiveEndpoint& endpoint)
{
    if (fetch.outcome == FetchOutcome::Skipped)
        return FetchClass::Skipped;
    if (classify_host(fetch.request_uri, endpoint) == HostClass::ReplayChrome)
        return FetchClass::ReplayChrome;
    for (const auto& hop : fetch.chain)
        if (classify_host(hop.uri, endpoint) == HostClass::Live)
            return FetchClass::Leaked;
    if (fetch.outcome == FetchOutcome::TransportError || fetch.final_status() == 0)
        return FetchClass::NetworkError;
    int status = fetch.final_status();
    if ((status >= 200 && status < 300) || status == 304)
        return FetchClass::ArchivedOk;
    return FetchClass::ArchivedMissing;
}

MementoMetrics compute_metrics(std::span<const CaptureLog> logs, const ArchiveEndpoint& endpoint)
{
    if (logs.empty())
        throw Error(Errc::InvalidArgument, "compute_metrics needs at least one capture log");
    for (const auto& log : logs)
        if (!(log.memento == logs.front().memento))
            throw Error(Errc::MementoMismatch, log.memento.str() + " vs " + logs.front().memento.str());

    auto find = [&](Engine e, bool scripting) -> const CaptureLog* {
        for (const auto& log : logs)
            if (log.engine == e && log.scripting == scripting)
                return &log;
        return nullptr;
    };
    const CaptureLog* on = find(Engine::Scripted, true);
    const CaptureLog* off = find(Engine::Scripted, false);
    const CaptureLog* primary = on ? on : find(Engine::Static, false);
    if (!primary)
        primary = off ? off : &logs.front();

    if (!primary->page_fetch())
        throw Error(Errc::NoPageFetch, "capture of " + primary->memento.str() + " has no page fetch");

    MementoMetrics m{primary->memento};
    m.year = year_of(*parse_timestamp14(primary->memento.timestamp()));
    m.counted_engine = primary->engine;
    m.counted_scripting = primary->scripting;
    for (const auto& f : primary->fetches)
        ++m.counts[classify_fetch(f, endpoint)];
    m.total_requested = m.counts[FetchClass::ArchivedOk] + m.counts[FetchClass::ArchivedMissing]
                        + m.counts[FetchClass::Leaked] + m.counts[FetchClass::NetworkError];
    m.completeness = m.total_requested == 0
                         ? 1.0
                         : static_cast<double>(m.counts[FetchClass::ArchivedOk]) / m.total_requested;
    if (on && off) {
        auto diff = diff_captures(*on, *off);
        m.script_delta = static_cast<int>(diff.script_delta);
        m.script_degraded = diff.degraded;
    }
    return m;
}

AnnualSeries build_series(const OriginalUri& site, std::vector<MementoMetrics> metrics)
{
    AnnualSeries series{site, {}};
    for (auto& m : metrics) {
        int year = m.year;
        int count = m.total_requested;
        if (!series.points.try_emplace(year, SeriesPoint{count, std::move(m)}).second)
            throw Error(Errc::DuplicateYear, "two mementos for year " + std::to_string(year));
    }
    return series;
}

namespace {

double median_of_sorted(const std::vector<int>& sorted)
{
    auto n = sorted.size();
    if (n % 2 == 1)
        return sorted[n / 2];
    return (static_cast<double>(sorted[n / 2 - 1]) + sorted[n / 2]) / 2.0;
}

void check_drop_params(std::size_t points, double drop_threshold, int sustain_window)
{
    if (!(drop_threshold > 0.0 && drop_threshold < 1.0))
        throw Error(Errc::InvalidArgument, "drop threshold must lie in (0, 1)");
    if (sustain_window < 1)
        throw Error(Errc::InvalidArgument, "sustain window must be positive");
    if (points < static_cast<std::size_t>(sustain_window) + 1)
        throw Error(Errc::InsufficientData, "series has " + std::to_string(points) + " points; need at least "
                                                + std::to_string(sustain_window + 1));
}

}  // namespace

std::vector<DropFlag> detect_drops(std::span<const int> counts, double drop_threshold, int sustain_window)
{
    check_drop_params(counts.size(), drop_threshold, sustain_window);

    std::vector<DropFlag> flags;
    std::vector<int> prior;  // counts[0, prior.size()) kept sorted
    std::size_t i = 1;
    while (i < counts.size()) {
        for (std::size_t k = prior.size(); k < i; ++k)
            prior.insert(std::upper_bound(prior.begin(), prior.end(), counts[k]), counts[k]);
        const double baseline = median_of_sorted(prior);
        const double bound = drop_threshold * baseline;

        std::size_t j = i;
        double sum = 0;
        while (j < counts.size() && counts[j] < bound)
            sum += counts[j++];

        if (j - i >= static_cast<std::size_t>(sustain_window)) {
            double mean = sum / static_cast<double>(j - i);
            flags.push_back({static_cast<int>(i), static_cast<int>(j - 1), baseline, mean, mean / baseline});
            i = j;
        } else {
            ++i;
        }
    }
    return flags;
}

std::vector<DropFlag> detect_drops(const AnnualSeries& series, double drop_threshold, int sustain_window)
{
    std::vector<int> counts;
    std::vector<int> years;
    for (const auto& [year, point] : series.points) {
        years.push_back(year);
        counts.push_back(point.resource_count);
    }
    auto flags = detect_drops(counts, drop_threshold, sustain_window);
    for (auto& f : flags) {
        f.start_year = years[static_cast<std::size_t>(f.start_year)];
        f.end_year = years[static_cast<std::size_t>(f.end_year)];
    }
    return flags;
}

}  // namespace memaudit
