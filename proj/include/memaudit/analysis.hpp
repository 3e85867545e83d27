#pragma once

#include "memaudit/capture.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace memaudit {

enum class FetchClass { ArchivedOk, ArchivedMissing, Leaked, ReplayChrome, Skipped, NetworkError };
inline constexpr std::size_t kFetchClassCount = 6;

std::string_view to_string(FetchClass c) noexcept;

/// Precedence: Skipped, ReplayChrome (by request URI), Leaked (any hop on a
/// live host, even when the chain ends 200), NetworkError, then ArchivedOk
/// for a final 2xx/304 and ArchivedMissing for anything else.
FetchClass classify_fetch(const ResourceFetch& fetch, const ArchiveEndpoint& endpoint);

struct ClassCounts {
    std::array<int, kFetchClassCount> values{};

    int& operator[](FetchClass c) { return values[static_cast<std::size_t>(c)]; }
    int operator[](FetchClass c) const { return values[static_cast<std::size_t>(c)]; }
    bool operator==(const ClassCounts&) const = default;
};

/// Archivability of one memento.
///
/// total_requested counts ArchivedOk + ArchivedMissing + Leaked + NetworkError
/// (the page included, replay chrome and skipped references excluded), and
///
///     completeness = ArchivedOk / total_requested      (1.0 when total is 0)
///
/// This ratio is this tool's operational definition of archivability.
struct MementoMetrics {
    ReplayUri memento;
    int year = 0;
    ClassCounts counts;
    int total_requested = 0;
    double completeness = 1.0;
    std::optional<int> script_delta;  // present when scripting on and off were both captured
    bool script_degraded = false;
    Engine counted_engine = Engine::Static;
    bool counted_scripting = false;
};

/// Metrics from the logs of one memento. Counts come from the scripted
/// scripting-on log when present, else the static log, else scripted-off.
/// Throws NoPageFetch or MementoMismatch.
MementoMetrics compute_metrics(std::span<const CaptureLog> logs, const ArchiveEndpoint& endpoint);

struct SeriesPoint {
    int resource_count = 0;
    MementoMetrics metrics;
};

struct AnnualSeries {
    OriginalUri site;
    std::map<int, SeriesPoint> points;  // year -> point
};

/// Year-indexed series; resource_count = total_requested. Throws DuplicateYear.
AnnualSeries build_series(const OriginalUri& site, std::vector<MementoMetrics> metrics);

struct DropFlag {
    int start_year = 0;
    int end_year = 0;
    double baseline = 0;
    double dropped_value = 0;  // mean count over the run
    double ratio = 0;          // dropped_value / baseline

    bool operator==(const DropFlag&) const = default;
};

inline constexpr double kDefaultDropThreshold = 0.5;
inline constexpr int kDefaultSustainWindow = 2;

/// Sustained-drop detection over series points in year order.
///
/// A run starts at a point whose count is below threshold * baseline, where
/// baseline is the median of all earlier counts; it extends while later counts
/// stay below that same bound. Runs of at least `sustain_window` points become
/// flags and scanning resumes after the run; shorter runs are dropped and
/// scanning resumes at the next point. Throws InsufficientData when the series
/// has fewer than sustain_window + 1 points.
std::vector<DropFlag> detect_drops(const AnnualSeries& series, double drop_threshold = kDefaultDropThreshold,
                                   int sustain_window = kDefaultSustainWindow);

/// Same rule over a bare count sequence; flags carry point indices as years.
std::vector<DropFlag> detect_drops(std::span<const int> counts, double drop_threshold, int sustain_window);

}  // namespace memaudit
