#pragma once

#include "memaudit/analysis.hpp"
#include "memaudit/sampler.hpp"

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace memaudit {

inline constexpr std::string_view kReportSchemaVersion = "1";

struct LeakEntry {
    std::string memento;
    Engine engine = Engine::Static;
    bool scripting = false;
    std::string request_uri;
    std::vector<Hop> chain;

    bool operator==(const LeakEntry&) const = default;
};

/// A sampled memento whose capture failed or was degraded.
struct GapEntry {
    std::string memento;
    std::string reason;

    bool operator==(const GapEntry&) const = default;
};

struct AuditReport {
    OriginalUri site;
    UtcTime generated{};
    /// Every knob the audit ran with (templates, hosts, engine, thresholds,
    /// network settings); enough to re-run it.
    nlohmann::ordered_json config_echo = nlohmann::ordered_json::object();
    AnnualSample sample;
    std::vector<MementoMetrics> metrics;
    AnnualSeries series;
    /// Mementos left out of the series because another one of the same year
    /// was closer to its target.
    std::vector<std::string> series_excluded;
    double drop_threshold = kDefaultDropThreshold;
    int sustain_window = kDefaultSustainWindow;
    bool drops_insufficient_data = false;
    std::vector<DropFlag> drops;
    std::vector<LeakEntry> leaks;
    std::vector<GapEntry> gaps;
};

/// Canonical, byte-stable JSON document (schema_version "1").
nlohmann::ordered_json emit_json(const AuditReport& report);
/// emit_json pretty-printed with a trailing newline: the report.json bytes.
std::string emit_json_text(const AuditReport& report);

/// Inverse of emit_json; the endpoint is read back from config_echo.
AuditReport report_from_json(const nlohmann::ordered_json& doc);

/// year,resource_count,archived_ok,archived_missing,leaked,completeness,script_delta
/// One row per year ascending; completeness with 4 decimals; empty
/// script_delta when absent.
std::string emit_csv_series(const AnnualSeries& series);

/// Endpoint fields as echoed in config_echo["endpoint"].
nlohmann::ordered_json endpoint_to_json(const ArchiveEndpoint& endpoint);
ArchiveEndpoint endpoint_from_json(const nlohmann::ordered_json& doc);

}  // namespace memaudit
