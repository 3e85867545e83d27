#pragma once

#include "memaudit/bridge.hpp"
#include "memaudit/capture.hpp"
#include "memaudit/report.hpp"
#include "memaudit/sampler.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace memaudit {

enum class ScriptingModes { Off, On, Both };

std::string_view to_string(ScriptingModes m) noexcept;
ScriptingModes scripting_modes_from_string(std::string_view s);

struct AuditConfig {
    ArchiveEndpoint endpoint;
    std::string endpoint_preset;  // "fixture", "wayback" or "" for explicit templates
    std::string fixture_dir;      // fixture preset only
    Interval interval = Interval::years(1);
    AnchorMode mode = AnchorMode::Drifting;
    Engine engine = Engine::Static;
    ScriptingModes scripting = ScriptingModes::Off;
    double drop_threshold = kDefaultDropThreshold;
    int sustain_window = kDefaultSustainWindow;
    int timeout_s = 30;
    int per_host = 2;
    int delay_ms = 500;
    int max_redirects = 10;
    int settle_ms = 3000;
    int jobs = 4;
    std::string robots_marker = "robots.txt";
    std::string user_agent = default_user_agent();
    std::map<std::string, std::string> resolve;  // user-given overrides only
    std::string bridge;                          // "host:port", "stub" or empty
    std::filesystem::path cache_dir = ".memento-audit-cache";
    std::filesystem::path out_dir = "audit-out";

    /// Throws Error{InvalidArgument}: non-positive knobs (the politeness delay
    /// may be 0), a scripting-on run with the static engine, a bad endpoint.
    void validate() const;

    /// Scripting flags to capture each memento with, off before on.
    std::vector<bool> scripting_runs() const;
    CaptureConfig capture_config() const;
    HttpOptions http_options() const;

    /// Every knob that shapes the result, as echoed into reports.
    nlohmann::ordered_json echo() const;
};

/// What an audit run leaves in the cache directory besides the capture logs:
/// enough to rebuild the report without the network.
struct AuditSession {
    OriginalUri site;
    UtcTime created{};
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    AnnualSample sample;
    std::map<std::string, std::string> failures;  // memento replay URI -> reason
};

nlohmann::ordered_json to_json(const AuditSession& session);
AuditSession session_from_json(const nlohmann::ordered_json& doc);
std::filesystem::path session_path(const std::filesystem::path& cache_dir, const OriginalUri& site);
void write_session(const AuditSession& session, const std::filesystem::path& cache_dir);
AuditSession read_session(const std::filesystem::path& file);

/// Analysis over cached logs only. Every memento that failed, has no log, or
/// whose counted capture lost its page becomes a gap; the rest are measured.
AuditReport build_report(const AuditSession& session, const std::filesystem::path& cache_dir);

/// Writes report.json and series.csv.
void write_report_files(const AuditReport& report, const std::filesystem::path& out_dir);

struct AuditOutcome {
    AuditReport report;
    int exit_code = 0;  // 0 clean, 1 report emitted with gaps
};

/// Full pipeline: TimeMap, sample, capture (reusing cached logs whose memento,
/// engine, scripting and settle parameters match), session file, then the
/// same build_report path `report` uses. Fatal problems throw.
AuditOutcome run_audit(const OriginalUri& site, const AuditConfig& config, std::shared_ptr<const HttpClient> client,
                       std::shared_ptr<BrowserBridge> bridge, std::ostream& diag);

/// Rebuilds the report from a cache directory. `site` picks a session when the
/// cache holds several. Throws Error{InvalidArgument} with "no capture logs
/// found" for a cache without logs.
AuditOutcome run_report(const std::filesystem::path& cache_dir, const std::optional<std::string>& site,
                        const std::filesystem::path& out_dir);

}  // namespace memaudit
