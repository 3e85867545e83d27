#pragma once

#include "memaudit/endpoint.hpp"
#include "memaudit/http.hpp"
#include "memaudit/rewriter.hpp"
#include "memaudit/time.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace memaudit {

class BrowserBridge;

enum class Trigger { Markup, Stylesheet, ScriptRuntime };
enum class Phase { Page, Subresource };
enum class FetchOutcome {
    Completed,       // the chain ends on an HTTP status
    TransportError,  // last hop has status 0
    Skipped,         // data:, javascript:, fragment-only ... never requested
};
enum class Engine { Static, Scripted };

std::string_view to_string(Trigger t) noexcept;
std::string_view to_string(Phase p) noexcept;
std::string_view to_string(FetchOutcome o) noexcept;
std::string_view to_string(Engine e) noexcept;
Engine engine_from_string(std::string_view s);

struct ResourceFetch {
    std::string request_uri;
    std::vector<Hop> chain;  // non-empty; every hop but the last is 3xx
    std::string content_type;
    std::uint64_t bytes = 0;
    Trigger trigger = Trigger::Markup;
    Phase phase = Phase::Subresource;
    FetchOutcome outcome = FetchOutcome::Completed;
    std::string note;

    int final_status() const noexcept { return chain.empty() ? 0 : chain.back().status; }

    bool operator==(const ResourceFetch&) const = default;
};

struct CaptureLog {
    ReplayUri memento;
    Engine engine = Engine::Static;
    bool scripting = false;
    std::vector<ResourceFetch> fetches;  // page first, then discovery order
    std::optional<std::string> screenshot;
    UtcTime started{};
    UtcTime finished{};
    int settle_ms = 0;
    int page_timeout_ms = 0;
    bool page_failed = false;  // page phase ended >= 400 or never loaded

    const ResourceFetch* page_fetch() const noexcept;
    std::set<std::string> subresource_uris() const;
};

struct CaptureConfig {
    int max_redirects = 10;
    int settle_ms = 3000;
    int page_timeout_ms = 30000;
    int parallel = 4;  // concurrent fetches within one capture
    std::optional<std::filesystem::path> screenshot_dir;
};

/// Crawler-perspective capture: fetch the page through replay, pull every
/// static reference out of the markup and stylesheets, rewrite each into the
/// archive and dereference it once. Page transport failure throws
/// Error{NetworkError}; a page answering >= 400 yields a log with
/// page_failed set.
CaptureLog capture_static(const ReplayUri& memento, const ArchiveEndpoint& endpoint, const HttpClient& client,
                          const CaptureConfig& config);

/// Browser capture through a BrowserBridge, with script execution on or off.
/// Requests not present in the page's static markup references are tagged
/// script-runtime. Throws BridgeUnavailable or BridgeTimeout.
CaptureLog capture_scripted(const ReplayUri& memento, const ArchiveEndpoint& endpoint, bool scripting,
                            BrowserBridge& bridge, const HttpClient& client, const CaptureConfig& config);

/// Engine abstraction; the static engine needs no browser.
class CaptureEngine {
public:
    virtual ~CaptureEngine() = default;
    virtual Engine kind() const noexcept = 0;
    virtual CaptureLog capture(const ReplayUri& memento, bool scripting) = 0;
};

std::unique_ptr<CaptureEngine> make_static_engine(ArchiveEndpoint endpoint, std::shared_ptr<const HttpClient> client,
                                                  CaptureConfig config);
std::unique_ptr<CaptureEngine> make_scripted_engine(ArchiveEndpoint endpoint,
                                                    std::shared_ptr<const HttpClient> client,
                                                    std::shared_ptr<BrowserBridge> bridge, CaptureConfig config);

struct DifferentialReport {
    std::set<std::string> script_only;
    std::set<std::string> noscript_only;
    std::set<std::string> shared;
    std::size_t script_delta = 0;
    bool degraded = false;  // one side has no page fetch
};

/// Compares subresource request URIs (skipped references excluded) of a
/// scripting-on and a scripting-off capture of the same memento. Throws
/// Error{MementoMismatch}.
DifferentialReport diff_captures(const CaptureLog& on, const CaptureLog& off);

// Persistence: one JSON document per (memento, engine, scripting).

std::string sha256_hex(std::string_view data);
/// "<timestamp>_<sha256(original) first 12 hex>_<engine>_<on|off>.json"
std::string capture_log_filename(const ReplayUri& memento, Engine engine, bool scripting);
std::string capture_log_filename(const CaptureLog& log);

nlohmann::ordered_json to_json(const CaptureLog& log);
CaptureLog capture_log_from_json(const nlohmann::json& doc, const ArchiveEndpoint& endpoint);

void write_capture_log(const CaptureLog& log, const std::filesystem::path& dir);
CaptureLog read_capture_log(const std::filesystem::path& file, const ArchiveEndpoint& endpoint);

}  // namespace memaudit
