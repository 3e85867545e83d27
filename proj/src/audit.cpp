#include "memaudit/audit.hpp"

#include "memaudit/error.hpp"
#include "memaudit/memento_client.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace memaudit {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view to_string(ScriptingModes m) noexcept
{
    switch (m) {
    case ScriptingModes::Off: return "off";
    case ScriptingModes::On: return "on";
    case ScriptingModes::Both: return "both";
    }
    return "off";
}

ScriptingModes scripting_modes_from_string(std::string_view s)
{
    if (s == "off")
        return ScriptingModes::Off;
    if (s == "on")
        return ScriptingModes::On;
    if (s == "both")
        return ScriptingModes::Both;
    throw Error(Errc::InvalidArgument, "unknown scripting mode \"" + std::string(s) + "\" (on|off|both)");
}

void AuditConfig::validate() const
{
    endpoint.validate();
    auto positive = [](long long v, const char* name) {
        if (v <= 0)
            throw Error(Errc::InvalidArgument, std::string(name) + " must be positive");
    };
    positive(sustain_window, "sustain window");
    positive(timeout_s, "timeout");
    positive(per_host, "per-host concurrency");
    positive(max_redirects, "max redirects");
    positive(settle_ms, "settle time");
    positive(jobs, "jobs");
    if (delay_ms < 0)
        throw Error(Errc::InvalidArgument, "politeness delay must not be negative");
    if (!(drop_threshold > 0.0 && drop_threshold < 1.0))
        throw Error(Errc::InvalidArgument, "drop threshold must lie in (0, 1)");
    if (engine == Engine::Static && scripting != ScriptingModes::Off)
        throw Error(Errc::InvalidArgument, "the static engine only runs with scripting off");
}

std::vector<bool> AuditConfig::scripting_runs() const
{
    switch (scripting) {
    case ScriptingModes::Off: return {false};
    case ScriptingModes::On: return {true};
    case ScriptingModes::Both: return {false, true};
    }
    return {false};
}

CaptureConfig AuditConfig::capture_config() const
{
    CaptureConfig c;
    c.max_redirects = max_redirects;
    c.settle_ms = settle_ms;
    c.page_timeout_ms = timeout_s * 1000;
    c.parallel = per_host;
    return c;
}

HttpOptions AuditConfig::http_options() const
{
    HttpOptions o;
    o.user_agent = user_agent;
    o.timeout = std::chrono::seconds(timeout_s);
    o.resolve = resolve;
    return o;
}

ordered_json AuditConfig::echo() const
{
    ordered_json out{{"endpoint", endpoint_to_json(endpoint)}, {"endpoint_preset", endpoint_preset}};
    if (endpoint_preset == "fixture")
        out["fixture_dir"] = fixture_dir;
    out["interval"] = interval.to_string();
    out["mode"] = mode == AnchorMode::Drifting ? "drifting" : "fixed-grid";
    out["engine"] = to_string(engine);
    out["scripting"] = to_string(scripting);
    out["settle_ms"] = settle_ms;
    out["drop_threshold"] = drop_threshold;
    out["sustain_window"] = sustain_window;
    out["robots_marker"] = robots_marker;
    out["bridge"] = bridge;
    out["network"] = ordered_json{{"timeout_s", timeout_s},     {"per_host", per_host},
                                  {"delay_ms", delay_ms},       {"max_redirects", max_redirects},
                                  {"jobs", jobs},               {"user_agent", user_agent},
                                  {"resolve", resolve}};
    return out;
}

// ---------------------------------------------------------------------------

namespace {

UtcTime now_utc()
{
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

RelSet rels_from_string(std::string_view s)
{
    RelSet rels{MementoRel::Memento};
    std::istringstream in{std::string(s)};
    for (std::string tok; in >> tok;) {
        if (tok == "first")
            rels.insert(MementoRel::FirstMemento);
        else if (tok == "last")
            rels.insert(MementoRel::LastMemento);
    }
    return rels;
}

void write_text_atomically(const fs::path& path, const std::string& text)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(Errc::IoError, "cannot write " + tmp.string());
        out << text;
        if (!out)
            throw Error(Errc::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw Error(Errc::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw Error(Errc::IoError, "cannot create directory " + dir.string());
}

bool is_capture_log_name(const std::string& name)
{
    return name.ends_with(".json") && !name.starts_with("session_")
           && (name.find("_static_") != std::string::npos || name.find("_scripted_") != std::string::npos);
}

std::string gap_reason_for_page(const CaptureLog& log)
{
    const auto* page = log.page_fetch();
    if (!page)
        return "page never loaded";
    if (page->outcome == FetchOutcome::TransportError)
        return "page fetch failed: " + page->note;
    return "page answered HTTP " + std::to_string(page->final_status());
}

}  // namespace

ordered_json to_json(const AuditSession& s)
{
    ordered_json selections = ordered_json::array();
    for (const auto& sel : s.sample.selections)
        selections.push_back(ordered_json{{"target", format_iso8601(sel.target)},
                                          {"memento", sel.chosen.uri},
                                          {"datetime", format_iso8601(sel.chosen.datetime)},
                                          {"rel", sel.chosen.rels.to_link_value()},
                                          {"deviation_s", sel.deviation.count()}});
    ordered_json failures = ordered_json::object();
    for (const auto& [k, v] : s.failures)
        failures[k] = v;
    return ordered_json{{"schema_version", "1"},
                        {"site", s.site.str()},
                        {"created", format_iso8601(s.created)},
                        {"config", s.config},
                        {"sample",
                         ordered_json{{"interval", s.sample.interval.to_string()},
                                      {"mode", s.sample.mode == AnchorMode::Drifting ? "drifting" : "fixed-grid"},
                                      {"selections", selections}}},
                        {"failures", failures}};
}

AuditSession session_from_json(const ordered_json& doc)
{
    try {
        AuditSession s{OriginalUri::parse(doc.at("site").get<std::string>()),
                       parse_iso8601(doc.at("created").get<std::string>()), doc.at("config")};
        const auto& sample = doc.at("sample");
        s.sample.interval = Interval::parse(sample.at("interval").get<std::string>());
        s.sample.mode =
            sample.at("mode").get<std::string>() == "drifting" ? AnchorMode::Drifting : AnchorMode::FixedGrid;
        for (const auto& sel : sample.at("selections")) {
            MementoRecord rec{sel.at("memento").get<std::string>(),
                              parse_iso8601(sel.at("datetime").get<std::string>()),
                              rels_from_string(sel.value("rel", "memento"))};
            s.sample.selections.push_back({parse_iso8601(sel.at("target").get<std::string>()), std::move(rec),
                                           Seconds{sel.at("deviation_s").get<long long>()}});
        }
        for (const auto& [k, v] : doc.at("failures").items())
            s.failures[k] = v.get<std::string>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("malformed session file: ") + e.what());
    }
}

fs::path session_path(const fs::path& cache_dir, const OriginalUri& site)
{
    return cache_dir / ("session_" + sha256_hex(site.str()).substr(0, 12) + ".json");
}

void write_session(const AuditSession& session, const fs::path& cache_dir)
{
    ensure_dir(cache_dir);
    write_text_atomically(session_path(cache_dir, session.site), to_json(session).dump(2) + "\n");
}

AuditSession read_session(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error(Errc::IoError, "cannot read " + file.string());
    try {
        return session_from_json(ordered_json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidArgument, file.string() + ": " + e.what());
    }
}

AuditReport build_report(const AuditSession& session, const fs::path& cache_dir)
{
    const auto& cfg = session.config;
    ArchiveEndpoint endpoint;
    Engine engine = Engine::Static;
    std::vector<bool> runs;
    AuditReport r{session.site, session.created, session.config, session.sample, {}, AnnualSeries{session.site, {}}};
    try {
        endpoint = endpoint_from_json(cfg.at("endpoint"));
        engine = engine_from_string(cfg.at("engine").get<std::string>());
        AuditConfig tmp;
        tmp.scripting = scripting_modes_from_string(cfg.at("scripting").get<std::string>());
        runs = tmp.scripting_runs();
        r.drop_threshold = cfg.at("drop_threshold").get<double>();
        r.sustain_window = cfg.at("sustain_window").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("session config incomplete: ") + e.what());
    }

    std::vector<Seconds> deviations;
    for (const auto& sel : session.sample.selections) {
        std::string key = sel.chosen.uri;
        std::optional<ReplayUri> replay;
        try {
            replay = to_replay_uri(sel.chosen.uri, endpoint);
            key = replay->str();
        } catch (const Error&) {
        }
        bool gapped = false;
        auto gap = [&](std::string reason) {
            if (!gapped)
                r.gaps.push_back({key, std::move(reason)});
            gapped = true;
        };
        if (auto it = session.failures.find(key); it != session.failures.end())
            gap(it->second);
        if (!replay) {
            gap("memento URI does not map to the replay template");
            continue;
        }

        std::vector<CaptureLog> logs;
        for (bool scripting : runs) {
            auto file = cache_dir / capture_log_filename(*replay, engine, scripting);
            if (fs::exists(file))
                logs.push_back(read_capture_log(file, endpoint));
        }
        if (logs.empty()) {
            gap("no capture log");
            continue;
        }
        std::optional<MementoMetrics> metrics;
        try {
            metrics = compute_metrics(logs, endpoint);
        } catch (const Error& e) {
            gap(e.what());
            continue;
        }
        auto counted = std::find_if(logs.begin(), logs.end(), [&](const CaptureLog& l) {
            return l.engine == metrics->counted_engine && l.scripting == metrics->counted_scripting;
        });
        if (counted->page_failed) {
            gap(gap_reason_for_page(*counted));
            continue;
        }
        for (const auto& log : logs)
            for (const auto& f : log.fetches)
                if (classify_fetch(f, endpoint) == FetchClass::Leaked)
                    r.leaks.push_back({key, log.engine, log.scripting, f.request_uri, f.chain});
        r.metrics.push_back(std::move(*metrics));
        deviations.push_back(sel.deviation);
    }

    // one point per year: the memento closest to its own target, earlier on ties
    std::map<int, std::size_t> best;
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
        auto [it, fresh] = best.try_emplace(r.metrics[i].year, i);
        if (!fresh && std::chrono::abs(deviations[i]) < std::chrono::abs(deviations[it->second]))
            it->second = i;
    }
    std::vector<MementoMetrics> in_series;
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
        if (best.at(r.metrics[i].year) == i)
            in_series.push_back(r.metrics[i]);
        else
            r.series_excluded.push_back(r.metrics[i].memento.str());
    }
    r.series = build_series(session.site, std::move(in_series));

    try {
        r.drops = detect_drops(r.series, r.drop_threshold, r.sustain_window);
    } catch (const Error& e) {
        if (e.code() != Errc::InsufficientData)
            throw;
        r.drops_insufficient_data = true;
    }
    return r;
}

void write_report_files(const AuditReport& report, const fs::path& out_dir)
{
    ensure_dir(out_dir);
    write_text_atomically(out_dir / "report.json", emit_json_text(report));
    write_text_atomically(out_dir / "series.csv", emit_csv_series(report.series));
}

AuditOutcome run_audit(const OriginalUri& site, const AuditConfig& config, std::shared_ptr<const HttpClient> client,
                       std::shared_ptr<BrowserBridge> bridge, std::ostream& diag)
{
    config.validate();
    ensure_dir(config.cache_dir);
    ensure_dir(config.out_dir);

    auto tm = fetch_timemap(*client, site, config.endpoint, config.robots_marker);
    diag << "timemap: " << tm.mementos.size() << " mementos for " << site.str() << "\n";
    if (tm.mementos.empty())
        throw Error(Errc::NotArchived, "TimeMap for " + site.str() + " lists no mementos");
    auto sample = select_annual(tm, config.interval, config.mode);
    diag << "sample: " << sample.selections.size() << " mementos at " << config.interval.to_string() << " intervals\n";

    auto capture_cfg = config.capture_config();
    std::unique_ptr<CaptureEngine> engine;
    if (config.engine == Engine::Static) {
        engine = make_static_engine(config.endpoint, client, capture_cfg);
    } else {
        if (!bridge)
            throw Error(Errc::BridgeUnavailable, "the scripted engine needs a browser bridge (--bridge)");
        engine = make_scripted_engine(config.endpoint, client, bridge, capture_cfg);
    }
    const int expected_settle = config.engine == Engine::Static ? 0 : capture_cfg.settle_ms;

    AuditSession session{site, now_utc(), config.echo(), sample, {}};
    std::mutex mutex;
    auto run_one = [&](const Selection& sel) {
        std::string key = sel.chosen.uri;
        try {
            auto replay = to_replay_uri(sel.chosen.uri, config.endpoint);
            key = replay.str();
            for (bool scripting : config.scripting_runs()) {
                auto file = config.cache_dir / capture_log_filename(replay, config.engine, scripting);
                if (fs::exists(file)) {
                    try {
                        auto cached = read_capture_log(file, config.endpoint);
                        if (cached.settle_ms == expected_settle
                            && cached.page_timeout_ms == capture_cfg.page_timeout_ms) {
                            std::lock_guard lock(mutex);
                            diag << "cached   " << file.filename().string() << "\n";
                            continue;
                        }
                    } catch (const Error&) {
                        // unreadable cache entries are simply recaptured
                    }
                }
                auto log = engine->capture(replay, scripting);
                write_capture_log(log, config.cache_dir);
                std::lock_guard lock(mutex);
                diag << "captured " << file.filename().string() << " (" << log.fetches.size() << " fetches)\n";
            }
        } catch (const Error& e) {
            std::lock_guard lock(mutex);
            session.failures[key] = e.what();
            diag << "failed   " << key << ": " << e.what() << "\n";
        }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < sample.selections.size(); i = next++)
            run_one(sample.selections[i]);
    };
    {
        std::vector<std::jthread> pool;
        auto n = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), sample.selections.size());
        for (std::size_t w = 1; w < n; ++w)
            pool.emplace_back(worker);
        worker();
    }

    write_session(session, config.cache_dir);
    auto stored = read_session(session_path(config.cache_dir, site));
    AuditOutcome outcome{build_report(stored, config.cache_dir)};
    write_report_files(outcome.report, config.out_dir);
    outcome.exit_code = outcome.report.gaps.empty() ? 0 : 1;
    return outcome;
}

AuditOutcome run_report(const fs::path& cache_dir, const std::optional<std::string>& site, const fs::path& out_dir)
{
    std::vector<fs::path> sessions;
    bool any_log = false;
    std::error_code ec;
    if (fs::is_directory(cache_dir, ec)) {
        for (const auto& entry : fs::directory_iterator(cache_dir)) {
            auto name = entry.path().filename().string();
            if (name.starts_with("session_") && name.ends_with(".json"))
                sessions.push_back(entry.path());
            else if (is_capture_log_name(name))
                any_log = true;
        }
    }
    if (!any_log)
        throw Error(Errc::InvalidArgument, "no capture logs found in " + cache_dir.string());
    std::sort(sessions.begin(), sessions.end());

    fs::path chosen;
    if (site) {
        chosen = session_path(cache_dir, OriginalUri::parse(*site));
        if (!fs::exists(chosen))
            throw Error(Errc::InvalidArgument, "no audit session for " + *site + " in " + cache_dir.string());
    } else if (sessions.empty()) {
        throw Error(Errc::InvalidArgument, "no audit session file in " + cache_dir.string());
    } else if (sessions.size() > 1) {
        std::string sites;
        for (const auto& s : sessions)
            sites += " " + read_session(s).site.str();
        throw Error(Errc::InvalidArgument, "several audited sites in the cache; pick one with --site:" + sites);
    } else {
        chosen = sessions.front();
    }

    AuditOutcome outcome{build_report(read_session(chosen), cache_dir)};
    write_report_files(outcome.report, out_dir);
    outcome.exit_code = outcome.report.gaps.empty() ? 0 : 1;
    return outcome;
}

}  // namespace memaudit
