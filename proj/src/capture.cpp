#include "memaudit/capture.hpp"

#include "memaudit/bridge.hpp"
#include "memaudit/error.hpp"
#include "memaudit/html_refs.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <thread>

#include <openssl/evp.h>

namespace memaudit {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Trigger t) noexcept
{
    switch (t) {
    case Trigger::Markup: return "markup";
    case Trigger::Stylesheet: return "stylesheet";
    case Trigger::ScriptRuntime: return "script-runtime";
    }
    return "markup";
}

std::string_view to_string(Phase p) noexcept
{
    return p == Phase::Page ? "page" : "subresource";
}

std::string_view to_string(FetchOutcome o) noexcept
{
    switch (o) {
    case FetchOutcome::Completed: return "completed";
    case FetchOutcome::TransportError: return "transport-error";
    case FetchOutcome::Skipped: return "skipped";
    }
    return "completed";
}

std::string_view to_string(Engine e) noexcept
{
    return e == Engine::Static ? "static" : "scripted";
}

Engine engine_from_string(std::string_view s)
{
    if (s == "static")
        return Engine::Static;
    if (s == "scripted")
        return Engine::Scripted;
    throw Error(Errc::InvalidArgument, "unknown engine \"" + std::string(s) + "\" (static|scripted)");
}

namespace {

Trigger trigger_from_string(std::string_view s)
{
    if (s == "stylesheet")
        return Trigger::Stylesheet;
    if (s == "script-runtime")
        return Trigger::ScriptRuntime;
    return Trigger::Markup;
}

FetchOutcome outcome_from_string(std::string_view s)
{
    if (s == "transport-error")
        return FetchOutcome::TransportError;
    if (s == "skipped")
        return FetchOutcome::Skipped;
    return FetchOutcome::Completed;
}

UtcTime now_utc()
{
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::string media_type(std::string_view content_type)
{
    auto semi = content_type.find(';');
    auto v = content_type.substr(0, semi);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back())))
        v.remove_suffix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front())))
        v.remove_prefix(1);
    std::string out(v);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n\f");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n\f");
    return std::string(s.substr(b, e - b + 1));
}

ResourceFetch fetch_record(const std::string& request_uri, const FollowResult& result, Trigger trigger, Phase phase)
{
    ResourceFetch f;
    f.request_uri = request_uri;
    f.chain = result.chain;
    f.trigger = trigger;
    f.phase = phase;
    if (result.transport_error) {
        f.outcome = FetchOutcome::TransportError;
        f.note = result.error;
    } else {
        f.content_type = media_type(result.final_response.header("Content-Type"));
        f.bytes = result.final_response.body.size();
    }
    return f;
}

ResourceFetch skipped_record(const std::string& reference, Trigger trigger, std::string note)
{
    ResourceFetch f;
    f.request_uri = reference;
    f.chain = {{0, reference}};
    f.trigger = trigger;
    f.outcome = FetchOutcome::Skipped;
    f.note = std::move(note);
    return f;
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn)
{
    auto count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (count <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < count; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++)
                fn(i);
        });
}

/// What a discovered reference is resolved against: the original URI of a
/// replayed document, or the literal URI of an archive-hosted one.
struct RefBase {
    std::string resolve_against;
    std::optional<ReplayUri> replay;
};

RefBase base_for(const std::string& request_uri, const ArchiveEndpoint& endpoint)
{
    try {
        auto replay = to_replay_uri(request_uri, endpoint);
        return {replay.original().str(), replay};
    } catch (const Error&) {
        return {request_uri, std::nullopt};
    }
}

/// Request URI for `reference` found in a document at `base`. Archive-hosted
/// URIs are requested as they are (replay URIs re-stamped to the memento's
/// timestamp); everything else is rewritten into the archive.
std::string plan_request(const RefBase& base, const ReplayUri& memento, const std::string& reference,
                         const ArchiveEndpoint& endpoint)
{
    auto parts = split_uri(resolve_reference(base.resolve_against, reference));
    parts.fragment.reset();
    auto resolved = recompose(parts);
    if (classify_host(resolved, endpoint) != HostClass::Live) {
        try {
            auto [ts, original] = parse_replay_uri(resolved, endpoint);
            return ReplayUri(endpoint, memento.timestamp(), std::move(original)).str();
        } catch (const Error&) {
            return resolved;
        }
    }
    if (base.replay)
        return rewrite_subresource(*base.replay, reference, endpoint).str();
    if (!OriginalUri::is_valid(resolved))
        throw Error(Errc::UnresolvableReference, "reference does not resolve to an http(s) URI: " + reference);
    return ReplayUri(endpoint, memento.timestamp(), OriginalUri::parse(resolved)).str();
}

struct Pending {
    std::string uri;
    Trigger trigger;
    bool stylesheet;
};

/// Turns extracted references into pending requests, recording skipped ones
/// and dropping URIs already seen in this capture.
void plan_refs(const std::vector<ExtractedRef>& refs, const RefBase& base, Trigger trigger, const ReplayUri& memento,
               const ArchiveEndpoint& endpoint, std::set<std::string>& seen, std::vector<Pending>& pending,
               std::vector<ResourceFetch>& skipped)
{
    for (const auto& ref : refs) {
        auto reference = trim(ref.reference);
        if (is_unfetchable_reference(reference)) {
            if (seen.insert("skip:" + reference).second)
                skipped.push_back(skipped_record(reference, trigger, "unfetchable reference (" + ref.context + ")"));
            continue;
        }
        std::string uri;
        try {
            uri = plan_request(base, memento, reference, endpoint);
        } catch (const Error& err) {
            if (seen.insert("skip:" + reference).second)
                skipped.push_back(skipped_record(reference, trigger, err.what()));
            continue;
        }
        if (seen.insert(uri).second)
            pending.push_back({uri, trigger, ref.stylesheet});
    }
}

std::set<std::string> markup_request_uris(const ReplayUri& memento, const ArchiveEndpoint& endpoint,
                                          const HttpClient& client, int max_redirects)
{
    std::set<std::string> uris;
    auto page = follow_redirects(client, memento.str(), max_redirects);
    if (page.transport_error || page.final_response.status >= 300)
        return uris;
    std::set<std::string> seen;
    std::vector<Pending> pending;
    std::vector<ResourceFetch> skipped;
    plan_refs(scan_html(page.final_response.body).refs, base_for(memento.str(), endpoint), Trigger::Markup,
              memento, endpoint, seen, pending, skipped);
    for (auto& p : pending)
        uris.insert(std::move(p.uri));
    return uris;
}

}  // namespace

const ResourceFetch* CaptureLog::page_fetch() const noexcept
{
    for (const auto& f : fetches)
        if (f.phase == Phase::Page)
            return &f;
    return nullptr;
}

std::set<std::string> CaptureLog::subresource_uris() const
{
    std::set<std::string> out;
    for (const auto& f : fetches)
        if (f.phase == Phase::Subresource && f.outcome != FetchOutcome::Skipped)
            out.insert(f.request_uri);
    return out;
}

CaptureLog capture_static(const ReplayUri& memento, const ArchiveEndpoint& endpoint, const HttpClient& client,
                          const CaptureConfig& config)
{
    CaptureLog log{memento};
    log.engine = Engine::Static;
    log.scripting = false;
    log.started = now_utc();
    log.settle_ms = 0;
    log.page_timeout_ms = config.page_timeout_ms;

    auto page = follow_redirects(client, memento.str(), config.max_redirects);
    if (page.transport_error)
        throw Error(Errc::NetworkError, "page fetch failed: " + page.error);
    log.fetches.push_back(fetch_record(memento.str(), page, Trigger::Markup, Phase::Page));
    const int page_status = page.final_response.status;
    log.page_failed = page_status >= 400 || is_redirect(page_status);

    std::set<std::string> seen{memento.str()};
    std::vector<Pending> pending;
    std::vector<ResourceFetch> skipped;
    if (page_status >= 200 && page_status < 300)
        plan_refs(scan_html(page.final_response.body).refs, base_for(memento.str(), endpoint), Trigger::Markup,
                  memento, endpoint, seen, pending, skipped);
    for (auto& s : skipped)
        log.fetches.push_back(std::move(s));

    // Breadth-first waves: markup references, then whatever the fetched
    // stylesheets pull in, and so on.
    while (!pending.empty()) {
        std::vector<FollowResult> results(pending.size());
        parallel_for(pending.size(), config.parallel, [&](std::size_t i) {
            results[i] = follow_redirects(client, pending[i].uri, config.max_redirects);
        });

        std::vector<Pending> next;
        std::vector<ResourceFetch> next_skipped;
        for (std::size_t i = 0; i < pending.size(); ++i) {
            auto record = fetch_record(pending[i].uri, results[i], pending[i].trigger, Phase::Subresource);
            const auto& res = results[i].final_response;
            bool is_css = pending[i].stylesheet || record.content_type == "text/css";
            if (!results[i].transport_error && is_css && res.status >= 200 && res.status < 300)
                plan_refs(scan_css(res.body), base_for(pending[i].uri, endpoint), Trigger::Stylesheet, memento,
                          endpoint, seen, next, next_skipped);
            log.fetches.push_back(std::move(record));
        }
        for (auto& s : next_skipped)
            log.fetches.push_back(std::move(s));
        pending = std::move(next);
    }

    log.finished = now_utc();
    return log;
}

CaptureLog capture_scripted(const ReplayUri& memento, const ArchiveEndpoint& endpoint, bool scripting,
                            BrowserBridge& bridge, const HttpClient& client, const CaptureConfig& config)
{
    CaptureLog log{memento};
    log.engine = Engine::Scripted;
    log.scripting = scripting;
    log.started = now_utc();
    log.settle_ms = config.settle_ms;
    log.page_timeout_ms = config.page_timeout_ms;

    std::set<std::string> markup;
    try {
        markup = markup_request_uris(memento, endpoint, client, config.max_redirects);
    } catch (const Error&) {
        // the browser's own view still decides the log
    }

    BridgeLoadRequest request;
    request.url = memento.str();
    request.scripting = scripting;
    request.settle_ms = config.settle_ms;
    request.timeout_ms = config.page_timeout_ms;
    request.max_redirects = config.max_redirects;
    request.screenshot = config.screenshot_dir.has_value();
    auto result = bridge.load(request);

    std::set<std::string> seen;
    bool have_page = false;
    for (auto& observed : result.requests) {
        if (!seen.insert(observed.uri).second)
            continue;
        ResourceFetch f;
        f.request_uri = observed.uri;
        f.content_type = media_type(observed.content_type);
        f.bytes = observed.bytes;

        // keep the chain well-formed: stop at the first non-3xx hop, cap length
        for (const auto& hop : observed.chain) {
            if (static_cast<int>(f.chain.size()) >= config.max_redirects)
                break;
            f.chain.push_back(hop);
            if (!is_redirect(hop.status))
                break;
        }
        if (f.chain.empty())
            f.chain.push_back({0, observed.uri});
        if (is_unfetchable_reference(observed.uri)) {
            f.outcome = FetchOutcome::Skipped;
            f.note = "unfetchable reference";
        } else if (f.final_status() == 0) {
            f.outcome = FetchOutcome::TransportError;
            f.note = observed.error.value_or("no response");
        }

        if (!have_page && observed.uri == memento.str()) {
            have_page = true;
            f.phase = Phase::Page;
            f.trigger = Trigger::Markup;
            log.page_failed = f.outcome != FetchOutcome::Completed || f.final_status() >= 400;
            log.fetches.insert(log.fetches.begin(), std::move(f));
            continue;
        }
        f.phase = Phase::Subresource;
        if (markup.contains(observed.uri))
            f.trigger = Trigger::Markup;
        else if (observed.initiator == "stylesheet")
            f.trigger = Trigger::Stylesheet;
        else
            f.trigger = Trigger::ScriptRuntime;
        log.fetches.push_back(std::move(f));
    }
    if (!have_page)
        log.page_failed = true;

    if (result.screenshot_png && config.screenshot_dir) {
        std::filesystem::create_directories(*config.screenshot_dir);
        auto name = capture_log_filename(memento, Engine::Scripted, scripting);
        auto path = *config.screenshot_dir / (name.substr(0, name.size() - 5) + ".png");
        std::ofstream out(path, std::ios::binary);
        out.write(result.screenshot_png->data(), static_cast<std::streamsize>(result.screenshot_png->size()));
        log.screenshot = path.string();
    }

    log.finished = now_utc();
    return log;
}

namespace {

class StaticEngine final : public CaptureEngine {
public:
    StaticEngine(ArchiveEndpoint endpoint, std::shared_ptr<const HttpClient> client, CaptureConfig config)
        : endpoint_(std::move(endpoint)), client_(std::move(client)), config_(std::move(config))
    {
    }
    Engine kind() const noexcept override { return Engine::Static; }
    CaptureLog capture(const ReplayUri& memento, bool scripting) override
    {
        if (scripting)
            throw Error(Errc::InvalidArgument, "the static engine cannot run with scripting on");
        return capture_static(memento, endpoint_, *client_, config_);
    }

private:
    ArchiveEndpoint endpoint_;
    std::shared_ptr<const HttpClient> client_;
    CaptureConfig config_;
};

class ScriptedEngine final : public CaptureEngine {
public:
    ScriptedEngine(ArchiveEndpoint endpoint, std::shared_ptr<const HttpClient> client,
                   std::shared_ptr<BrowserBridge> bridge, CaptureConfig config)
        : endpoint_(std::move(endpoint)),
          client_(std::move(client)),
          bridge_(std::move(bridge)),
          config_(std::move(config))
    {
    }
    Engine kind() const noexcept override { return Engine::Scripted; }
    CaptureLog capture(const ReplayUri& memento, bool scripting) override
    {
        if (!bridge_)
            throw Error(Errc::BridgeUnavailable, "no browser bridge configured");
        return capture_scripted(memento, endpoint_, scripting, *bridge_, *client_, config_);
    }

private:
    ArchiveEndpoint endpoint_;
    std::shared_ptr<const HttpClient> client_;
    std::shared_ptr<BrowserBridge> bridge_;
    CaptureConfig config_;
};

}  // namespace

std::unique_ptr<CaptureEngine> make_static_engine(ArchiveEndpoint endpoint, std::shared_ptr<const HttpClient> client,
                                                  CaptureConfig config)
{
    return std::make_unique<StaticEngine>(std::move(endpoint), std::move(client), std::move(config));
}

std::unique_ptr<CaptureEngine> make_scripted_engine(ArchiveEndpoint endpoint,
                                                    std::shared_ptr<const HttpClient> client,
                                                    std::shared_ptr<BrowserBridge> bridge, CaptureConfig config)
{
    return std::make_unique<ScriptedEngine>(std::move(endpoint), std::move(client), std::move(bridge),
                                            std::move(config));
}

DifferentialReport diff_captures(const CaptureLog& on, const CaptureLog& off)
{
    if (!(on.memento == off.memento))
        throw Error(Errc::MementoMismatch, on.memento.str() + " vs " + off.memento.str());
    DifferentialReport report;
    auto a = on.subresource_uris();
    auto b = off.subresource_uris();
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(report.script_only, report.script_only.end()));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(),
                        std::inserter(report.noscript_only, report.noscript_only.end()));
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(report.shared, report.shared.end()));
    report.script_delta = report.script_only.size();
    report.degraded = on.page_fetch() == nullptr || off.page_fetch() == nullptr;
    return report;
}

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string capture_log_filename(const ReplayUri& memento, Engine engine, bool scripting)
{
    return memento.timestamp() + "_" + sha256_hex(memento.original().str()).substr(0, 12) + "_"
           + std::string(to_string(engine)) + "_" + (scripting ? "on" : "off") + ".json";
}

std::string capture_log_filename(const CaptureLog& log)
{
    return capture_log_filename(log.memento, log.engine, log.scripting);
}

ordered_json to_json(const CaptureLog& log)
{
    ordered_json fetches = ordered_json::array();
    for (const auto& f : log.fetches) {
        ordered_json chain = ordered_json::array();
        for (const auto& hop : f.chain)
            chain.push_back(ordered_json{{"status", hop.status}, {"uri", hop.uri}});
        fetches.push_back(ordered_json{{"request_uri", f.request_uri},
                                       {"phase", to_string(f.phase)},
                                       {"trigger", to_string(f.trigger)},
                                       {"outcome", to_string(f.outcome)},
                                       {"final_status", f.final_status()},
                                       {"content_type", f.content_type},
                                       {"bytes", f.bytes},
                                       {"chain", chain},
                                       {"note", f.note}});
    }
    return ordered_json{{"schema_version", "1"},
                        {"memento", log.memento.str()},
                        {"timestamp", log.memento.timestamp()},
                        {"original", log.memento.original().str()},
                        {"engine", to_string(log.engine)},
                        {"scripting", log.scripting ? "on" : "off"},
                        {"settle_ms", log.settle_ms},
                        {"page_timeout_ms", log.page_timeout_ms},
                        {"started", format_iso8601(log.started)},
                        {"finished", format_iso8601(log.finished)},
                        {"page_failed", log.page_failed},
                        {"screenshot", log.screenshot ? ordered_json(*log.screenshot) : ordered_json(nullptr)},
                        {"fetches", fetches}};
}

CaptureLog capture_log_from_json(const json& doc, const ArchiveEndpoint& endpoint)
{
    try {
        CaptureLog log{to_replay_uri(doc.at("memento").get<std::string>(), endpoint)};
        log.engine = engine_from_string(doc.at("engine").get<std::string>());
        log.scripting = doc.at("scripting").get<std::string>() == "on";
        log.settle_ms = doc.value("settle_ms", 0);
        log.page_timeout_ms = doc.value("page_timeout_ms", 0);
        log.started = parse_iso8601(doc.at("started").get<std::string>());
        log.finished = parse_iso8601(doc.at("finished").get<std::string>());
        log.page_failed = doc.value("page_failed", false);
        if (doc.contains("screenshot") && doc["screenshot"].is_string())
            log.screenshot = doc["screenshot"].get<std::string>();
        for (const auto& item : doc.at("fetches")) {
            ResourceFetch f;
            f.request_uri = item.at("request_uri").get<std::string>();
            f.phase = item.at("phase").get<std::string>() == "page" ? Phase::Page : Phase::Subresource;
            f.trigger = trigger_from_string(item.at("trigger").get<std::string>());
            f.outcome = outcome_from_string(item.at("outcome").get<std::string>());
            f.content_type = item.value("content_type", "");
            f.bytes = item.value("bytes", std::uint64_t{0});
            f.note = item.value("note", "");
            for (const auto& hop : item.at("chain"))
                f.chain.push_back({hop.at("status").get<int>(), hop.at("uri").get<std::string>()});
            if (f.chain.empty())
                throw Error(Errc::InvalidArgument, "fetch with empty chain: " + f.request_uri);
            log.fetches.push_back(std::move(f));
        }
        return log;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("malformed capture log: ") + e.what());
    }
}

void write_capture_log(const CaptureLog& log, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    auto path = dir / capture_log_filename(log);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(Errc::IoError, "cannot write " + tmp.string());
        out << to_json(log).dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

CaptureLog read_capture_log(const std::filesystem::path& file, const ArchiveEndpoint& endpoint)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error(Errc::IoError, "cannot read " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, file.string() + ": " + e.what());
    }
    return capture_log_from_json(doc, endpoint);
}

}  // namespace memaudit
