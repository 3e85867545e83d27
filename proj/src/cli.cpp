#include "memaudit/cli.hpp"

#include "memaudit/audit.hpp"
#include "memaudit/error.hpp"
#include "memaudit/fixture_archive.hpp"
#include "memaudit/memento_client.hpp"

#include <csignal>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <pthread.h>

#ifndef MEMAUDIT_FIXTURE_DIR
#define MEMAUDIT_FIXTURE_DIR "fixtures"
#endif

namespace memaudit {

namespace {

struct Options {
    std::string endpoint_preset;
    std::string timemap_template;
    std::string replay_template;
    std::vector<std::string> archive_hosts;
    std::vector<std::string> chrome_prefixes;
    std::string fixture_dir = MEMAUDIT_FIXTURE_DIR;
    std::string interval = "1y";
    bool fixed_grid = false;
    std::string engine = "static";
    std::string scripting;
    double drop_threshold = kDefaultDropThreshold;
    int sustain_window = kDefaultSustainWindow;
    std::string cache_dir = ".memento-audit-cache";
    std::string out_dir = "audit-out";
    int settle_ms = 3000;
    int timeout_s = 30;
    int delay_ms = 500;
    int per_host = 2;
    int max_redirects = 10;
    int jobs = 4;
    std::vector<std::string> resolve;
    std::string bridge;
    std::string robots_marker = std::string(kDefaultRobotsMarker);
    std::string user_agent = default_user_agent();
};

/// Everything a command needs once the options are resolved.
struct Context {
    AuditConfig config;
    std::unique_ptr<FixtureArchive> fixture;
    std::shared_ptr<const HttpClient> client;
    std::shared_ptr<BrowserBridge> bridge;
};

ArchiveEndpoint wayback_endpoint()
{
    ArchiveEndpoint ep;
    ep.timemap_template = "https://web.archive.org/web/timemap/link/{original}";
    ep.replay_template = "https://web.archive.org/web/{timestamp}/{original}";
    ep.archive_hosts = {"web.archive.org"};
    ep.replay_chrome_prefixes = {"/_static/", "/static/"};
    return ep;
}

Context make_context(const Options& o, bool delay_given)
{
    Context ctx;
    auto& c = ctx.config;
    c.endpoint_preset = o.endpoint_preset;
    if (o.endpoint_preset == "fixture") {
        c.fixture_dir = o.fixture_dir;
        ctx.fixture = std::make_unique<FixtureArchive>(load_fixture_manifest(o.fixture_dir));
        ctx.fixture->start();
        c.endpoint = ctx.fixture->endpoint();
    } else if (o.endpoint_preset == "wayback") {
        c.endpoint = wayback_endpoint();
    } else if (!o.endpoint_preset.empty()) {
        throw Error(Errc::InvalidArgument, "unknown endpoint preset \"" + o.endpoint_preset + "\" (fixture|wayback)");
    }
    if (!o.timemap_template.empty())
        c.endpoint.timemap_template = o.timemap_template;
    if (!o.replay_template.empty())
        c.endpoint.replay_template = o.replay_template;
    if (c.endpoint.timemap_template.empty() || c.endpoint.replay_template.empty())
        throw Error(Errc::InvalidArgument,
                    "no archive endpoint: pass --endpoint fixture|wayback or --timemap-template and --replay-template");
    for (const auto& h : o.archive_hosts)
        c.endpoint.archive_hosts.insert(host_of("http://" + h + "/"));
    if (c.endpoint.archive_hosts.empty())
        c.endpoint.archive_hosts.insert(c.endpoint.replay_host());
    for (const auto& p : o.chrome_prefixes)
        c.endpoint.replay_chrome_prefixes.insert(p);

    c.interval = Interval::parse(o.interval);
    c.mode = o.fixed_grid ? AnchorMode::FixedGrid : AnchorMode::Drifting;
    c.engine = engine_from_string(o.engine);
    if (o.scripting.empty())
        c.scripting = c.engine == Engine::Static ? ScriptingModes::Off : ScriptingModes::Both;
    else
        c.scripting = scripting_modes_from_string(o.scripting);
    c.drop_threshold = o.drop_threshold;
    c.sustain_window = o.sustain_window;
    c.timeout_s = o.timeout_s;
    c.per_host = o.per_host;
    c.delay_ms = (o.endpoint_preset == "fixture" && !delay_given) ? 0 : o.delay_ms;
    c.max_redirects = o.max_redirects;
    c.settle_ms = o.settle_ms;
    c.jobs = o.jobs;
    c.robots_marker = o.robots_marker;
    c.user_agent = o.user_agent;
    c.bridge = o.bridge;
    c.cache_dir = o.cache_dir;
    c.out_dir = o.out_dir;
    for (const auto& r : o.resolve) {
        auto eq = r.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == r.size())
            throw Error(Errc::InvalidArgument, "--resolve expects host=ip:port, got \"" + r + "\"");
        c.resolve[r.substr(0, eq)] = r.substr(eq + 1);
    }
    c.validate();

    auto http = c.http_options();
    if (ctx.fixture)
        for (const auto& [host, addr] : ctx.fixture->resolve_map())
            http.resolve.emplace(host, addr);
    auto gate = std::make_shared<HostGate>(c.per_host, std::chrono::milliseconds(c.delay_ms));
    ctx.client = std::make_shared<HttpClient>(http, gate);

    if (c.bridge == "stub") {
        ctx.bridge = std::make_shared<StubBridge>(c.endpoint, ctx.client);
    } else if (!c.bridge.empty()) {
        auto colon = c.bridge.rfind(':');
        int port = 0;
        if (colon != std::string::npos) {
            try {
                port = std::stoi(c.bridge.substr(colon + 1));
            } catch (const std::exception&) {
                port = 0;
            }
        }
        if (port <= 0)
            throw Error(Errc::InvalidArgument, "--bridge expects host:port or \"stub\", got \"" + c.bridge + "\"");
        ctx.bridge = std::make_shared<HttpBrowserBridge>(c.bridge.substr(0, colon), port);
    }
    return ctx;
}

std::unique_ptr<CaptureEngine> make_engine(const Context& ctx)
{
    const auto& c = ctx.config;
    if (c.engine == Engine::Static)
        return make_static_engine(c.endpoint, ctx.client, c.capture_config());
    if (!ctx.bridge)
        throw Error(Errc::BridgeUnavailable, "the scripted engine needs a browser bridge (--bridge)");
    return make_scripted_engine(c.endpoint, ctx.client, ctx.bridge, c.capture_config());
}

std::string signed_seconds(Seconds s)
{
    return fmt::format("{:+}s", s.count());
}

int cmd_timemap(const Context& ctx, const std::string& uri, std::ostream& out)
{
    auto tm = fetch_timemap(*ctx.client, OriginalUri::parse(uri), ctx.config.endpoint, ctx.config.robots_marker);
    out << serialize_link_format(tm);
    return 0;
}

int cmd_sample(const Context& ctx, const std::string& uri, std::ostream& out)
{
    auto tm = fetch_timemap(*ctx.client, OriginalUri::parse(uri), ctx.config.endpoint, ctx.config.robots_marker);
    if (tm.mementos.empty())
        throw Error(Errc::NotArchived, "TimeMap for " + uri + " lists no mementos");
    auto sample = select_annual(tm, ctx.config.interval, ctx.config.mode);
    for (const auto& s : sample.selections)
        out << format_iso8601(s.chosen.datetime) << "  " << s.chosen.uri << "  target=" << format_iso8601(s.target)
            << " deviation=" << signed_seconds(s.deviation) << "\n";
    return 0;
}

int cmd_capture(const Context& ctx, const std::string& uri, std::ostream& out)
{
    auto memento = to_replay_uri(uri, ctx.config.endpoint);
    auto engine = make_engine(ctx);
    int code = 0;
    for (bool scripting : ctx.config.scripting_runs()) {
        auto log = engine->capture(memento, scripting);
        write_capture_log(log, ctx.config.out_dir);
        std::map<FetchClass, int> counts;
        for (const auto& f : log.fetches)
            ++counts[classify_fetch(f, ctx.config.endpoint)];
        out << (std::filesystem::path(ctx.config.out_dir) / capture_log_filename(log)).string() << "  "
            << log.fetches.size() << " fetches";
        for (const auto& [cls, n] : counts)
            out << " " << to_string(cls) << "=" << n;
        out << (log.page_failed ? "  PAGE FAILED" : "") << "\n";
        if (log.page_failed)
            code = 1;
    }
    return code;
}

void print_outcome(const AuditOutcome& outcome, const std::filesystem::path& out_dir, std::ostream& out)
{
    const auto& r = outcome.report;
    out << "report: " << (out_dir / "report.json").string() << "\n";
    out << "series: " << (out_dir / "series.csv").string() << " (" << r.series.points.size() << " points)\n";
    for (const auto& f : r.drops)
        out << fmt::format("drop: {}-{} baseline {} mean {} ratio {:.3f}\n", f.start_year, f.end_year, f.baseline,
                           f.dropped_value, f.ratio);
    if (r.drops_insufficient_data)
        out << "drop detection: insufficient data\n";
    out << "leaks: " << r.leaks.size() << "\n";
    for (const auto& g : r.gaps)
        out << "gap: " << g.memento << ": " << g.reason << "\n";
}

class ArgvBuffer {
public:
    explicit ArgvBuffer(const std::vector<std::string>& args)
    {
        for (const auto& a : args)
            ptrs_.push_back(a.c_str());
    }
    int argc() const { return static_cast<int>(ptrs_.size()); }
    const char* const* argv() const { return ptrs_.data(); }

private:
    std::vector<const char*> ptrs_;
};

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Audit how completely a web archive preserves a site over time.", "memento-audit"};
    app.set_version_flag("--version", std::string(MEMAUDIT_VERSION));
    app.set_config("--config", "", "key=value file mirroring the long options; flags win");
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--endpoint", o.endpoint_preset, "Endpoint preset: fixture (built-in fixture archive) or wayback");
    app.add_option("--timemap-template", o.timemap_template, "TimeMap URI template with an {original} slot");
    app.add_option("--replay-template", o.replay_template,
                   "Replay URI template with {timestamp} and {original} slots");
    app.add_option("--archive-host", o.archive_hosts, "Hostname served by the archive (repeatable)");
    app.add_option("--chrome-prefix", o.chrome_prefixes, "Replay chrome path prefix on an archive host (repeatable)");
    app.add_option("--fixture-dir", o.fixture_dir, "Fixture sites for --endpoint fixture")->capture_default_str();
    app.add_option("--interval", o.interval, "Sampling interval: 1y, 6mo, 30d, 12h, 90s")->capture_default_str();
    app.add_flag("--fixed-grid", o.fixed_grid, "Targets on a fixed grid from the first memento instead of drifting");
    app.add_option("--engine", o.engine, "Capture engine")
        ->check(CLI::IsMember({"static", "scripted"}))
        ->capture_default_str();
    app.add_option("--scripting", o.scripting, "Scripting runs (default off for static, both for scripted)")
        ->check(CLI::IsMember({"on", "off", "both"}));
    app.add_option("--drop-threshold", o.drop_threshold, "Drop threshold as a fraction of the baseline")
        ->capture_default_str();
    app.add_option("--sustain-window", o.sustain_window, "Minimum consecutive low points")->capture_default_str();
    app.add_option("--cache-dir", o.cache_dir, "Capture log cache")
        ->envname("MEMENTO_AUDIT_CACHE")
        ->capture_default_str();
    app.add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
    app.add_option("--settle-ms", o.settle_ms, "Quiescence wait after load (scripted engine)")->capture_default_str();
    app.add_option("--timeout-s", o.timeout_s, "Per-request and per-page timeout")->capture_default_str();
    auto* delay = app.add_option("--delay-ms", o.delay_ms, "Politeness delay between requests to one host "
                                                           "(0 with --endpoint fixture)")
                      ->capture_default_str();
    app.add_option("--per-host", o.per_host, "Concurrent requests per host")->capture_default_str();
    app.add_option("--max-redirects", o.max_redirects, "Redirect chain limit")->capture_default_str();
    app.add_option("--jobs", o.jobs, "Mementos captured in parallel")->capture_default_str();
    app.add_option("--resolve", o.resolve, "host=ip:port connection override (repeatable)");
    app.add_option("--bridge", o.bridge, "Browser bridge host:port, or \"stub\" for the built-in test bridge");
    app.add_option("--robots-marker", o.robots_marker, "Body marker of a robots.txt block page")
        ->capture_default_str();
    app.add_option("--user-agent", o.user_agent, "User-Agent header")->capture_default_str();

    std::string uri;
    auto* timemap = app.add_subcommand("timemap", "Fetch and print a TimeMap");
    timemap->add_option("uri", uri, "Original URI")->required();
    auto* sample = app.add_subcommand("sample", "Print the interval sample of a TimeMap");
    sample->add_option("uri", uri, "Original URI")->required();
    auto* capture = app.add_subcommand("capture", "Capture one memento and write its log to --out-dir");
    capture->add_option("memento", uri, "Memento URI (replay or API form)")->required();
    auto* audit = app.add_subcommand("audit", "Full pipeline: report.json and series.csv in --out-dir");
    audit->add_option("uri", uri, "Original URI")->required();
    auto* report = app.add_subcommand("report", "Rebuild the report from cached capture logs only");
    std::string report_dir;
    std::optional<std::string> report_site;
    report->add_option("cache", report_dir, "Cache directory (default --cache-dir)");
    report->add_option("--site", report_site, "Audited site to report when the cache holds several");

    ArgvBuffer argv(args);
    try {
        app.parse(argv.argc(), argv.argv());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (report->parsed()) {
            auto dir = report_dir.empty() ? o.cache_dir : report_dir;
            auto outcome = run_report(dir, report_site, o.out_dir);
            print_outcome(outcome, o.out_dir, out);
            return outcome.exit_code;
        }
        auto ctx = make_context(o, delay->count() > 0);
        if (timemap->parsed())
            return cmd_timemap(ctx, uri, out);
        if (sample->parsed())
            return cmd_sample(ctx, uri, out);
        if (capture->parsed())
            return cmd_capture(ctx, uri, out);
        auto outcome = run_audit(OriginalUri::parse(uri), ctx.config, ctx.client, ctx.bridge, err);
        print_outcome(outcome, ctx.config.out_dir, out);
        return outcome.exit_code;
    } catch (const Error& e) {
        err << "memento-audit: error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "memento-audit: error: " << e.what() << "\n";
        return 2;
    }
}

int fixture_archive_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Serve fixture sites as a miniature Memento archive.", "fixture-archive"};
    app.require_subcommand(1);
    auto* serve = app.add_subcommand("serve", "Serve a fixture directory");
    std::string dir;
    FixtureServerOptions options;
    int bridge_port = -1;
    serve->add_option("dir", dir, "Fixture directory (site directories with manifest.json)")->required();
    serve->add_option("--port", options.port, "Port to listen on (0 picks one)")->capture_default_str();
    serve->add_option("--bind", options.bind_address, "Address to bind")->capture_default_str();
    serve->add_option("--archive-host", options.archive_host, "Hostname the archive answers to")
        ->capture_default_str();
    serve->add_option("--bridge-port", bridge_port, "Also serve the stub browser bridge on this port");

    ArgvBuffer argv(args);
    try {
        app.parse(argv.argc(), argv.argv());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        // keep SIGINT/SIGTERM for sigwait below; server threads inherit the mask
        sigset_t signals;
        sigemptyset(&signals);
        sigaddset(&signals, SIGINT);
        sigaddset(&signals, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &signals, nullptr);

        FixtureArchive archive(load_fixture_manifest(dir), options);
        archive.start();
        out << "fixture archive: " << archive.manifest().sites.size() << " sites on " << options.bind_address << ":"
            << archive.port() << " as " << archive.archive_base() << "\n";
        for (const auto& [host, addr] : archive.resolve_map())
            out << "  resolve " << host << "=" << addr << "\n";

        std::unique_ptr<BridgeServer> bridge;
        if (bridge_port >= 0) {
            auto opts = archive.client_options();
            auto client = std::make_shared<HttpClient>(opts);
            bridge = std::make_unique<BridgeServer>(std::make_shared<StubBridge>(archive.endpoint(), client),
                                                    options.bind_address, bridge_port);
            bridge->start();
            out << "stub bridge on " << options.bind_address << ":" << bridge->port() << "\n";
        }
        out.flush();

        int sig = 0;
        sigwait(&signals, &sig);
        if (bridge)
            bridge->stop();
        archive.stop();
        return 0;
    } catch (const Error& e) {
        err << "fixture-archive: error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace memaudit
