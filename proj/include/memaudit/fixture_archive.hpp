#pragma once

#include "memaudit/bridge.hpp"
#include "memaudit/endpoint.hpp"
#include "memaudit/http.hpp"
#include "memaudit/uri.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace memaudit {

/// One servable resource. A 3xx status redirects either to another archived
/// original (`to`, re-stamped at the request's timestamp) or straight to a
/// live URI (`to_live`).
struct FixtureResource {
    int status = 200;
    std::string content_type = "application/octet-stream";
    std::string body;
    std::optional<std::string> to;
    std::optional<std::string> to_live;
};

struct PageBundle {
    std::string html;
    std::map<std::string, FixtureResource> resources;  // absolute original URI -> resource
    std::set<std::string> script_loaded;               // originals only a script requests
    std::set<std::string> leaks;                       // originals whose replay ends up on a live host
};

struct FixtureSite {
    std::string name;  // directory name
    OriginalUri original;
    std::map<std::string, std::string> mementos;  // 14-digit timestamp -> bundle name
    std::map<std::string, PageBundle> bundles;
    bool inject_chrome = true;  // replayed pages link the archive banner stylesheet
    bool robots_blocked = false;
    int robots_status = 403;
    std::string robots_body = "Blocked by robots.txt";
    std::map<std::string, FixtureResource> live;  // absolute live URI -> resource
};

struct FixtureManifest {
    std::map<std::string, FixtureSite> sites;  // original URI string -> site

    const FixtureSite* find_site(std::string_view original) const;
    const FixtureSite& site_named(std::string_view name) const;
    /// Every host the live maps serve.
    std::set<std::string> live_hosts() const;
};

/// Parses one site directory (manifest.json plus body files).
/// Throws Error{InvalidManifest}.
FixtureSite load_fixture_site(const std::filesystem::path& site_dir);

/// Loads every subdirectory holding a manifest.json, or `dir` itself when it
/// is a site directory. Validates the result.
FixtureManifest load_fixture_manifest(const std::filesystem::path& dir);

/// Throws Error{InvalidManifest} when a memento names a missing bundle, a
/// redirect chain does not end in a terminal status, or a script-loaded URI
/// is neither a resource nor a leak.
void validate_manifest(const FixtureManifest& manifest);

struct FixtureServerOptions {
    std::string archive_host = "archive.example";
    std::string bind_address = "127.0.0.1";
    int port = 0;  // 0 picks a free port
};

/// A miniature Memento archive with replay, served over HTTP.
///
///   GET /list/timemap/link/{original}   link-format TimeMap
///   GET /timegate/{original}            302 to the memento nearest Accept-Datetime
///   GET /web/{timestamp}/{uri}          replay (also /memento/{timestamp}/{uri})
///   GET /static/banner.css              replay chrome
///
/// Requests whose Host is not the archive host are answered from the sites'
/// live maps, so pointing live hostnames at this server through
/// HttpOptions::resolve makes leaks observable without a network.
class FixtureArchive {
public:
    explicit FixtureArchive(FixtureManifest manifest, FixtureServerOptions options = {});
    ~FixtureArchive();

    FixtureArchive(const FixtureArchive&) = delete;
    FixtureArchive& operator=(const FixtureArchive&) = delete;

    /// Binds and starts serving on a background thread. Throws PortInUse.
    void start();
    void stop();
    int port() const noexcept { return port_; }

    const FixtureManifest& manifest() const noexcept { return manifest_; }
    std::string archive_base() const { return "http://" + options_.archive_host; }
    ArchiveEndpoint endpoint() const;
    /// archive host, site hosts and live hosts -> this server.
    std::map<std::string, std::string> resolve_map() const;
    HttpOptions client_options() const;

    /// The response for a request; the server is a thin wrapper around this.
    HttpResponse handle(std::string_view host, std::string_view target,
                        const std::map<std::string, std::string>& headers = {}) const;

private:
    HttpResponse handle_archive(std::string_view target, const std::map<std::string, std::string>& headers) const;
    HttpResponse handle_live(std::string_view host, std::string_view target) const;
    HttpResponse timemap_response(const FixtureSite& site) const;
    HttpResponse timegate_response(const FixtureSite& site, const std::map<std::string, std::string>& headers) const;
    HttpResponse replay_response(const std::string& timestamp, const std::string& uri) const;
    std::string replay_uri(std::string_view timestamp, std::string_view original) const;

    FixtureManifest manifest_;
    FixtureServerOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

/// Test-support browser: loads the page like the static engine and, with
/// scripting on, also runs a tiny script interpreter that finds URLs assigned
/// to `.src` or passed to `fetch(` as string literals (optionally joined with
/// `+`). Script URLs resolve against the document URL and are requested as
/// written, so absolute live URLs leak as they would in a real browser.
class StubBridge : public BrowserBridge {
public:
    StubBridge(ArchiveEndpoint endpoint, std::shared_ptr<const HttpClient> client);
    BridgeLoadResult load(const BridgeLoadRequest& request) override;

private:
    ArchiveEndpoint endpoint_;
    std::shared_ptr<const HttpClient> client_;
};

/// URL literals a script would request, in source order.
std::vector<std::string> script_request_literals(std::string_view script);

/// Serves any BrowserBridge over the JSON bridge protocol.
class BridgeServer {
public:
    explicit BridgeServer(std::shared_ptr<BrowserBridge> bridge, std::string bind_address = "127.0.0.1",
                          int port = 0);
    ~BridgeServer();

    BridgeServer(const BridgeServer&) = delete;
    BridgeServer& operator=(const BridgeServer&) = delete;

    /// Extra latency before each /load answer.
    void set_response_delay(std::chrono::milliseconds delay) { delay_ = delay; }
    void start();
    void stop();
    int port() const noexcept { return port_; }

private:
    std::shared_ptr<BrowserBridge> bridge_;
    std::string bind_address_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    std::chrono::milliseconds delay_{0};
};

}  // namespace memaudit
