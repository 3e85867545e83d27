#include "memaudit/fixture_archive.hpp"

#include "memaudit/capture.hpp"
#include "memaudit/error.hpp"
#include "memaudit/html_refs.hpp"
#include "memaudit/link_format.hpp"
#include "memaudit/time.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace memaudit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what)
{
    throw Error(Errc::InvalidManifest, where + ": " + what);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

/// Lower-cased scheme and host, "/" for an empty path, no fragment.
std::string normalize(std::string_view uri)
{
    auto parts = split_uri(uri);
    if (parts.scheme)
        parts.scheme = lower(*parts.scheme);
    if (parts.authority)
        parts.authority = lower(*parts.authority);
    if (parts.authority && parts.path.empty())
        parts.path = "/";
    parts.fragment.reset();
    return recompose(parts);
}

std::string read_file(const fs::path& path, const std::string& where)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        invalid(where, "cannot read " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string guess_type(std::string_view uri)
{
    auto path = path_of(uri);
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : lower(std::string(path.substr(dot + 1)));
    if (ext == "css")
        return "text/css";
    if (ext == "js")
        return "application/javascript";
    if (ext == "gif")
        return "image/gif";
    if (ext == "png")
        return "image/png";
    if (ext == "jpg" || ext == "jpeg")
        return "image/jpeg";
    if (ext == "json")
        return "application/json";
    if (ext == "swf")
        return "application/x-shockwave-flash";
    if (ext.empty() || ext == "html" || ext == "htm")
        return "text/html";
    return "application/octet-stream";
}

FixtureResource parse_resource(const std::string& key, const json& doc, const fs::path& dir, const std::string& where)
{
    if (!doc.is_object())
        invalid(where, "resource " + key + " is not an object");
    FixtureResource r;
    r.status = doc.value("status", 200);
    if (r.status < 100 || r.status > 599)
        invalid(where, "resource " + key + " has status " + std::to_string(r.status));
    r.content_type = doc.value("type", r.status == 200 ? guess_type(key) : std::string("text/html"));
    if (doc.contains("file"))
        r.body = read_file(dir / doc.at("file").get<std::string>(), where);
    else
        r.body = doc.value("body", r.status == 404 ? std::string("Not Found") : std::string{});
    if (doc.contains("to"))
        r.to = normalize(doc.at("to").get<std::string>());
    if (doc.contains("to_live"))
        r.to_live = normalize(doc.at("to_live").get<std::string>());
    bool redirect = r.status >= 300 && r.status < 400;
    if (redirect && !r.to.has_value() && !r.to_live.has_value())
        invalid(where, "redirect " + key + " has no target");
    if (redirect && r.to.has_value() && r.to_live.has_value())
        invalid(where, "redirect " + key + " names both to and to_live");
    if (!redirect && (r.to || r.to_live))
        invalid(where, "non-redirect " + key + " has a redirect target");
    return r;
}

std::map<std::string, FixtureResource> parse_resources(const json& doc, const fs::path& dir, const std::string& where)
{
    std::map<std::string, FixtureResource> out;
    if (!doc.is_object())
        invalid(where, "resources must be an object");
    for (const auto& [key, value] : doc.items()) {
        if (!OriginalUri::is_valid(key))
            invalid(where, "resource key is not an absolute http(s) URI: " + key);
        out[normalize(key)] = parse_resource(key, value, dir, where);
    }
    return out;
}

std::set<std::string> parse_uri_set(const json& doc, const std::string& where)
{
    std::set<std::string> out;
    for (const auto& v : doc) {
        auto s = v.get<std::string>();
        if (!OriginalUri::is_valid(s))
            invalid(where, "not an absolute http(s) URI: " + s);
        out.insert(normalize(s));
    }
    return out;
}

PageBundle parse_bundle(const std::string& name, const json& doc, const json& all, const fs::path& dir,
                        const std::string& where, int depth = 0)
{
    if (depth > 8)
        invalid(where, "resources_from nests too deeply at bundle " + name);
    PageBundle b;
    if (doc.contains("resources_from")) {
        auto base = doc.at("resources_from").get<std::string>();
        if (!all.contains(base))
            invalid(where, "bundle " + name + " inherits from unknown bundle " + base);
        b.resources = parse_bundle(base, all.at(base), all, dir, where, depth + 1).resources;
    }
    if (doc.contains("page"))
        b.html = read_file(dir / doc.at("page").get<std::string>(), where);
    else if (doc.contains("html"))
        b.html = doc.at("html").get<std::string>();
    else
        invalid(where, "bundle " + name + " has no page");
    if (doc.contains("resources"))
        for (auto& [k, v] : parse_resources(doc.at("resources"), dir, where))
            b.resources[k] = std::move(v);
    if (doc.contains("omit"))
        for (const auto& k : parse_uri_set(doc.at("omit"), where))
            b.resources.erase(k);
    if (doc.contains("script_loaded"))
        b.script_loaded = parse_uri_set(doc.at("script_loaded"), where);
    if (doc.contains("leaks"))
        b.leaks = parse_uri_set(doc.at("leaks"), where);
    return b;
}

/// Status a redirect chain finally lands on, or nullopt on a loop.
std::optional<int> terminal_status(const FixtureResource& start, const PageBundle& bundle, const FixtureSite& site,
                                   bool* reaches_live, bool start_live = false)
{
    const FixtureResource* r = &start;
    bool live = start_live;
    for (int steps = 0; steps < 32; ++steps) {
        if (r->status < 300 || r->status >= 400)
            break;
        if (r->to_live || live) {
            live = true;
            auto it = site.live.find(r->to_live ? *r->to_live : *r->to);
            if (it == site.live.end()) {
                r = nullptr;
                break;
            }
            r = &it->second;
        } else {
            auto it = bundle.resources.find(*r->to);
            if (it == bundle.resources.end()) {
                r = nullptr;
                break;
            }
            r = &it->second;
        }
    }
    if (reaches_live)
        *reaches_live = live;
    if (!r)
        return 404;
    if (r->status >= 300 && r->status < 400)
        return std::nullopt;
    return r->status;
}

const std::string kChromeCss = "#wm-banner { display: block; height: 40px; background: #222; color: #eee; }\n";

std::string inject_chrome(const std::string& html, const std::string& css_uri)
{
    const std::string tag = "<link rel=\"stylesheet\" type=\"text/css\" href=\"" + css_uri + "\">";
    auto low = lower(html);
    auto head = low.find("<head");
    if (head != std::string::npos) {
        auto close = low.find('>', head);
        if (close != std::string::npos)
            return html.substr(0, close + 1) + tag + html.substr(close + 1);
    }
    return tag + html;
}

HttpResponse make_response(int status, std::string content_type, std::string body)
{
    HttpResponse r;
    r.status = status;
    r.body = std::move(body);
    if (!content_type.empty())
        r.headers.emplace("content-type", std::move(content_type));
    return r;
}

HttpResponse not_found(std::string what)
{
    return make_response(404, "text/plain", "Not Found: " + what + "\n");
}

HttpResponse serve_resource(const FixtureResource& r)
{
    auto out = make_response(r.status, r.content_type, r.body);
    return out;
}

void run_server(httplib::Server& server, std::thread& thread, const std::string& bind, int& port, int wanted)
{
    // httplib's default also sets SO_REUSEPORT, which lets a second server share a taken port
    server.set_socket_options([](auto sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    if (wanted == 0) {
        port = server.bind_to_any_port(bind);
        if (port < 0)
            throw Error(Errc::PortInUse, "cannot bind any port on " + bind);
    } else {
        if (!server.bind_to_port(bind, wanted))
            throw Error(Errc::PortInUse, "port " + std::to_string(wanted) + " on " + bind + " is unavailable");
        port = wanted;
    }
    thread = std::thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
}

std::map<std::string, std::string> lowered_headers(const httplib::Request& req)
{
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : req.headers)
        out.emplace(lower(k), v);
    return out;
}

}  // namespace

const FixtureSite* FixtureManifest::find_site(std::string_view original) const
{
    auto it = sites.find(normalize(original));
    return it == sites.end() ? nullptr : &it->second;
}

const FixtureSite& FixtureManifest::site_named(std::string_view name) const
{
    for (const auto& [_, site] : sites)
        if (site.name == name)
            return site;
    throw Error(Errc::InvalidArgument, "no fixture site named " + std::string(name));
}

std::set<std::string> FixtureManifest::live_hosts() const
{
    std::set<std::string> out;
    for (const auto& [_, site] : sites) {
        for (const auto& [uri, _r] : site.live)
            out.insert(host_of(uri));
        for (const auto& [_b, bundle] : site.bundles)
            for (const auto& [_k, r] : bundle.resources)
                if (r.to_live)
                    out.insert(host_of(*r.to_live));
    }
    return out;
}

FixtureSite load_fixture_site(const fs::path& site_dir)
{
    const std::string where = (site_dir / "manifest.json").string();
    json doc;
    try {
        doc = json::parse(read_file(site_dir / "manifest.json", where));
    } catch (const json::exception& e) {
        invalid(where, e.what());
    }
    try {
        auto original = doc.at("original").get<std::string>();
        if (!OriginalUri::is_valid(original))
            invalid(where, "original is not an absolute http(s) URI: " + original);
        FixtureSite site{site_dir.filename().string(), OriginalUri::parse(normalize(original))};
        if (doc.contains("robots")) {
            const auto& robots = doc.at("robots");
            site.robots_blocked = robots.value("blocked", true);
            site.robots_status = robots.value("status", 403);
            site.robots_body = robots.value("body", site.robots_body);
        }
        site.inject_chrome = doc.value("chrome", true);
        if (doc.contains("live"))
            site.live = parse_resources(doc.at("live"), site_dir, where);
        const json bundles = doc.value("bundles", json::object());
        for (const auto& [name, b] : bundles.items())
            site.bundles.emplace(name, parse_bundle(name, b, bundles, site_dir, where));
        const json mementos = doc.value("mementos", json::object());
        for (const auto& [ts, bundle] : mementos.items())
            site.mementos.emplace(ts, bundle.get<std::string>());
        return site;
    } catch (const json::exception& e) {
        invalid(where, e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::InvalidManifest)
            throw;
        invalid(where, e.what());
    }
}

FixtureManifest load_fixture_manifest(const fs::path& dir)
{
    FixtureManifest manifest;
    std::vector<fs::path> site_dirs;
    std::error_code ec;
    if (fs::exists(dir / "manifest.json", ec)) {
        site_dirs.push_back(dir);
    } else {
        if (!fs::is_directory(dir, ec))
            throw Error(Errc::InvalidManifest, dir.string() + ": not a directory");
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_directory() && fs::exists(entry.path() / "manifest.json"))
                site_dirs.push_back(entry.path());
        std::sort(site_dirs.begin(), site_dirs.end());
    }
    if (site_dirs.empty())
        throw Error(Errc::InvalidManifest, dir.string() + ": no manifest.json found");
    for (const auto& d : site_dirs) {
        auto site = load_fixture_site(d);
        auto key = site.original.str();
        if (!manifest.sites.emplace(key, std::move(site)).second)
            throw Error(Errc::InvalidManifest, d.string() + ": duplicate site " + key);
    }
    validate_manifest(manifest);
    return manifest;
}

void validate_manifest(const FixtureManifest& manifest)
{
    for (const auto& [key, site] : manifest.sites) {
        const std::string where = "site " + site.name;
        if (site.mementos.empty() && !site.robots_blocked)
            invalid(where, "no mementos");
        for (const auto& [ts, bundle] : site.mementos) {
            if (!parse_timestamp14(ts))
                invalid(where, "bad memento timestamp " + ts);
            if (!site.bundles.contains(bundle))
                invalid(where, "memento " + ts + " names unknown bundle " + bundle);
        }
        for (const auto& [uri, r] : site.live) {
            if (r.to && !OriginalUri::is_valid(*r.to))
                invalid(where, "live redirect target is not absolute: " + *r.to);
            PageBundle none;
            if (!terminal_status(r, none, site, nullptr, true))
                invalid(where, "live redirect chain from " + uri + " never ends");
        }
        for (const auto& [name, bundle] : site.bundles) {
            for (const auto& [uri, r] : bundle.resources) {
                bool live = false;
                if (!terminal_status(r, bundle, site, &live))
                    invalid(where, "redirect chain from " + uri + " in bundle " + name + " never ends");
                if (live != bundle.leaks.contains(uri))
                    invalid(where, "resource " + uri + " in bundle " + name
                                       + (live ? " reaches a live host but is not listed in leaks"
                                               : " is listed in leaks but never reaches a live host"));
            }
            for (const auto& uri : bundle.leaks)
                if (!bundle.resources.contains(uri))
                    invalid(where, "leak " + uri + " in bundle " + name + " is not a resource");
            for (const auto& uri : bundle.script_loaded)
                if (!bundle.resources.contains(uri) && !bundle.leaks.contains(uri))
                    invalid(where, "script-loaded " + uri + " in bundle " + name + " is neither resource nor leak");
        }
    }
}

FixtureArchive::FixtureArchive(FixtureManifest manifest, FixtureServerOptions options)
    : manifest_(std::move(manifest)), options_(std::move(options))
{
    validate_manifest(manifest_);
    options_.archive_host = lower(options_.archive_host);
}

FixtureArchive::~FixtureArchive()
{
    stop();
}

void FixtureArchive::start()
{
    if (server_)
        return;
    server_ = std::make_unique<httplib::Server>();
    server_->Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
        auto resp = handle(req.get_header_value("Host"), req.target, lowered_headers(req));
        res.status = resp.status;
        std::string content_type = resp.header("content-type");
        for (const auto& [k, v] : resp.headers)
            if (k != "content-type")
                res.set_header(k, v);
        res.set_content(resp.body, content_type.empty() ? "text/plain" : content_type);
    });
    try {
        run_server(*server_, thread_, options_.bind_address, port_, options_.port);
    } catch (...) {
        server_.reset();
        throw;
    }
}

void FixtureArchive::stop()
{
    if (!server_)
        return;
    server_->stop();
    if (thread_.joinable())
        thread_.join();
    server_.reset();
}

ArchiveEndpoint FixtureArchive::endpoint() const
{
    ArchiveEndpoint ep;
    ep.timemap_template = archive_base() + "/list/timemap/link/{original}";
    ep.replay_template = archive_base() + "/web/{timestamp}/{original}";
    ep.archive_hosts = {options_.archive_host};
    ep.replay_chrome_prefixes = {"/static/"};
    return ep;
}

std::map<std::string, std::string> FixtureArchive::resolve_map() const
{
    std::string addr = options_.bind_address == "0.0.0.0" ? "127.0.0.1" : options_.bind_address;
    addr += ":" + std::to_string(port_);
    std::map<std::string, std::string> out{{options_.archive_host, addr}};
    for (const auto& [_, site] : manifest_.sites)
        out.emplace(site.original.host(), addr);
    for (const auto& host : manifest_.live_hosts())
        out.emplace(host, addr);
    return out;
}

HttpOptions FixtureArchive::client_options() const
{
    HttpOptions opts;
    opts.resolve = resolve_map();
    opts.timeout = std::chrono::milliseconds(10000);
    return opts;
}

std::string FixtureArchive::replay_uri(std::string_view timestamp, std::string_view original) const
{
    return archive_base() + "/web/" + std::string(timestamp) + "/" + std::string(original);
}

HttpResponse FixtureArchive::handle(std::string_view host, std::string_view target,
                                    const std::map<std::string, std::string>& headers) const
{
    std::string hostname = host.empty() ? options_.archive_host : host_of("http://" + std::string(host) + "/");
    bool archive = hostname == options_.archive_host || hostname == "127.0.0.1" || hostname == "localhost"
                   || hostname == lower(options_.bind_address);
    return archive ? handle_archive(target, headers) : handle_live(hostname, target);
}

HttpResponse FixtureArchive::handle_archive(std::string_view target,
                                            const std::map<std::string, std::string>& headers) const
{
    auto strip = [&](std::string_view prefix) -> std::optional<std::string> {
        if (target.starts_with(prefix))
            return std::string(target.substr(prefix.size()));
        return std::nullopt;
    };

    if (auto original = strip("/list/timemap/link/")) {
        const auto* site = manifest_.find_site(*original);
        return site ? timemap_response(*site) : not_found("no TimeMap for " + *original);
    }
    if (auto original = strip("/timegate/")) {
        const auto* site = manifest_.find_site(*original);
        return site ? timegate_response(*site, headers) : not_found("no mementos for " + *original);
    }
    for (std::string_view prefix : {"/web/", "/memento/"}) {
        if (auto rest = strip(prefix)) {
            auto slash = rest->find('/');
            if (slash == std::string::npos)
                return make_response(400, "text/plain", "expected /web/{timestamp}/{uri}\n");
            auto ts = rest->substr(0, slash);
            if (!parse_timestamp14(ts))
                return make_response(400, "text/plain", "bad timestamp " + ts + "\n");
            return replay_response(ts, rest->substr(slash + 1));
        }
    }
    if (target.starts_with("/static/"))
        return make_response(200, "text/css", kChromeCss);
    return not_found(std::string(target));
}

HttpResponse FixtureArchive::handle_live(std::string_view host, std::string_view target) const
{
    auto uri = normalize("http://" + std::string(host) + std::string(target));
    for (const auto& [_, site] : manifest_.sites) {
        auto it = site.live.find(uri);
        if (it == site.live.end())
            continue;
        auto resp = serve_resource(it->second);
        if (it->second.to || it->second.to_live)
            resp.headers.emplace("location", it->second.to ? *it->second.to : *it->second.to_live);
        return resp;
    }
    return not_found(uri);
}

HttpResponse FixtureArchive::timemap_response(const FixtureSite& site) const
{
    if (site.robots_blocked)
        return make_response(site.robots_status, "text/plain", site.robots_body);
    const auto& orig = site.original.str();
    TimeMap tm{site.original, archive_base() + "/timegate/" + orig, archive_base() + "/list/timemap/link/" + orig,
               std::nullopt, {}};
    for (const auto& [ts, _] : site.mementos)
        tm.mementos.push_back({replay_uri(ts, orig), *parse_timestamp14(ts), {MementoRel::Memento}});
    if (!tm.mementos.empty()) {
        tm.mementos.front().rels.insert(MementoRel::FirstMemento);
        tm.mementos.back().rels.insert(MementoRel::LastMemento);
    }
    return make_response(200, "application/link-format", serialize_link_format(tm));
}

namespace {

/// Memento timestamp nearest `when`; ties go to the earlier one.
std::string nearest_timestamp(const FixtureSite& site, UtcTime when)
{
    std::string best;
    std::optional<Seconds> best_gap;
    for (const auto& [ts, _] : site.mementos) {
        auto t = *parse_timestamp14(ts);
        Seconds gap = t > when ? t - when : when - t;
        if (!best_gap || gap < *best_gap) {
            best = ts;
            best_gap = gap;
        }
    }
    return best;
}

}  // namespace

HttpResponse FixtureArchive::timegate_response(const FixtureSite& site,
                                               const std::map<std::string, std::string>& headers) const
{
    if (site.robots_blocked)
        return make_response(site.robots_status, "text/plain", site.robots_body);
    UtcTime accept = *parse_timestamp14(site.mementos.rbegin()->first);
    if (auto it = headers.find("accept-datetime"); it != headers.end()) {
        try {
            accept = parse_rfc1123(it->second);
        } catch (const Error& e) {
            return make_response(400, "text/plain", std::string(e.what()) + "\n");
        }
    }
    auto ts = nearest_timestamp(site, accept);
    auto resp = make_response(302, "text/plain", "");
    resp.headers.emplace("location", replay_uri(ts, site.original.str()));
    resp.headers.emplace("vary", "accept-datetime");
    resp.headers.emplace("link", "<" + site.original.str() + ">; rel=\"original\"");
    return resp;
}

HttpResponse FixtureArchive::replay_response(const std::string& timestamp, const std::string& uri) const
{
    auto key = normalize(uri);
    auto stamp = [&](HttpResponse r) {
        r.headers.emplace("memento-datetime", format_rfc1123(*parse_timestamp14(timestamp)));
        return r;
    };

    if (const auto* site = manifest_.find_site(key)) {
        if (site->robots_blocked)
            return make_response(site->robots_status, "text/plain", site->robots_body);
        auto it = site->mementos.find(timestamp);
        if (it == site->mementos.end()) {
            auto resp = make_response(302, "text/plain", "");
            resp.headers.emplace("location",
                                 replay_uri(nearest_timestamp(*site, *parse_timestamp14(timestamp)), site->original.str()));
            return resp;
        }
        const auto& bundle = site->bundles.at(it->second);
        return stamp(make_response(200, "text/html; charset=utf-8",
                                   site->inject_chrome
                                       ? inject_chrome(bundle.html, archive_base() + "/static/banner.css")
                                       : bundle.html));
    }

    for (const auto& [_, site] : manifest_.sites) {
        auto it = site.mementos.find(timestamp);
        if (it == site.mementos.end())
            continue;
        const auto& bundle = site.bundles.at(it->second);
        auto res = bundle.resources.find(key);
        if (res == bundle.resources.end())
            continue;
        auto resp = serve_resource(res->second);
        if (res->second.to)
            resp.headers.emplace("location", replay_uri(timestamp, *res->second.to));
        else if (res->second.to_live)
            resp.headers.emplace("location", *res->second.to_live);
        return stamp(std::move(resp));
    }
    return not_found(key + " at " + timestamp);
}

// ---------------------------------------------------------------------------

namespace {

void skip_space(std::string_view s, std::size_t& i)
{
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
        ++i;
}

std::optional<std::string> read_string_literal(std::string_view s, std::size_t& i)
{
    if (i >= s.size() || (s[i] != '"' && s[i] != '\''))
        return std::nullopt;
    char quote = s[i++];
    std::string out;
    while (i < s.size() && s[i] != quote) {
        if (s[i] == '\\' && i + 1 < s.size())
            ++i;
        out += s[i++];
    }
    if (i >= s.size())
        return std::nullopt;
    ++i;
    return out;
}

/// "a" + 'b' + "c" -> "abc"; nullopt when anything but literals is joined.
std::optional<std::string> read_concatenation(std::string_view s, std::size_t i)
{
    skip_space(s, i);
    auto first = read_string_literal(s, i);
    if (!first)
        return std::nullopt;
    std::string out = *first;
    for (;;) {
        auto save = i;
        skip_space(s, i);
        if (i >= s.size() || s[i] != '+')
            return out;
        ++i;
        skip_space(s, i);
        auto next = read_string_literal(s, i);
        if (!next) {
            i = save;
            return std::nullopt;
        }
        out += *next;
    }
}

// 1x1 transparent PNG
const unsigned char kTinyPng[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00,
    0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x06, 0x00, 0x00, 0x00, 0x1f, 0x15, 0xc4, 0x89, 0x00, 0x00, 0x00,
    0x0d, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x00, 0x01, 0x00, 0x00, 0x05, 0x00, 0x01, 0x0d, 0x0a, 0x2d,
    0xb4, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

std::string_view initiator_for(const ResourceFetch& f)
{
    if (f.phase == Phase::Page)
        return "document";
    return f.trigger == Trigger::Stylesheet ? "stylesheet" : "parser";
}

ObservedRequest observe(const std::string& uri, std::string_view initiator, const std::vector<Hop>& chain,
                        std::string content_type, std::uint64_t bytes, std::optional<std::string> error)
{
    ObservedRequest o;
    o.uri = uri;
    o.initiator = std::string(initiator);
    o.chain = chain;
    o.content_type = std::move(content_type);
    o.bytes = bytes;
    o.error = std::move(error);
    return o;
}

}  // namespace

std::vector<std::string> script_request_literals(std::string_view script)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < script.size(); ++i) {
        std::optional<std::size_t> value_at;
        if (script.compare(i, 4, ".src") == 0) {
            auto j = i + 4;
            skip_space(script, j);
            if (j < script.size() && script[j] == '=' && (j + 1 >= script.size() || script[j + 1] != '='))
                value_at = j + 1;
        } else if (script.compare(i, 6, "fetch(") == 0
                   && (i == 0 || !(std::isalnum(static_cast<unsigned char>(script[i - 1])) || script[i - 1] == '_'))) {
            value_at = i + 6;
        }
        if (!value_at)
            continue;
        if (auto literal = read_concatenation(script, *value_at))
            out.push_back(*literal);
    }
    return out;
}

StubBridge::StubBridge(ArchiveEndpoint endpoint, std::shared_ptr<const HttpClient> client)
    : endpoint_(std::move(endpoint)), client_(std::move(client))
{
}

BridgeLoadResult StubBridge::load(const BridgeLoadRequest& request)
{
    BridgeLoadResult result;
    std::optional<ReplayUri> memento;
    try {
        memento = to_replay_uri(request.url, endpoint_);
    } catch (const Error&) {
    }
    if (!memento) {
        auto page = follow_redirects(*client_, request.url, request.max_redirects);
        result.requests.push_back(observe(request.url, "document", page.chain,
                                          page.final_response.header("Content-Type"),
                                          page.final_response.body.size(),
                                          page.transport_error ? std::optional(page.error) : std::nullopt));
        return result;
    }

    CaptureConfig config;
    config.max_redirects = request.max_redirects;
    config.parallel = 1;
    CaptureLog log{*memento};
    try {
        log = capture_static(*memento, endpoint_, *client_, config);
    } catch (const Error& e) {
        result.requests.push_back(observe(request.url, "document", {{0, request.url}}, "", 0, std::string(e.what())));
        return result;
    }

    std::set<std::string> seen;
    std::vector<std::string> scripts;
    for (const auto& f : log.fetches) {
        if (f.outcome == FetchOutcome::Skipped)
            continue;
        seen.insert(f.request_uri);
        result.requests.push_back(observe(f.request_uri, initiator_for(f), f.chain, f.content_type, f.bytes,
                                          f.outcome == FetchOutcome::TransportError ? std::optional(f.note)
                                                                                    : std::nullopt));
    }

    if (request.scripting && !log.page_failed) {
        auto page = follow_redirects(*client_, memento->str(), request.max_redirects);
        if (!page.transport_error)
            scripts = scan_html(page.final_response.body).inline_scripts;
        for (const auto& f : log.fetches) {
            bool ok = f.final_status() >= 200 && f.final_status() < 300;
            if (ok && f.content_type.find("javascript") != std::string::npos) {
                auto body = follow_redirects(*client_, f.request_uri, request.max_redirects);
                if (!body.transport_error)
                    scripts.push_back(body.final_response.body);
            }
        }
        for (const auto& script : scripts) {
            for (const auto& literal : script_request_literals(script)) {
                if (is_unfetchable_reference(literal))
                    continue;
                auto parts = split_uri(resolve_reference(request.url, literal));
                parts.fragment.reset();
                auto uri = recompose(parts);
                if (!seen.insert(uri).second)
                    continue;
                auto fetched = follow_redirects(*client_, uri, request.max_redirects);
                result.requests.push_back(observe(uri, "script", fetched.chain,
                                                  fetched.final_response.header("Content-Type"),
                                                  fetched.final_response.body.size(),
                                                  fetched.transport_error ? std::optional(fetched.error)
                                                                          : std::nullopt));
            }
        }
    }
    if (request.screenshot)
        result.screenshot_png = std::string(reinterpret_cast<const char*>(kTinyPng), sizeof kTinyPng);
    return result;
}

BridgeServer::BridgeServer(std::shared_ptr<BrowserBridge> bridge, std::string bind_address, int port)
    : bridge_(std::move(bridge)), bind_address_(std::move(bind_address)), port_(port)
{
}

BridgeServer::~BridgeServer()
{
    stop();
}

void BridgeServer::start()
{
    if (server_)
        return;
    server_ = std::make_unique<httplib::Server>();
    server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok","protocol":1})", "application/json");
    });
    server_->Post("/load", [this](const httplib::Request& req, httplib::Response& res) {
        if (delay_.count() > 0)
            std::this_thread::sleep_for(delay_);
        try {
            auto request = bridge_request_from_json(json::parse(req.body));
            auto result = bridge_->load(request);
            res.set_content(to_json(result).dump(), "application/json");
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        } catch (const Error& e) {
            res.status = e.code() == Errc::BridgeTimeout ? 504 : 502;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    });
    int wanted = port_;
    try {
        run_server(*server_, thread_, bind_address_, port_, wanted);
    } catch (...) {
        server_.reset();
        throw;
    }
}

void BridgeServer::stop()
{
    if (!server_)
        return;
    server_->stop();
    if (thread_.joinable())
        thread_.join();
    server_.reset();
}

}  // namespace memaudit
