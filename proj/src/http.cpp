#include "memaudit/http.hpp"

#include "memaudit/error.hpp"
#include "memaudit/uri.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <thread>

#ifndef MEMAUDIT_VERSION
#define MEMAUDIT_VERSION "dev"
#endif

namespace memaudit {

std::string default_user_agent()
{
    return std::string("memento-audit/") + MEMAUDIT_VERSION;
}

HostGate::HostGate(int max_per_host, std::chrono::milliseconds delay)
    : max_per_host_(std::max(1, max_per_host)), delay_(std::max(std::chrono::milliseconds{0}, delay))
{
}

HostGate::Permit::Permit(Permit&& other) noexcept : gate_(other.gate_), host_(std::move(other.host_))
{
    other.gate_ = nullptr;
}

HostGate::Permit::~Permit()
{
    if (gate_)
        gate_->release(host_);
}

HostGate::Permit HostGate::acquire(const std::string& host)
{
    std::unique_lock lock(mutex_);
    auto& state = hosts_[host];
    while (true) {
        if (state.active < max_per_host_) {
            auto now = std::chrono::steady_clock::now();
            auto ready = state.last_start + delay_;
            if (state.last_start == std::chrono::steady_clock::time_point{} || now >= ready) {
                ++state.active;
                state.last_start = now;
                return Permit(this, host);
            }
            cv_.wait_until(lock, ready);
        } else {
            cv_.wait(lock);
        }
    }
}

void HostGate::release(const std::string& host)
{
    {
        std::lock_guard lock(mutex_);
        --hosts_[host].active;
    }
    cv_.notify_all();
}

std::string HttpResponse::header(const std::string& name) const
{
    std::string key(name);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    auto it = headers.find(key);
    return it == headers.end() ? std::string{} : it->second;
}

HttpClient::HttpClient(HttpOptions options, std::shared_ptr<HostGate> gate)
    : options_(std::move(options)), gate_(std::move(gate))
{
}

HttpResponse HttpClient::get(const std::string& uri, const std::map<std::string, std::string>& headers) const
{
    for (int attempt = 0;; ++attempt) {
        try {
            return get_once(uri, headers);
        } catch (const Error& err) {
            if (err.code() != Errc::NetworkError || attempt >= options_.retries)
                throw;
        }
    }
}

HttpResponse HttpClient::get_once(const std::string& uri, const std::map<std::string, std::string>& headers) const
{
    auto parts = split_uri(uri);
    auto scheme = scheme_of(uri);
    if ((scheme != "http" && scheme != "https") || !parts.authority || parts.authority->empty())
        throw Error(Errc::NetworkError, "cannot dereference non-http URI: " + uri);

    std::string host = host_of(uri);
    std::string connect_to = scheme + "://" + *parts.authority;
    httplib::Headers request_headers{{"User-Agent", options_.user_agent}};
    if (auto it = options_.resolve.find(host); it != options_.resolve.end()) {
        connect_to = "http://" + it->second;
        request_headers.emplace("Host", *parts.authority);
    }
    for (const auto& [k, v] : headers)
        request_headers.emplace(k, v);

    std::string target = parts.path.empty() ? "/" : parts.path;
    if (parts.query)
        target += "?" + *parts.query;

    httplib::Client cli(connect_to);
    if (!cli.is_valid())
        throw Error(Errc::NetworkError, "invalid endpoint for " + uri);
    cli.set_url_encode(false);
    cli.set_follow_location(false);
    cli.set_keep_alive(false);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());

    std::optional<HostGate::Permit> permit;
    if (gate_)
        permit.emplace(gate_->acquire(host));

    auto res = cli.Get(target, request_headers);
    if (!res)
        throw Error(Errc::NetworkError, uri + ": " + httplib::to_string(res.error()));

    HttpResponse out;
    out.status = res->status;
    out.body = std::move(res->body);
    for (const auto& [k, v] : res->headers) {
        std::string key = k;
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
        out.headers.emplace(std::move(key), v);
    }
    return out;
}

FollowResult follow_redirects(const HttpClient& client, const std::string& uri, int max_hops,
                              const std::map<std::string, std::string>& headers)
{
    FollowResult result;
    std::string current = uri;
    while (static_cast<int>(result.chain.size()) < std::max(1, max_hops)) {
        try {
            result.final_response = client.get(current, headers);
        } catch (const Error& err) {
            result.chain.push_back({0, current});
            result.transport_error = true;
            result.error = err.message();
            result.final_response = {};
            return result;
        }
        result.chain.push_back({result.final_response.status, current});
        if (!is_redirect(result.final_response.status))
            break;
        auto location = result.final_response.header("Location");
        if (location.empty())
            break;
        current = resolve_reference(current, location);
    }
    return result;
}

}  // namespace memaudit
