#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace memaudit {

std::string default_user_agent();

/// Per-host politeness: at most `max_per_host` requests in flight to one host,
/// and successive request starts to one host at least `delay` apart. One gate
/// is shared by every client of an audit so the limits hold across jobs.
class HostGate {
public:
    HostGate(int max_per_host, std::chrono::milliseconds delay);

    class Permit {
    public:
        Permit(Permit&& other) noexcept;
        Permit& operator=(Permit&&) = delete;
        ~Permit();

    private:
        friend class HostGate;
        Permit(HostGate* gate, std::string host) : gate_(gate), host_(std::move(host)) {}
        HostGate* gate_;
        std::string host_;
    };

    Permit acquire(const std::string& host);

    int max_per_host() const noexcept { return max_per_host_; }
    std::chrono::milliseconds delay() const noexcept { return delay_; }

private:
    struct HostState {
        int active = 0;
        std::chrono::steady_clock::time_point last_start{};
    };
    void release(const std::string& host);

    int max_per_host_;
    std::chrono::milliseconds delay_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::string, HostState> hosts_;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::multimap<std::string, std::string> headers;  // names lower-cased

    /// First value of a header, "" when absent.
    std::string header(const std::string& name) const;
};

struct HttpOptions {
    std::string user_agent = default_user_agent();
    std::chrono::milliseconds timeout{30000};
    /// hostname -> "ip:port". Requests to an overridden host connect there
    /// over plain HTTP and keep the original Host header.
    std::map<std::string, std::string> resolve;
    /// Retries after a transport failure (connection refused, timeout).
    int retries = 1;
};

/// Blocking HTTP GET client. Never follows redirects on its own.
class HttpClient {
public:
    explicit HttpClient(HttpOptions options = {}, std::shared_ptr<HostGate> gate = nullptr);

    /// Throws Error{NetworkError} on transport failure after retries.
    HttpResponse get(const std::string& uri, const std::map<std::string, std::string>& headers = {}) const;

    const HttpOptions& options() const noexcept { return options_; }

private:
    HttpResponse get_once(const std::string& uri, const std::map<std::string, std::string>& headers) const;

    HttpOptions options_;
    std::shared_ptr<HostGate> gate_;
};

/// One dereference step: the status answered for `uri`. Status 0 marks a
/// transport failure.
struct Hop {
    int status = 0;
    std::string uri;

    bool operator==(const Hop&) const = default;
};

struct FollowResult {
    std::vector<Hop> chain;
    HttpResponse final_response;
    bool transport_error = false;
    std::string error;
};

inline bool is_redirect(int status) { return status >= 300 && status < 400; }

/// Dereferences `uri`, following Location headers on 3xx. The chain holds at
/// most `max_hops` entries; a chain cut at the limit ends on a 3xx hop.
FollowResult follow_redirects(const HttpClient& client, const std::string& uri, int max_hops,
                              const std::map<std::string, std::string>& headers = {});

}  // namespace memaudit
