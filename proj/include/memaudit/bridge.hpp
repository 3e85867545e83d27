#pragma once

#include "memaudit/http.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace memaudit {

/// Remote-control bridge to an external browser.
///
/// Wire protocol (JSON over HTTP, version 1): the client POSTs to
/// http://<host>:<port>/load
///
///   {"url": "...", "scripting": true, "settle_ms": 3000, "timeout_ms": 30000,
///    "max_redirects": 10, "screenshot": false}
///
/// and the bridge answers 200 with
///
///   {"settled": true,
///    "requests": [{"uri": "...", "initiator": "document|parser|stylesheet|script|other",
///                  "chain": [{"status": 302, "uri": "..."}, {"status": 404, "uri": "..."}],
///                  "content_type": "text/css", "bytes": 0, "error": "..."}],
///    "screenshot_png_base64": "..."}
///
/// The bridge observes every network request until the load event plus
/// settle_ms of quiescence, capped at timeout_ms. "settled": false means the
/// cap was hit. GET /health answers 200 when the bridge is ready.
struct BridgeLoadRequest {
    std::string url;
    bool scripting = true;
    int settle_ms = 3000;
    int timeout_ms = 30000;
    int max_redirects = 10;
    bool screenshot = false;
};

struct ObservedRequest {
    std::string uri;
    std::string initiator = "other";
    std::vector<Hop> chain;
    std::string content_type;
    std::uint64_t bytes = 0;
    std::optional<std::string> error;
};

struct BridgeLoadResult {
    bool settled = true;
    std::vector<ObservedRequest> requests;
    std::optional<std::string> screenshot_png;  // raw bytes
};

nlohmann::json to_json(const BridgeLoadRequest& req);
BridgeLoadRequest bridge_request_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const BridgeLoadResult& result);
BridgeLoadResult bridge_result_from_json(const nlohmann::json& doc);

std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view text);

class BrowserBridge {
public:
    virtual ~BrowserBridge() = default;
    /// Throws Error{BridgeUnavailable} or Error{BridgeTimeout}.
    virtual BridgeLoadResult load(const BridgeLoadRequest& request) = 0;
};

/// Client side of the JSON protocol above.
class HttpBrowserBridge : public BrowserBridge {
public:
    /// `grace` is how long past timeout_ms the bridge may take to answer.
    HttpBrowserBridge(std::string host, int port, std::chrono::milliseconds grace = std::chrono::seconds(5));
    BridgeLoadResult load(const BridgeLoadRequest& request) override;

private:
    std::string host_;
    int port_;
    std::chrono::milliseconds grace_;
};

}  // namespace memaudit
