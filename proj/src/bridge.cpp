#include "memaudit/bridge.hpp"

#include "memaudit/error.hpp"

#include <httplib.h>
#include <openssl/evp.h>

namespace memaudit {

using nlohmann::json;

json to_json(const BridgeLoadRequest& req)
{
    return json{{"url", req.url},
                {"scripting", req.scripting},
                {"settle_ms", req.settle_ms},
                {"timeout_ms", req.timeout_ms},
                {"max_redirects", req.max_redirects},
                {"screenshot", req.screenshot}};
}

BridgeLoadRequest bridge_request_from_json(const json& doc)
{
    BridgeLoadRequest req;
    req.url = doc.at("url").get<std::string>();
    req.scripting = doc.value("scripting", true);
    req.settle_ms = doc.value("settle_ms", 3000);
    req.timeout_ms = doc.value("timeout_ms", 30000);
    req.max_redirects = doc.value("max_redirects", 10);
    req.screenshot = doc.value("screenshot", false);
    return req;
}

json to_json(const BridgeLoadResult& result)
{
    json requests = json::array();
    for (const auto& r : result.requests) {
        json chain = json::array();
        for (const auto& hop : r.chain)
            chain.push_back({{"status", hop.status}, {"uri", hop.uri}});
        json item{{"uri", r.uri},
                  {"initiator", r.initiator},
                  {"chain", chain},
                  {"content_type", r.content_type},
                  {"bytes", r.bytes}};
        if (r.error)
            item["error"] = *r.error;
        requests.push_back(std::move(item));
    }
    json doc{{"settled", result.settled}, {"requests", requests}};
    if (result.screenshot_png)
        doc["screenshot_png_base64"] = base64_encode(*result.screenshot_png);
    return doc;
}

BridgeLoadResult bridge_result_from_json(const json& doc)
{
    BridgeLoadResult result;
    result.settled = doc.value("settled", true);
    for (const auto& item : doc.at("requests")) {
        ObservedRequest r;
        r.uri = item.at("uri").get<std::string>();
        r.initiator = item.value("initiator", "other");
        for (const auto& hop : item.value("chain", json::array()))
            r.chain.push_back({hop.at("status").get<int>(), hop.at("uri").get<std::string>()});
        r.content_type = item.value("content_type", "");
        r.bytes = item.value("bytes", std::uint64_t{0});
        if (item.contains("error") && item["error"].is_string())
            r.error = item["error"].get<std::string>();
        result.requests.push_back(std::move(r));
    }
    if (doc.contains("screenshot_png_base64") && doc["screenshot_png_base64"].is_string())
        result.screenshot_png = base64_decode(doc["screenshot_png_base64"].get<std::string>());
    return result;
}

std::string base64_encode(std::string_view data)
{
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    auto n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                             reinterpret_cast<const unsigned char*>(data.data()), static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string base64_decode(std::string_view text)
{
    if (text.empty())
        return {};
    std::string out(3 * text.size() / 4 + 3, '\0');
    auto n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                             reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0)
        throw Error(Errc::InvalidArgument, "invalid base64 payload");
    // EVP_DecodeBlock counts padding bytes as output
    auto padding = text.ends_with("==") ? 2 : text.ends_with("=") ? 1 : 0;
    out.resize(static_cast<std::size_t>(n - padding));
    return out;
}

HttpBrowserBridge::HttpBrowserBridge(std::string host, int port, std::chrono::milliseconds grace)
    : host_(std::move(host)), port_(port), grace_(grace)
{
}

BridgeLoadResult HttpBrowserBridge::load(const BridgeLoadRequest& request)
{
    httplib::Client cli(host_, port_);
    cli.set_connection_timeout(5, 0);
    // the bridge itself enforces timeout_ms; allow it a grace period to answer
    auto budget = std::chrono::milliseconds(request.timeout_ms) + grace_;
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(budget);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(budget - secs);
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_keep_alive(false);

    auto res = cli.Post("/load", to_json(request).dump(), "application/json");
    if (!res) {
        if (res.error() == httplib::Error::Read)
            throw Error(Errc::BridgeTimeout, "browser bridge did not answer within " + std::to_string(budget.count())
                                                 + " ms for " + request.url);
        throw Error(Errc::BridgeUnavailable, "browser bridge at " + host_ + ":" + std::to_string(port_) + ": "
                                                 + httplib::to_string(res.error()));
    }
    if (res->status == 504)
        throw Error(Errc::BridgeTimeout, "browser bridge reports page never settled: " + request.url);
    if (res->status != 200)
        throw Error(Errc::BridgeUnavailable, "browser bridge answered " + std::to_string(res->status));

    BridgeLoadResult result;
    try {
        result = bridge_result_from_json(json::parse(res->body));
    } catch (const json::exception& e) {
        throw Error(Errc::BridgeUnavailable, std::string("malformed bridge response: ") + e.what());
    }
    if (!result.settled)
        throw Error(Errc::BridgeTimeout, "page never settled within " + std::to_string(request.timeout_ms)
                                             + " ms: " + request.url);
    return result;
}

}  // namespace memaudit
