#include "memaudit/bridge.hpp"
#include "memaudit/capture.hpp"
#include "memaudit/error.hpp"

#include "support.hpp"

#include "doctest.h"

#include <random>

using namespace memaudit;
using namespace std::chrono_literals;

namespace {

Errc load_error(BrowserBridge& bridge, const BridgeLoadRequest& req)
{
    try {
        bridge.load(req);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("loaded");
    return Errc::InvalidArgument;
}

class ScriptedBridge : public BrowserBridge {
public:
    BridgeLoadResult result;
    BridgeLoadResult load(const BridgeLoadRequest&) override { return result; }
};

int unused_port()
{
    FixtureArchive probe(FixtureManifest{});
    probe.start();
    int port = probe.port();
    probe.stop();
    return port;
}

}  // namespace

TEST_SUITE("bridge")
{
    TEST_CASE("protocol documents round trip")
    {
        BridgeLoadRequest req{"http://archive.example/web/20060615183000/http://youtube2006.example/", false, 1500,
                              9000, 7, true};
        auto back = bridge_request_from_json(to_json(req));
        CHECK(back.url == req.url);
        CHECK(back.scripting == req.scripting);
        CHECK(back.settle_ms == 1500);
        CHECK(back.timeout_ms == 9000);
        CHECK(back.max_redirects == 7);
        CHECK(back.screenshot);

        BridgeLoadResult res;
        res.settled = true;
        res.requests.push_back({"http://a/x.css", "parser", {{302, "http://a/x.css"}, {404, "http://a/y.css"}},
                                "text/html", 9, std::nullopt});
        res.requests.push_back({"http://a/z.js", "script", {{0, "http://a/z.js"}}, "", 0, "net::ERR_FAILED"});
        res.screenshot_png = std::string("\x89PNG\r\n\x1a\n\0\xff", 10);
        auto doc = to_json(res);
        CHECK(doc.contains("screenshot_png_base64"));
        auto r2 = bridge_result_from_json(doc);
        REQUIRE(r2.requests.size() == 2);
        CHECK(r2.requests[0].chain == res.requests[0].chain);
        CHECK(r2.requests[0].initiator == "parser");
        CHECK(r2.requests[1].error == "net::ERR_FAILED");
        CHECK(r2.screenshot_png == res.screenshot_png);
    }

    TEST_CASE("base64")
    {
        CHECK(base64_encode("") == "");
        CHECK(base64_encode("f") == "Zg==");
        CHECK(base64_encode("fo") == "Zm8=");
        CHECK(base64_encode("foobar") == "Zm9vYmFy");
        CHECK(base64_decode("Zm9vYg==") == "foob");
        std::mt19937 rng(3);
        for (int i = 0; i < 200; ++i) {
            std::string s(static_cast<std::size_t>(rng() % 64), '\0');
            for (auto& c : s)
                c = static_cast<char>(rng());
            CHECK(base64_decode(base64_encode(s)) == s);
        }
        CHECK_THROWS_AS(base64_decode("!!!!"), Error);
    }

    TEST_CASE("stub browser served over the wire")
    {
        testsupport::RunningArchive arc;
        auto ep = arc.archive.endpoint();
        auto stub = std::make_shared<StubBridge>(ep, arc.client);
        BridgeServer server(stub);
        server.start();

        HttpBrowserBridge remote("127.0.0.1", server.port());
        ReplayUri m(ep, "20060615183000", OriginalUri::parse("http://youtube2006.example/"));
        CaptureConfig cfg;
        cfg.settle_ms = 0;
        cfg.page_timeout_ms = 10000;
        auto over_wire = capture_scripted(m, ep, true, remote, *arc.client, cfg);
        auto direct = capture_scripted(m, ep, true, *stub, *arc.client, cfg);
        CHECK(over_wire.subresource_uris() == direct.subresource_uris());
        CHECK(over_wire.subresource_uris().size() > 5);

        BridgeLoadRequest req{m.str(), true, 0, 10000, 10, true};
        auto shot = remote.load(req);
        REQUIRE(shot.screenshot_png.has_value());
        CHECK(shot.screenshot_png->starts_with("\x89PNG"));
    }

    TEST_CASE("a slow bridge times out")
    {
        auto slow = std::make_shared<ScriptedBridge>();
        BridgeServer server(slow);
        server.set_response_delay(1500ms);
        server.start();
        HttpBrowserBridge remote("127.0.0.1", server.port(), 100ms);
        BridgeLoadRequest req{"http://archive.example/web/20060615183000/http://x.example/", true, 0, 200, 10, false};
        CHECK(load_error(remote, req) == Errc::BridgeTimeout);
    }

    TEST_CASE("an unsettled page is a timeout")
    {
        auto never = std::make_shared<ScriptedBridge>();
        never->result.settled = false;
        BridgeServer server(never);
        server.start();
        HttpBrowserBridge remote("127.0.0.1", server.port());
        CHECK(load_error(remote, BridgeLoadRequest{"http://x.example/"}) == Errc::BridgeTimeout);
    }

    TEST_CASE("no bridge listening")
    {
        HttpBrowserBridge remote("127.0.0.1", unused_port());
        CHECK(load_error(remote, BridgeLoadRequest{"http://x.example/"}) == Errc::BridgeUnavailable);
    }
}
