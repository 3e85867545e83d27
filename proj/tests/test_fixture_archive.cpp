#include "memaudit/error.hpp"
#include "memaudit/fixture_archive.hpp"
#include "memaudit/link_format.hpp"
#include "memaudit/rewriter.hpp"

#include "support.hpp"

#include "doctest.h"

#include <algorithm>
#include <fstream>

using namespace memaudit;

namespace {

const FixtureManifest& manifest()
{
    static const FixtureManifest m = load_fixture_manifest(testsupport::fixture_dir());
    return m;
}

Errc manifest_error(const std::string& json_text)
{
    testsupport::TempDir dir("manifest");
    std::ofstream(dir.path() / "manifest.json") << json_text;
    try {
        load_fixture_manifest(dir.path());
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("loaded");
    return Errc::InvalidArgument;
}

}  // namespace

TEST_SUITE("fixture_archive")
{
    TEST_CASE("authored sites load and validate")
    {
        const auto& m = manifest();
        CHECK(m.sites.size() == 8);
        for (const char* name : {"cnn", "nasa", "whitehouse", "gmaps", "youtube2006", "youtube2011", "robots", "pages"})
            CHECK_NOTHROW(m.site_named(name));
        CHECK(m.site_named("cnn").mementos.size() == 9);
        CHECK(m.site_named("nasa").mementos.size() == 14);
        CHECK(m.site_named("robots").robots_blocked);
        CHECK(m.live_hosts() == std::set<std::string>{"maps.live.example", "tiles.live.example", "tiles2.live.example"});
        CHECK(m.find_site("http://cnn.example/") != nullptr);
        CHECK(m.find_site("http://nope.example/") == nullptr);
    }

    TEST_CASE("served TimeMaps re-parse with the authored memento count")
    {
        FixtureArchive arc(manifest());
        auto ep = arc.endpoint();
        for (const auto& [original, site] : manifest().sites) {
            if (site.robots_blocked)
                continue;
            CAPTURE(original);
            auto res = arc.handle("archive.example", "/list/timemap/link/" + original);
            REQUIRE(res.status == 200);
            CHECK(res.header("content-type").starts_with("application/link-format"));
            auto tm = parse_link_format(res.body);
            CHECK(tm.original.str() == original);
            CHECK(tm.mementos.size() == site.mementos.size());
            for (const auto& mem : tm.mementos) {
                auto [ts, orig] = parse_replay_uri(mem.uri, ep);
                CHECK(orig.str() == original);
                CHECK(site.mementos.contains(ts));
                CHECK(format_timestamp14(mem.datetime) == ts);
            }
            CHECK(arc.handle("archive.example", "/list/timemap/link/" + original).body == res.body);
        }
    }

    TEST_CASE("timegate picks the nearest memento")
    {
        FixtureArchive arc(manifest());
        const auto& cnn = manifest().site_named("cnn");
        std::vector<UtcTime> times;
        for (const auto& [ts, b] : cnn.mementos)
            times.push_back(*parse_timestamp14(ts));

        auto nearest = [&](UtcTime t) {
            UtcTime best = times.front();
            for (auto c : times)
                if ((c > t ? c - t : t - c) < (best > t ? best - t : t - best))
                    best = c;
            return best;
        };
        for (const char* accept : {"Tue, 20 Jun 2000 18:02:59 GMT", "Wed, 21 Jun 2000 07:00:00 GMT",
                                   "Sat, 01 Jan 2000 00:00:00 GMT", "Thu, 01 Jan 2004 00:00:00 GMT",
                                   "Wed, 27 Dec 2006 22:21:12 GMT", "Tue, 01 Jan 2030 00:00:00 GMT"}) {
            CAPTURE(accept);
            auto res = arc.handle("archive.example", "/timegate/http://cnn.example/", {{"accept-datetime", accept}});
            REQUIRE(res.status == 302);
            auto want = arc.endpoint().replay_uri(format_timestamp14(nearest(parse_rfc1123(accept))),
                                                  "http://cnn.example/");
            CHECK(res.header("location") == want);
            CHECK(res.header("vary").find("accept-datetime") != std::string::npos);
        }
        CHECK(arc.handle("archive.example", "/timegate/http://cnn.example/", {{"accept-datetime", "yesterday"}}).status
              == 400);
        CHECK(arc.handle("archive.example", "/timegate/http://nope.example/").status == 404);
    }

    TEST_CASE("robots-blocked site answers the configured response")
    {
        FixtureArchive arc(manifest());
        auto res = arc.handle("archive.example", "/list/timemap/link/http://robots.example/");
        const auto& site = manifest().site_named("robots");
        CHECK(res.status == site.robots_status);
        CHECK(res.body == site.robots_body);
        CHECK(res.body.find("robots.txt") != std::string::npos);
    }

    TEST_CASE("replay")
    {
        FixtureArchive arc(manifest());
        auto page = arc.handle("archive.example", "/web/20100101000000/http://pages.example/");
        CHECK(page.status == 200);
        CHECK(page.header("memento-datetime") == "Fri, 01 Jan 2010 00:00:00 GMT");
        CHECK(page.body.find("banner.css") == std::string::npos);

        auto chrome_page = arc.handle("archive.example", "/web/20110415120000/http://youtube2011.example/");
        CHECK(chrome_page.body.find("http://archive.example/static/banner.css") != std::string::npos);
        CHECK(arc.handle("archive.example", "/static/banner.css").status == 200);

        auto api = arc.handle("archive.example", "/memento/20100101000000/http://pages.example/");
        CHECK(api.status == 200);
        CHECK(api.body == page.body);

        auto css = arc.handle("archive.example", "/web/20110415120000/http://youtube2011.example/css/www-core.css");
        CHECK(css.status == 302);
        CHECK(css.header("location")
              == "http://archive.example/web/20110415120000/http://youtube2011.example/css/www-core-vfl.css");
        CHECK(arc.handle("archive.example", "/web/20110415120000/http://youtube2011.example/css/www-core-vfl.css").status
              == 404);

        auto leak = arc.handle("archive.example", "/web/20120601120000/http://gmaps.example/maps/api.js");
        CHECK(leak.status == 302);
        CHECK(leak.header("location") == "http://maps.live.example/maps/api.js");
        CHECK(arc.handle("maps.live.example", "/maps/api.js").status == 200);
        CHECK(arc.handle("tiles.live.example", "/t1.png").status == 302);
        CHECK(arc.handle("tiles.live.example", "/nothing.png").status == 404);

        CHECK(arc.handle("archive.example", "/web/2006/http://youtube2006.example/").status == 400);
        auto near2 = arc.handle("archive.example", "/web/20060101000000/http://youtube2006.example/");
        CHECK(near2.status == 302);
        CHECK(near2.header("location") == "http://archive.example/web/20060615183000/http://youtube2006.example/");

        CHECK(arc.handle("archive.example", "/web/20100101000000/http://pages.example/nothing.png").status == 404);
        CHECK(arc.handle("archive.example", "/web/20100101000000/http://unknown.example/").status == 404);
        CHECK(arc.handle("archive.example", "/web/20100101000000").status == 400);
    }

    TEST_CASE("responses are deterministic")
    {
        FixtureArchive a(manifest());
        FixtureArchive b(manifest());
        for (const char* target : {"/web/20030115093000/http://nasa.example/", "/list/timemap/link/http://nasa.example/",
                                   "/web/20030115093000/http://nasa.example/css/nasa2003.css"}) {
            auto ra = a.handle("archive.example", target);
            auto rb = b.handle("archive.example", target);
            CHECK(ra.status == rb.status);
            CHECK(ra.body == rb.body);
            CHECK(ra.headers == rb.headers);
        }
    }

    TEST_CASE("manifest validation")
    {
        CHECK(manifest_error("{") == Errc::InvalidManifest);
        CHECK(manifest_error(R"({"mementos": {}})") == Errc::InvalidManifest);
        CHECK(manifest_error(R"({"original": "http://a.example/", "mementos": {"2001": "b"},
                                 "bundles": {"b": {"html": "x"}}})")
              == Errc::InvalidManifest);
        CHECK(manifest_error(R"({"original": "http://a.example/", "mementos": {"20010101000000": "nope"},
                                 "bundles": {"b": {"html": "x"}}})")
              == Errc::InvalidManifest);
        // redirect loop never reaches a terminal status
        CHECK(manifest_error(R"({"original": "http://a.example/", "mementos": {"20010101000000": "b"},
                                 "bundles": {"b": {"html": "x", "resources": {
                                   "http://a.example/x": {"status": 302, "to": "http://a.example/y"},
                                   "http://a.example/y": {"status": 302, "to": "http://a.example/x"}}}}})")
              == Errc::InvalidManifest);
        // script-loaded URI that is neither a resource nor a leak
        CHECK(manifest_error(R"({"original": "http://a.example/", "mementos": {"20010101000000": "b"},
                                 "bundles": {"b": {"html": "x", "script_loaded": ["http://a.example/ghost.png"]}}})")
              == Errc::InvalidManifest);
        // a redirect to the live web that is not declared as a leak
        CHECK(manifest_error(R"({"original": "http://a.example/", "mementos": {"20010101000000": "b"},
                                 "bundles": {"b": {"html": "x", "resources": {
                                   "http://a.example/x": {"status": 302, "to_live": "http://live.example/x"}}}}})")
              == Errc::InvalidManifest);
        CHECK(manifest_error(R"({"original": "http://a.example/", "mementos": {"20010101000000": "b"},
                                 "bundles": {"b": {"page": "missing.html"}}})")
              == Errc::InvalidManifest);
    }

    TEST_CASE("a taken port is reported")
    {
        FixtureArchive first(FixtureManifest{});
        first.start();
        FixtureServerOptions opts;
        opts.port = first.port();
        FixtureArchive second(FixtureManifest{}, opts);
        try {
            second.start();
            FAIL("bound twice");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::PortInUse);
        }
    }

    TEST_CASE("script literal extraction")
    {
        auto urls = script_request_literals(
            "a.src = \"img/\" + \"promo.gif\";\n"
            "thumbs[1].src = 'gallery/thumb2.jpg';\n"
            "fetch(\"api/featured.json\").then(f);\n"
            "x.src = computed + '.png';\n"
            "var s = \"not.src = 'nothing'\";\n");
        REQUIRE(urls.size() >= 3);
        CHECK(urls[0] == "img/promo.gif");
        CHECK(urls[1] == "gallery/thumb2.jpg");
        CHECK(urls[2] == "api/featured.json");
        CHECK(std::find(urls.begin(), urls.end(), ".png") == urls.end());
    }
}
