#include "memaudit/error.hpp"
#include "memaudit/time.hpp"
#include "memaudit/uri.hpp"

#include "doctest.h"

#include <chrono>
#include <random>

using namespace memaudit;
using namespace std::chrono;

TEST_SUITE("time")
{
    TEST_CASE("rfc1123 round trip")
    {
        auto t = parse_rfc1123("Tue, 20 Jun 2000 18:02:59 GMT");
        CHECK(t == sys_days{2000y / June / 20} + 18h + 2min + 59s);
        CHECK(format_rfc1123(t) == "Tue, 20 Jun 2000 18:02:59 GMT");
        CHECK(format_iso8601(t) == "2000-06-20T18:02:59Z");
        CHECK(parse_iso8601("2000-06-20T18:02:59Z") == t);
        CHECK(year_of(t) == 2000);
    }

    TEST_CASE("rfc1123 rejects other formats")
    {
        for (const char* bad : {"2000-06-20T18:02:59Z", "Tue, 20 Jun 2000 18:02:59", "Tue, 31 Jun 2000 18:02:59 GMT",
                                "Tuesday, 20-Jun-00 18:02:59 GMT", "Tue Jun 20 18:02:59 2000", ""}) {
            CAPTURE(bad);
            try {
                parse_rfc1123(bad);
                FAIL("accepted");
            } catch (const Error& e) {
                CHECK(e.code() == Errc::BadDatetime);
            }
        }
    }

    TEST_CASE("14-digit timestamps")
    {
        auto t = parse_timestamp14("20110731003335");
        REQUIRE(t.has_value());
        CHECK(format_iso8601(*t) == "2011-07-31T00:33:35Z");
        CHECK(format_timestamp14(*t) == "20110731003335");
        CHECK_FALSE(parse_timestamp14("20111331000000").has_value());
        CHECK_FALSE(parse_timestamp14("2011073100333").has_value());
        CHECK_FALSE(parse_timestamp14("2011073100333x").has_value());
        CHECK_FALSE(parse_timestamp14("20110230000000").has_value());
    }

    TEST_CASE("calendar month arithmetic clamps to month end")
    {
        auto leap = sys_days{2012y / February / 29} + 6h;
        CHECK(add_months(leap, 12) == sys_days{2013y / February / 28} + 6h);
        CHECK(add_months(leap, 48) == sys_days{2016y / February / 29} + 6h);
        CHECK(add_months(sys_days{2001y / January / 31}, 1) == sys_days{2001y / February / 28});
        CHECK(add_months(sys_days{2001y / December / 15}, 1) == sys_days{2002y / January / 15});
    }

    TEST_CASE("timestamp format round trip property")
    {
        std::mt19937_64 rng(7);
        std::uniform_int_distribution<long long> secs(0, 4102444799LL);  // 1970..2099
        for (int i = 0; i < 2000; ++i) {
            UtcTime t{seconds{secs(rng)}};
            CHECK(parse_timestamp14(format_timestamp14(t)) == t);
            CHECK(parse_rfc1123(format_rfc1123(t)) == t);
            CHECK(parse_iso8601(format_iso8601(t)) == t);
        }
    }
}

TEST_SUITE("uri")
{
    // Reference resolution examples from RFC 3986.
    TEST_CASE("reference resolution: normal examples")
    {
        const char* base = "http://a/b/c/d;p?q";
        struct Case {
            const char* ref;
            const char* want;
        };
        const Case cases[] = {
            {"g:h", "g:h"},
            {"g", "http://a/b/c/g"},
            {"./g", "http://a/b/c/g"},
            {"g/", "http://a/b/c/g/"},
            {"/g", "http://a/g"},
            {"//g", "http://g"},
            {"?y", "http://a/b/c/d;p?y"},
            {"g?y", "http://a/b/c/g?y"},
            {"#s", "http://a/b/c/d;p?q#s"},
            {"g#s", "http://a/b/c/g#s"},
            {"g?y#s", "http://a/b/c/g?y#s"},
            {";x", "http://a/b/c/;x"},
            {"g;x", "http://a/b/c/g;x"},
            {"g;x?y#s", "http://a/b/c/g;x?y#s"},
            {"", "http://a/b/c/d;p?q"},
            {".", "http://a/b/c/"},
            {"./", "http://a/b/c/"},
            {"..", "http://a/b/"},
            {"../", "http://a/b/"},
            {"../g", "http://a/b/g"},
            {"../..", "http://a/"},
            {"../../", "http://a/"},
            {"../../g", "http://a/g"},
        };
        for (const auto& c : cases) {
            CAPTURE(c.ref);
            CHECK(resolve_reference(base, c.ref) == c.want);
        }
    }

    TEST_CASE("reference resolution: abnormal examples")
    {
        const char* base = "http://a/b/c/d;p?q";
        struct Case {
            const char* ref;
            const char* want;
        };
        const Case cases[] = {
            {"../../../g", "http://a/g"},
            {"../../../../g", "http://a/g"},
            {"/./g", "http://a/g"},
            {"/../g", "http://a/g"},
            {"g.", "http://a/b/c/g."},
            {".g", "http://a/b/c/.g"},
            {"g..", "http://a/b/c/g.."},
            {"..g", "http://a/b/c/..g"},
            {"./../g", "http://a/b/g"},
            {"./g/.", "http://a/b/c/g/"},
            {"g/./h", "http://a/b/c/g/h"},
            {"g/../h", "http://a/b/c/h"},
            {"g;x=1/./y", "http://a/b/c/g;x=1/y"},
            {"g;x=1/../y", "http://a/b/c/y"},
            {"g?y/./x", "http://a/b/c/g?y/./x"},
            {"g?y/../x", "http://a/b/c/g?y/../x"},
            {"g#s/./x", "http://a/b/c/g#s/./x"},
            {"g#s/../x", "http://a/b/c/g#s/../x"},
            {"http:g", "http:g"},
        };
        for (const auto& c : cases) {
            CAPTURE(c.ref);
            CHECK(resolve_reference(base, c.ref) == c.want);
        }
    }

    TEST_CASE("split and recompose")
    {
        auto p = split_uri("http://a.example:8080/x/y?q=1#frag");
        CHECK(p.scheme == "http");
        CHECK(p.authority == "a.example:8080");
        CHECK(p.path == "/x/y");
        CHECK(p.query == "q=1");
        CHECK(p.fragment == "frag");
        CHECK(recompose(p) == "http://a.example:8080/x/y?q=1#frag");
        CHECK(host_of("http://A.Example:8080/x") == "a.example");
        CHECK(path_of("http://a.example") == "");
        CHECK(scheme_of("HTTPS://a.example/") == "https");
    }

    TEST_CASE("original URIs are absolute http(s) and byte preserved")
    {
        CHECK(OriginalUri::is_valid("http://cnn.com"));
        CHECK(OriginalUri::is_valid("https://a.example/%7Euser/?q=A%20b"));
        CHECK_FALSE(OriginalUri::is_valid("ftp://a.example/"));
        CHECK_FALSE(OriginalUri::is_valid("/relative"));
        CHECK_FALSE(OriginalUri::is_valid("http://a.example/#frag"));
        CHECK(OriginalUri::parse("https://a.example/%7Euser/?q=A%20b").str() == "https://a.example/%7Euser/?q=A%20b");
        CHECK_THROWS_AS(OriginalUri::parse("mailto:x@y"), Error);
    }
}
