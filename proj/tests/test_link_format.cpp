#include "memaudit/error.hpp"
#include "memaudit/link_format.hpp"

#include "support.hpp"

#include "doctest.h"

#include <random>
#include <sstream>

using namespace memaudit;

namespace {

std::string abbreviated_cnn()
{
    // The sample elides entries with lines holding only "..."; drop them.
    std::istringstream in(testsupport::slurp(testsupport::fixture_dir() / "timemaps" / "cnn_abbreviated.link"));
    std::string line, out;
    while (std::getline(in, line))
        if (line != "...")
            out += line + "\n";
    return out;
}

Errc parse_error(std::string_view body)
{
    try {
        parse_link_format(body);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("parsed without error");
    return Errc::InvalidArgument;
}

const char* kHead = "<http://a.example/>; rel=\"original\",\n"
                    "<http://arc.example/tg/http://a.example/>; rel=\"timegate\",\n"
                    "<http://arc.example/tm/http://a.example/>; rel=\"timemap\"; type=\"application/link-format\"";

}  // namespace

TEST_SUITE("link_format")
{
    TEST_CASE("abbreviated cnn sample")
    {
        auto tm = parse_link_format(abbreviated_cnn());
        CHECK(tm.original.str() == "http://cnn.com");
        CHECK(tm.timegate_uri == "http://api.wayback.archive.org/list/timegate/http://cnn.com");
        CHECK(tm.timemap_uri == "http://api.wayback.archive.org/list/timemap/link/http://cnn.com");
        CHECK(tm.timebundle_uri == "http://api.wayback.archive.org/list/timebundle/http://cnn.com");
        REQUIRE(tm.mementos.size() == 9);
        CHECK(format_iso8601(tm.mementos.front().datetime) == "2000-06-20T18:02:59Z");
        CHECK(format_iso8601(tm.mementos.back().datetime) == "2012-12-09T20:11:12Z");
        CHECK(tm.mementos.front().rels.contains(MementoRel::FirstMemento));
        CHECK(tm.mementos.back().rels.contains(MementoRel::LastMemento));
        CHECK(tm.mementos[3].uri == "http://api.wayback.archive.org/memento/20061227222050/http://www.cnn.com");
        for (std::size_t i = 1; i < tm.mementos.size(); ++i)
            CHECK(tm.mementos[i - 1].datetime <= tm.mementos[i].datetime);
    }

    TEST_CASE("verbatim sample with elision lines is not link-format")
    {
        auto raw = testsupport::slurp(testsupport::fixture_dir() / "timemaps" / "cnn_abbreviated.link");
        CHECK(parse_error(raw) == Errc::MalformedEntry);
    }

    TEST_CASE("single-line and whitespace variants")
    {
        std::string body = std::string(kHead) + ",<http://arc.example/m/20010101000000/http://a.example/>;"
                           "rel=\"first last memento\";datetime=\"Mon, 01 Jan 2001 00:00:00 GMT\"";
        auto tm = parse_link_format(body);
        REQUIRE(tm.mementos.size() == 1);
        CHECK(tm.mementos[0].rels.contains(MementoRel::FirstMemento));
        CHECK(tm.mementos[0].rels.contains(MementoRel::LastMemento));
        CHECK(tm.mementos[0].rels.contains(MementoRel::Memento));
    }

    TEST_CASE("unsorted input is sorted, duplicates ordered by URI")
    {
        std::string body = std::string(kHead) + ",\n"
                           "<http://arc.example/m/2/http://a.example/>; rel=\"memento\"; datetime=\"Tue, 02 Jan 2001 00:00:00 GMT\",\n"
                           "<http://arc.example/m/b/http://a.example/>; rel=\"memento\"; datetime=\"Mon, 01 Jan 2001 00:00:00 GMT\",\n"
                           "<http://arc.example/m/a/http://a.example/>; rel=\"memento\"; datetime=\"Mon, 01 Jan 2001 00:00:00 GMT\"\n";
        auto tm = parse_link_format(body);
        REQUIRE(tm.mementos.size() == 3);
        CHECK(tm.mementos[0].uri == "http://arc.example/m/a/http://a.example/");
        CHECK(tm.mementos[1].uri == "http://arc.example/m/b/http://a.example/");
        CHECK(tm.mementos[2].uri == "http://arc.example/m/2/http://a.example/");
    }

    TEST_CASE("errors")
    {
        CHECK(parse_error("<http://arc.example/tg>; rel=\"timegate\", <http://arc.example/tm>; rel=\"timemap\"")
              == Errc::MissingRole);
        CHECK(parse_error("<http://a.example/>; rel=\"original\", <http://arc.example/tm>; rel=\"timemap\"")
              == Errc::MissingRole);
        CHECK(parse_error(std::string(kHead) + ", <http://b.example/>; rel=\"original\"") == Errc::MalformedEntry);
        CHECK(parse_error(std::string(kHead) + ", <http://m>; rel=\"memento\"") == Errc::BadDatetime);
        CHECK(parse_error(std::string(kHead) + ", <http://m>; rel=\"memento\"; datetime=\"2001-01-01\"")
              == Errc::BadDatetime);
        CHECK(parse_error(std::string(kHead) + ", <http://m; rel=\"memento\"") == Errc::MalformedEntry);
        CHECK(parse_error(std::string(kHead) + " junk") == Errc::MalformedEntry);
        CHECK(parse_error("") == Errc::MissingRole);
    }

    TEST_CASE("error offsets point into the body")
    {
        std::string body = std::string(kHead) + ",\n<http://m>; rel=\"memento\"; datetime=\"nope\"";
        try {
            parse_link_format(body);
            FAIL("accepted");
        } catch (const Error& e) {
            REQUIRE(e.offset().has_value());
            CHECK(*e.offset() > std::string(kHead).size());
            CHECK(*e.offset() <= body.size());
        }
    }

    TEST_CASE("parse inverts serialize on generated TimeMaps")
    {
        std::mt19937 rng(20130101);
        for (int round = 0; round < 300; ++round) {
            std::uniform_int_distribution<int> count(0, 40);
            std::uniform_int_distribution<long long> secs(631152000LL, 1735689600LL);
            std::vector<MementoRecord> ms;
            int n = count(rng);
            for (int i = 0; i < n; ++i) {
                UtcTime t{Seconds{secs(rng)}};
                if (i > 0 && rng() % 5 == 0)
                    t = ms.back().datetime;  // same-second capture
                ms.push_back({"http://arc.example/web/" + format_timestamp14(t) + "/http://s" + std::to_string(round)
                                  + ".example/p?i=" + std::to_string(i),
                              t,
                              {MementoRel::Memento}});
            }
            std::sort(ms.begin(), ms.end(), memento_order);
            if (!ms.empty()) {
                ms.front().rels.insert(MementoRel::FirstMemento);
                ms.back().rels.insert(MementoRel::LastMemento);
            }
            auto original = OriginalUri::parse("http://s" + std::to_string(round) + ".example/p");
            TimeMap tm{original, "http://arc.example/timegate/" + original.str(),
                       "http://arc.example/timemap/" + original.str(),
                       round % 2 ? std::optional<std::string>("http://arc.example/tb/" + original.str())
                                 : std::nullopt,
                       ms};
            auto text = serialize_link_format(tm);
            CAPTURE(text);
            CHECK(parse_link_format(text) == tm);
        }
    }
}
