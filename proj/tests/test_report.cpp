#include "memaudit/error.hpp"
#include "memaudit/report.hpp"

#include "doctest.h"

#include <sstream>

using namespace memaudit;

namespace {

ArchiveEndpoint ep()
{
    return {"http://arc.example/tm/{original}", "http://arc.example/web/{timestamp}/{original}", {"arc.example"},
            {"/static/"}};
}

MementoMetrics metric(const std::string& ts, int ok, int missing, int leaked, std::optional<int> delta = {})
{
    MementoMetrics m{ReplayUri(ep(), ts, OriginalUri::parse("http://s.example/"))};
    m.year = std::stoi(ts.substr(0, 4));
    m.counts[FetchClass::ArchivedOk] = ok;
    m.counts[FetchClass::ArchivedMissing] = missing;
    m.counts[FetchClass::Leaked] = leaked;
    m.counts[FetchClass::ReplayChrome] = 1;
    m.total_requested = ok + missing + leaked;
    m.completeness = m.total_requested ? static_cast<double>(ok) / m.total_requested : 1.0;
    m.script_delta = delta;
    if (delta) {
        m.counted_engine = Engine::Scripted;
        m.counted_scripting = true;
    }
    return m;
}

AuditReport sample_report()
{
    auto site = OriginalUri::parse("http://s.example/");
    AuditReport r{site, parse_iso8601("2024-03-01T10:00:00Z"), {}, {}, {}, AnnualSeries{site, {}}};
    r.config_echo = nlohmann::ordered_json{{"endpoint", endpoint_to_json(ep())},
                                           {"interval", "1y"},
                                           {"zeta", 1},
                                           {"alpha", 2}};
    std::vector<std::string> stamps = {"20000101000000", "20010101000000", "20010601000000", "20020101000000"};
    for (const auto& ts : stamps) {
        auto t = *parse_timestamp14(ts);
        r.sample.selections.push_back({t, MementoRecord{ep().replay_uri(ts, site.str()), t, {MementoRel::Memento}},
                                       Seconds{0}});
    }
    r.metrics = {metric(stamps[0], 3, 1, 1, 2), metric(stamps[1], 10, 0, 0), metric(stamps[2], 9, 0, 0),
                 metric(stamps[3], 2, 1, 0)};
    r.series_excluded = {r.metrics[2].memento.str()};
    r.series = build_series(site, {r.metrics[0], r.metrics[1], r.metrics[3]});
    r.drops = {DropFlag{2002, 2002, 7.5, 3, 0.4}};
    r.sustain_window = 1;
    r.leaks.push_back({r.metrics[0].memento.str(), Engine::Static, false,
                       ep().replay_uri(stamps[0], "http://s.example/t.png"),
                       {{302, ep().replay_uri(stamps[0], "http://s.example/t.png")}, {200, "http://live.example/t.png"}}});
    r.gaps.push_back({ep().replay_uri("20030101000000", site.str()), "page answered 404"});
    return r;
}

}  // namespace

TEST_SUITE("report")
{
    TEST_CASE("empty report is a valid document")
    {
        auto site = OriginalUri::parse("http://s.example/");
        AuditReport r{site, parse_iso8601("2024-01-01T00:00:00Z"), {}, {}, {}, AnnualSeries{site, {}}};
        r.config_echo = nlohmann::ordered_json{{"endpoint", endpoint_to_json(ep())}};
        auto doc = emit_json(r);
        CHECK(doc.at("schema_version") == "1");
        CHECK(doc.at("series").empty());
        CHECK(doc.at("leaks").empty());
        CHECK(doc.at("gaps").empty());
        CHECK(doc.at("drops").at("flags").empty());
        CHECK(emit_json_text(report_from_json(nlohmann::ordered_json::parse(emit_json_text(r)))) == emit_json_text(r));
    }

    TEST_CASE("field order is canonical")
    {
        auto doc = emit_json(sample_report());
        std::vector<std::string> keys;
        for (const auto& [k, v] : doc.items())
            keys.push_back(k);
        CHECK(keys == std::vector<std::string>{"schema_version", "site", "generated", "metadata", "config", "sample",
                                               "mementos", "series", "series_excluded", "drops", "leaks", "gaps"});
        std::vector<std::string> config_keys;
        for (const auto& [k, v] : doc.at("config").items())
            config_keys.push_back(k);
        CHECK(config_keys == std::vector<std::string>{"endpoint", "interval", "zeta", "alpha"});
    }

    TEST_CASE("emit and parse round trip")
    {
        auto r = sample_report();
        auto text = emit_json_text(r);
        auto back = report_from_json(nlohmann::ordered_json::parse(text));
        CHECK(emit_json_text(back) == text);
        CHECK(back.series.points.size() == 3);
        CHECK(back.series.points.at(2001).metrics.memento == r.metrics[1].memento);
        CHECK(back.leaks == r.leaks);
        CHECK(back.gaps == r.gaps);
        CHECK(back.drops == r.drops);
        CHECK(back.generated == r.generated);
        CHECK(emit_json_text(r) == text);
    }

    TEST_CASE("malformed documents")
    {
        auto doc = emit_json(sample_report());
        doc["schema_version"] = "2";
        CHECK_THROWS_AS(report_from_json(doc), Error);
        auto missing = emit_json(sample_report());
        missing.erase("sample");
        CHECK_THROWS_AS(report_from_json(missing), Error);
    }

    TEST_CASE("csv series")
    {
        auto r = sample_report();
        auto csv = emit_csv_series(r.series);
        std::istringstream in(csv);
        std::string line;
        std::vector<std::string> lines;
        while (std::getline(in, line))
            lines.push_back(line);
        REQUIRE(lines.size() == r.series.points.size() + 1);
        CHECK(lines[0] == "year,resource_count,archived_ok,archived_missing,leaked,completeness,script_delta");
        CHECK(lines[1] == "2000,5,3,1,1,0.6000,2");
        CHECK(lines[2] == "2001,10,10,0,0,1.0000,");
        CHECK(lines[3] == "2002,3,2,1,0,0.6667,");
        CHECK(csv.back() == '\n');

        // completeness parses back to within the printed precision
        for (std::size_t i = 1; i < lines.size(); ++i) {
            std::vector<std::string> cells;
            std::stringstream row(lines[i]);
            std::string cell;
            while (std::getline(row, cell, ','))
                cells.push_back(cell);
            int year = std::stoi(cells[0]);
            CHECK(std::stod(cells[5]) == doctest::Approx(r.series.points.at(year).metrics.completeness).epsilon(5e-5));
            CHECK(cells[5].size() == 6);
        }

        AnnualSeries one{OriginalUri::parse("http://s.example/"), {}};
        one.points.emplace(2010, SeriesPoint{1, metric("20100101000000", 1, 0, 0)});
        CHECK(emit_csv_series(one)
              == "year,resource_count,archived_ok,archived_missing,leaked,completeness,script_delta\n"
                 "2010,1,1,0,0,1.0000,\n");
    }

    TEST_CASE("endpoint echo round trip")
    {
        CHECK(endpoint_from_json(endpoint_to_json(ep())) == ep());
    }
}
