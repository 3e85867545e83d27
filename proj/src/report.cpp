#include "memaudit/report.hpp"

#include "memaudit/error.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace memaudit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json chain_json(const std::vector<Hop>& chain)
{
    ordered_json out = ordered_json::array();
    for (const auto& hop : chain)
        out.push_back(ordered_json{{"status", hop.status}, {"uri", hop.uri}});
    return out;
}

std::vector<Hop> chain_from(const ordered_json& arr)
{
    std::vector<Hop> chain;
    for (const auto& hop : arr)
        chain.push_back({hop.at("status").get<int>(), hop.at("uri").get<std::string>()});
    return chain;
}

ordered_json counts_json(const ClassCounts& counts)
{
    ordered_json out = ordered_json::object();
    for (std::size_t i = 0; i < kFetchClassCount; ++i)
        out[std::string(to_string(static_cast<FetchClass>(i)))] = counts.values[i];
    return out;
}

ordered_json metrics_json(const MementoMetrics& m)
{
    return ordered_json{{"memento", m.memento.str()},
                        {"year", m.year},
                        {"counted_capture", std::string(to_string(m.counted_engine)) + "/"
                                                + (m.counted_scripting ? "on" : "off")},
                        {"counts", counts_json(m.counts)},
                        {"total_requested", m.total_requested},
                        {"completeness", m.completeness},
                        {"script_delta", m.script_delta ? ordered_json(*m.script_delta) : ordered_json(nullptr)},
                        {"script_degraded", m.script_degraded}};
}

MementoMetrics metrics_from(const ordered_json& doc, const ArchiveEndpoint& endpoint)
{
    MementoMetrics m{to_replay_uri(doc.at("memento").get<std::string>(), endpoint)};
    m.year = doc.at("year").get<int>();
    auto counted = doc.at("counted_capture").get<std::string>();
    auto slash = counted.find('/');
    m.counted_engine = engine_from_string(counted.substr(0, slash));
    m.counted_scripting = counted.substr(slash + 1) == "on";
    for (std::size_t i = 0; i < kFetchClassCount; ++i)
        m.counts.values[i] = doc.at("counts").at(std::string(to_string(static_cast<FetchClass>(i)))).get<int>();
    m.total_requested = doc.at("total_requested").get<int>();
    m.completeness = doc.at("completeness").get<double>();
    if (!doc.at("script_delta").is_null())
        m.script_delta = doc.at("script_delta").get<int>();
    m.script_degraded = doc.value("script_degraded", false);
    return m;
}

}  // namespace

ordered_json endpoint_to_json(const ArchiveEndpoint& endpoint)
{
    return ordered_json{{"timemap_template", endpoint.timemap_template},
                        {"replay_template", endpoint.replay_template},
                        {"archive_hosts", endpoint.archive_hosts},
                        {"replay_chrome_prefixes", endpoint.replay_chrome_prefixes}};
}

ArchiveEndpoint endpoint_from_json(const ordered_json& doc)
{
    ArchiveEndpoint ep;
    ep.timemap_template = doc.at("timemap_template").get<std::string>();
    ep.replay_template = doc.at("replay_template").get<std::string>();
    ep.archive_hosts = doc.at("archive_hosts").get<std::set<std::string>>();
    ep.replay_chrome_prefixes = doc.at("replay_chrome_prefixes").get<std::set<std::string>>();
    ep.validate();
    return ep;
}

ordered_json emit_json(const AuditReport& r)
{
    ordered_json selections = ordered_json::array();
    for (const auto& s : r.sample.selections)
        selections.push_back(ordered_json{{"target", format_iso8601(s.target)},
                                          {"memento", s.chosen.uri},
                                          {"datetime", format_iso8601(s.chosen.datetime)},
                                          {"deviation_s", s.deviation.count()}});

    ordered_json mementos = ordered_json::array();
    for (const auto& m : r.metrics)
        mementos.push_back(metrics_json(m));

    ordered_json series = ordered_json::array();
    for (const auto& [year, p] : r.series.points)
        series.push_back(ordered_json{{"year", year},
                                      {"resource_count", p.resource_count},
                                      {"memento", p.metrics.memento.str()}});

    ordered_json flags = ordered_json::array();
    for (const auto& f : r.drops)
        flags.push_back(ordered_json{{"start_year", f.start_year},
                                     {"end_year", f.end_year},
                                     {"baseline", f.baseline},
                                     {"dropped_value", f.dropped_value},
                                     {"ratio", f.ratio}});

    ordered_json leaks = ordered_json::array();
    for (const auto& l : r.leaks)
        leaks.push_back(ordered_json{{"memento", l.memento},
                                     {"capture", std::string(to_string(l.engine)) + "/" + (l.scripting ? "on" : "off")},
                                     {"request_uri", l.request_uri},
                                     {"chain", chain_json(l.chain)}});

    ordered_json gaps = ordered_json::array();
    for (const auto& g : r.gaps)
        gaps.push_back(ordered_json{{"memento", g.memento}, {"reason", g.reason}});

    return ordered_json{
        {"schema_version", kReportSchemaVersion},
        {"site", r.site.str()},
        {"generated", format_iso8601(r.generated)},
        {"metadata",
         ordered_json{{"resource_count", "archived_ok + archived_missing + leaked + network_error"},
                      {"counts_include_page", true},
                      {"counts_exclude_replay_chrome", true},
                      {"completeness", "archived_ok / resource_count (1.0 when resource_count is 0)"}}},
        {"config", r.config_echo},
        {"sample",
         ordered_json{{"interval", r.sample.interval.to_string()},
                      {"mode", r.sample.mode == AnchorMode::Drifting ? "drifting" : "fixed-grid"},
                      {"selections", selections}}},
        {"mementos", mementos},
        {"series", series},
        {"series_excluded", r.series_excluded},
        {"drops",
         ordered_json{{"threshold", r.drop_threshold},
                      {"sustain_window", r.sustain_window},
                      {"insufficient_data", r.drops_insufficient_data},
                      {"flags", flags}}},
        {"leaks", leaks},
        {"gaps", gaps},
    };
}

std::string emit_json_text(const AuditReport& report)
{
    return emit_json(report).dump(2) + "\n";
}

AuditReport report_from_json(const ordered_json& doc)
{
    try {
        if (doc.at("schema_version").get<std::string>() != kReportSchemaVersion)
            throw Error(Errc::InvalidArgument, "unsupported report schema version");
        auto site = OriginalUri::parse(doc.at("site").get<std::string>());
        AuditReport r{site, parse_iso8601(doc.at("generated").get<std::string>()),
                      doc.at("config"), AnnualSample{}, {}, AnnualSeries{site, {}}};
        auto endpoint = endpoint_from_json(doc.at("config").at("endpoint"));

        const auto& sample = doc.at("sample");
        r.sample.interval = Interval::parse(sample.at("interval").get<std::string>());
        r.sample.mode = sample.at("mode").get<std::string>() == "drifting" ? AnchorMode::Drifting
                                                                           : AnchorMode::FixedGrid;
        for (const auto& s : sample.at("selections")) {
            MementoRecord rec{s.at("memento").get<std::string>(), parse_iso8601(s.at("datetime").get<std::string>()),
                              {MementoRel::Memento}};
            r.sample.selections.push_back(
                {parse_iso8601(s.at("target").get<std::string>()), rec, Seconds{s.at("deviation_s").get<long long>()}});
        }
        for (const auto& m : doc.at("mementos"))
            r.metrics.push_back(metrics_from(m, endpoint));
        r.series_excluded = doc.at("series_excluded").get<std::vector<std::string>>();
        std::vector<MementoMetrics> in_series;
        for (const auto& m : r.metrics)
            if (std::find(r.series_excluded.begin(), r.series_excluded.end(), m.memento.str())
                == r.series_excluded.end())
                in_series.push_back(m);
        r.series = build_series(site, std::move(in_series));

        const auto& drops = doc.at("drops");
        r.drop_threshold = drops.at("threshold").get<double>();
        r.sustain_window = drops.at("sustain_window").get<int>();
        r.drops_insufficient_data = drops.at("insufficient_data").get<bool>();
        for (const auto& f : drops.at("flags"))
            r.drops.push_back({f.at("start_year").get<int>(), f.at("end_year").get<int>(),
                               f.at("baseline").get<double>(), f.at("dropped_value").get<double>(),
                               f.at("ratio").get<double>()});

        for (const auto& l : doc.at("leaks")) {
            auto capture = l.at("capture").get<std::string>();
            auto slash = capture.find('/');
            r.leaks.push_back({l.at("memento").get<std::string>(), engine_from_string(capture.substr(0, slash)),
                               capture.substr(slash + 1) == "on", l.at("request_uri").get<std::string>(),
                               chain_from(l.at("chain"))});
        }
        for (const auto& g : doc.at("gaps"))
            r.gaps.push_back({g.at("memento").get<std::string>(), g.at("reason").get<std::string>()});
        return r;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("malformed report: ") + e.what());
    }
}

std::string emit_csv_series(const AnnualSeries& series)
{
    std::string out = "year,resource_count,archived_ok,archived_missing,leaked,completeness,script_delta\n";
    for (const auto& [year, p] : series.points) {
        const auto& m = p.metrics;
        out += fmt::format("{},{},{},{},{},{:.4f},{}\n", year, p.resource_count, m.counts[FetchClass::ArchivedOk],
                           m.counts[FetchClass::ArchivedMissing], m.counts[FetchClass::Leaked], m.completeness,
                           m.script_delta ? std::to_string(*m.script_delta) : std::string{});
    }
    return out;
}

}  // namespace memaudit
