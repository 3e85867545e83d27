#include "memaudit/memento_client.hpp"

#include "memaudit/error.hpp"
#include "memaudit/rewriter.hpp"

#include <cctype>

namespace memaudit {

TimeMap fetch_timemap(const HttpClient& client, const OriginalUri& original, const ArchiveEndpoint& endpoint,
                      std::string_view robots_marker)
{
    const std::string uri = endpoint.timemap_uri(original);
    auto result = follow_redirects(client, uri, 10);
    if (result.transport_error)
        throw Error(Errc::NetworkError, result.error);

    const auto& res = result.final_response;
    if (res.status == 404)
        throw Error(Errc::NotArchived, original.str() + " has no TimeMap at " + uri);
    if (res.status == 403)
        throw Error(Errc::RobotsExcluded, original.str() + " is blocked by the archive (403)");
    if (res.status != 200)
        throw Error(Errc::NetworkError, "unexpected status " + std::to_string(res.status) + " for " + uri);
    try {
        return parse_link_format(res.body);
    } catch (const Error&) {
        if (!robots_marker.empty() && res.body.find(robots_marker) != std::string::npos)
            throw Error(Errc::RobotsExcluded, original.str() + " is blocked by the archive ("
                                                  + std::string(robots_marker) + ")");
        throw;
    }
}

MementoRecord negotiate_datetime(const HttpClient& client, const std::string& timegate_uri, UtcTime accept,
                                 int max_redirects)
{
    const std::map<std::string, std::string> headers{{"Accept-Datetime", format_rfc1123(accept)}};
    HttpResponse gate = client.get(timegate_uri, headers);
    if (gate.status == 404)
        throw Error(Errc::NotArchived, "timegate has no memento: " + timegate_uri);

    std::string selected;
    HttpResponse memento;
    if (is_redirect(gate.status)) {
        auto location = gate.header("Location");
        if (location.empty())
            throw Error(Errc::ProtocolError, "timegate answered " + std::to_string(gate.status) + " without Location");
        selected = resolve_reference(timegate_uri, location);
        auto followed = follow_redirects(client, selected, max_redirects, headers);
        if (followed.transport_error)
            throw Error(Errc::NetworkError, followed.error);
        memento = std::move(followed.final_response);
    } else if (gate.status >= 200 && gate.status < 300) {
        // Memento that acts as its own timegate.
        auto content_location = gate.header("Content-Location");
        selected = content_location.empty() ? timegate_uri : resolve_reference(timegate_uri, content_location);
        memento = std::move(gate);
    } else {
        throw Error(Errc::ProtocolError, "timegate answered " + std::to_string(gate.status));
    }

    MementoRecord record{selected, {}, {MementoRel::Memento}};
    if (auto header = memento.header("Memento-Datetime"); !header.empty()) {
        record.datetime = parse_rfc1123(header);
    } else if (auto ts = embedded_timestamp(selected)) {
        record.datetime = *parse_timestamp14(*ts);
    } else {
        throw Error(Errc::ProtocolError, "cannot determine datetime of memento " + selected);
    }
    return record;
}

}  // namespace memaudit
