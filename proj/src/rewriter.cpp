#include "memaudit/rewriter.hpp"

#include "memaudit/error.hpp"
#include "memaudit/time.hpp"

#include <array>
#include <cctype>

namespace memaudit {

namespace {

bool all_digits(std::string_view s)
{
    for (char c : s)
        if (c < '0' || c > '9')
            return false;
    return true;
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n\f");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n\f");
    return std::string(s.substr(b, e - b + 1));
}

void check_timestamp(std::string_view ts)
{
    if (!parse_timestamp14(ts))
        throw Error(Errc::BadTimestamp, "not a 14-digit UTC timestamp: \"" + std::string(ts) + "\"");
}

struct TemplateShape {
    std::string_view head, middle, tail;
    bool timestamp_first = true;
};

TemplateShape shape_of(std::string_view tmpl)
{
    auto ts = tmpl.find(kTimestampSlot);
    auto orig = tmpl.find(kOriginalSlot);
    TemplateShape shape;
    shape.timestamp_first = ts < orig;
    auto first = std::min(ts, orig);
    auto second = std::max(ts, orig);
    auto first_len = shape.timestamp_first ? kTimestampSlot.size() : kOriginalSlot.size();
    auto second_len = shape.timestamp_first ? kOriginalSlot.size() : kTimestampSlot.size();
    shape.head = tmpl.substr(0, first);
    shape.middle = tmpl.substr(first + first_len, second - first - first_len);
    shape.tail = tmpl.substr(second + second_len);
    return shape;
}

}  // namespace

ReplayUri::ReplayUri(const ArchiveEndpoint& endpoint, std::string timestamp, OriginalUri original)
    : timestamp_(std::move(timestamp)), original_(std::move(original))
{
    check_timestamp(timestamp_);
    uri_ = endpoint.replay_uri(timestamp_, original_.str());
    host_ = host_of(uri_);
}

std::string_view host_class_name(HostClass c) noexcept
{
    switch (c) {
    case HostClass::Archive: return "archive";
    case HostClass::Live: return "live";
    case HostClass::ReplayChrome: return "replay-chrome";
    }
    return "unknown";
}

std::optional<std::string> embedded_timestamp(std::string_view uri)
{
    std::string path = path_of(uri);
    std::string_view rest = path;
    while (!rest.empty()) {
        if (rest.front() == '/')
            rest.remove_prefix(1);
        auto slash = rest.find('/');
        auto segment = rest.substr(0, slash);
        if (segment.size() == 14 && all_digits(segment))
            return std::string(segment);
        if (slash == std::string_view::npos)
            break;
        rest.remove_prefix(slash);
    }
    return std::nullopt;
}

std::pair<std::string, OriginalUri> parse_replay_uri(std::string_view uri, const ArchiveEndpoint& endpoint)
{
    auto unrecognized = [&] {
        return Error(Errc::UnrecognizedShape, "not a replay URI for " + endpoint.replay_template + ": "
                                                  + std::string(uri));
    };
    auto shape = shape_of(endpoint.replay_template);
    if (uri.size() < shape.head.size() + shape.tail.size() || !uri.starts_with(shape.head)
        || !uri.ends_with(shape.tail))
        throw unrecognized();
    auto middle = uri.substr(shape.head.size(), uri.size() - shape.head.size() - shape.tail.size());

    std::string_view ts, original;
    if (shape.timestamp_first) {
        auto cut = shape.middle.empty() ? std::min<std::size_t>(14, middle.size()) : middle.find(shape.middle);
        if (cut == std::string_view::npos)
            throw unrecognized();
        ts = middle.substr(0, cut);
        original = middle.substr(cut + shape.middle.size());
    } else {
        auto cut = shape.middle.empty() ? (middle.size() < 14 ? std::string_view::npos : middle.size() - 14)
                                        : middle.rfind(shape.middle);
        if (cut == std::string_view::npos)
            throw unrecognized();
        original = middle.substr(0, cut);
        ts = middle.substr(cut + shape.middle.size());
    }
    check_timestamp(ts);
    if (!OriginalUri::is_valid(original))
        throw unrecognized();
    return {std::string(ts), OriginalUri::parse(original)};
}

ReplayUri to_replay_uri(std::string_view memento_uri, const ArchiveEndpoint& endpoint)
{
    try {
        auto [ts, original] = parse_replay_uri(memento_uri, endpoint);
        return ReplayUri(endpoint, std::move(ts), std::move(original));
    } catch (const Error&) {
        // not replay form; try the API memento shape below
    }

    // API shape: <anything>/<14 digits>/<absolute original>
    auto scheme_end = memento_uri.find("://");
    std::size_t pos = scheme_end == std::string_view::npos ? 0 : scheme_end + 3;
    while ((pos = memento_uri.find('/', pos)) != std::string_view::npos) {
        auto segment = memento_uri.substr(pos + 1, 14);
        if (segment.size() == 14 && all_digits(segment) && memento_uri.size() > pos + 15
            && memento_uri[pos + 15] == '/') {
            auto original = memento_uri.substr(pos + 16);
            if (OriginalUri::is_valid(original))
                return ReplayUri(endpoint, std::string(segment), OriginalUri::parse(original));
        }
        ++pos;
    }
    throw Error(Errc::UnrecognizedShape, "neither a replay nor an API memento URI: " + std::string(memento_uri));
}

bool is_unfetchable_reference(std::string_view reference)
{
    auto ref = trim(reference);
    if (ref.empty() || ref.front() == '#')
        return true;
    auto scheme = scheme_of(ref);
    return !scheme.empty() && scheme != "http" && scheme != "https";
}

ReplayUri rewrite_subresource(const ReplayUri& base, std::string_view reference, const ArchiveEndpoint& endpoint)
{
    auto ref = trim(reference);
    if (is_unfetchable_reference(ref))
        throw Error(Errc::UnresolvableReference, "reference carries no archive request: \"" + ref + "\"");

    auto parts = split_uri(resolve_reference(base.original().str(), ref));
    parts.fragment.reset();
    auto resolved = recompose(parts);

    try {
        auto [ts, original] = parse_replay_uri(resolved, endpoint);
        return ReplayUri(endpoint, base.timestamp(), std::move(original));
    } catch (const Error&) {
        // a plain original
    }
    if (!OriginalUri::is_valid(resolved))
        throw Error(Errc::UnresolvableReference, "reference does not resolve to an http(s) URI: \"" + ref + "\"");
    return ReplayUri(endpoint, base.timestamp(), OriginalUri::parse(resolved));
}

HostClass classify_host(std::string_view uri, const ArchiveEndpoint& endpoint)
{
    auto host = host_of(uri);
    if (host.empty() || !endpoint.archive_hosts.contains(host))
        return HostClass::Live;
    auto path = path_of(uri);
    for (const auto& prefix : endpoint.replay_chrome_prefixes)
        if (path.starts_with(prefix))
            return HostClass::ReplayChrome;
    return HostClass::Archive;
}

}  // namespace memaudit
