#include "memaudit/uri.hpp"

#include "memaudit/error.hpp"

#include <algorithm>
#include <cctype>

namespace memaudit {

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string remove_dot_segments(std::string_view input)
{
    std::string in(input);
    std::string out;
    while (!in.empty()) {
        if (in.starts_with("../")) {
            in.erase(0, 3);
        } else if (in.starts_with("./")) {
            in.erase(0, 2);
        } else if (in.starts_with("/./")) {
            in.erase(0, 2);
        } else if (in == "/.") {
            in = "/";
        } else if (in.starts_with("/../") || in == "/..") {
            in = in.size() == 3 ? std::string("/") : in.substr(3);
            auto cut = out.rfind('/');
            out.erase(cut == std::string::npos ? 0 : cut);
        } else if (in == "." || in == "..") {
            in.clear();
        } else {
            auto next = in.find('/', in[0] == '/' ? 1 : 0);
            out += in.substr(0, next);
            in.erase(0, next == std::string::npos ? in.size() : next);
        }
    }
    return out;
}

std::string merge_paths(const UriParts& base, const std::string& ref_path)
{
    if (base.authority && base.path.empty())
        return "/" + ref_path;
    auto slash = base.path.rfind('/');
    if (slash == std::string::npos)
        return ref_path;
    return base.path.substr(0, slash + 1) + ref_path;
}

}  // namespace

UriParts split_uri(std::string_view uri)
{
    UriParts parts;
    std::size_t pos = 0;

    auto scheme_end = uri.find_first_of(":/?#");
    if (scheme_end != std::string_view::npos && scheme_end > 0 && uri[scheme_end] == ':') {
        parts.scheme = std::string(uri.substr(0, scheme_end));
        pos = scheme_end + 1;
    }
    if (uri.substr(pos).starts_with("//")) {
        auto auth_end = uri.find_first_of("/?#", pos + 2);
        if (auth_end == std::string_view::npos)
            auth_end = uri.size();
        parts.authority = std::string(uri.substr(pos + 2, auth_end - pos - 2));
        pos = auth_end;
    }
    auto path_end = uri.find_first_of("?#", pos);
    if (path_end == std::string_view::npos)
        path_end = uri.size();
    parts.path = std::string(uri.substr(pos, path_end - pos));
    pos = path_end;
    if (pos < uri.size() && uri[pos] == '?') {
        auto query_end = uri.find('#', pos);
        if (query_end == std::string_view::npos)
            query_end = uri.size();
        parts.query = std::string(uri.substr(pos + 1, query_end - pos - 1));
        pos = query_end;
    }
    if (pos < uri.size() && uri[pos] == '#')
        parts.fragment = std::string(uri.substr(pos + 1));
    return parts;
}

std::string recompose(const UriParts& parts)
{
    std::string out;
    if (parts.scheme)
        out += *parts.scheme + ":";
    if (parts.authority)
        out += "//" + *parts.authority;
    out += parts.path;
    if (parts.query)
        out += "?" + *parts.query;
    if (parts.fragment)
        out += "#" + *parts.fragment;
    return out;
}

std::string resolve_reference(std::string_view base_uri, std::string_view reference)
{
    const UriParts base = split_uri(base_uri);
    const UriParts ref = split_uri(reference);
    if (!base.scheme)
        throw Error(Errc::InvalidArgument, "base URI is not absolute: " + std::string(base_uri));

    UriParts target;
    if (ref.scheme) {
        target = ref;
        target.path = remove_dot_segments(ref.path);
    } else {
        if (ref.authority) {
            target.authority = ref.authority;
            target.path = remove_dot_segments(ref.path);
            target.query = ref.query;
        } else {
            if (ref.path.empty()) {
                target.path = base.path;
                target.query = ref.query ? ref.query : base.query;
            } else {
                if (ref.path.front() == '/')
                    target.path = remove_dot_segments(ref.path);
                else
                    target.path = remove_dot_segments(merge_paths(base, ref.path));
                target.query = ref.query;
            }
            target.authority = base.authority;
        }
        target.scheme = base.scheme;
    }
    target.fragment = ref.fragment;
    return recompose(target);
}

std::string host_of(std::string_view uri)
{
    auto parts = split_uri(uri);
    if (!parts.authority)
        return {};
    std::string_view auth = *parts.authority;
    if (auto at = auth.rfind('@'); at != std::string_view::npos)
        auth.remove_prefix(at + 1);
    if (!auth.empty() && auth.front() == '[') {
        auto close = auth.find(']');
        return lower(auth.substr(0, close == std::string_view::npos ? auth.size() : close + 1));
    }
    if (auto colon = auth.find(':'); colon != std::string_view::npos)
        auth = auth.substr(0, colon);
    return lower(auth);
}

std::string path_of(std::string_view uri)
{
    return split_uri(uri).path;
}

std::string scheme_of(std::string_view uri)
{
    auto parts = split_uri(uri);
    return parts.scheme ? lower(*parts.scheme) : std::string{};
}

bool OriginalUri::is_valid(std::string_view uri) noexcept
{
    auto parts = split_uri(uri);
    if (!parts.scheme || parts.fragment || !parts.authority)
        return false;
    auto scheme = lower(*parts.scheme);
    if (scheme != "http" && scheme != "https")
        return false;
    if (uri.find_first_of(" \t\r\n") != std::string_view::npos)
        return false;
    return !host_of(uri).empty();
}

OriginalUri OriginalUri::parse(std::string_view uri)
{
    if (!is_valid(uri))
        throw Error(Errc::InvalidArgument, "not an absolute http(s) URI without fragment: " + std::string(uri));
    return OriginalUri(std::string(uri));
}

}  // namespace memaudit
