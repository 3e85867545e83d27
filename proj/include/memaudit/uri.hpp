#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace memaudit {

/// Generic URI components (RFC 3986 appendix B split). Components are kept
/// byte-for-byte; nothing is percent-decoded or case-folded.
struct UriParts {
    std::optional<std::string> scheme;
    std::optional<std::string> authority;
    std::string path;
    std::optional<std::string> query;
    std::optional<std::string> fragment;

    bool operator==(const UriParts&) const = default;
};

UriParts split_uri(std::string_view uri);
std::string recompose(const UriParts& parts);

/// RFC 3986 strict reference resolution, including
/// remove_dot_segments. `base` must be absolute.
std::string resolve_reference(std::string_view base, std::string_view reference);

/// Lower-cased host of an absolute URI, without userinfo or port. Empty when
/// the URI has no authority.
std::string host_of(std::string_view uri);
/// Path component of a URI ("" when absent).
std::string path_of(std::string_view uri);
/// Scheme lower-cased; empty when relative.
std::string scheme_of(std::string_view uri);

/// Absolute http(s) URI of a live-web resource, without fragment.
class OriginalUri {
public:
    /// Throws Error{InvalidArgument} when the invariants do not hold.
    static OriginalUri parse(std::string_view uri);
    static bool is_valid(std::string_view uri) noexcept;

    const std::string& str() const noexcept { return uri_; }
    std::string host() const { return host_of(uri_); }

    auto operator<=>(const OriginalUri&) const = default;

private:
    explicit OriginalUri(std::string uri) : uri_(std::move(uri)) {}
    std::string uri_;
};

}  // namespace memaudit
