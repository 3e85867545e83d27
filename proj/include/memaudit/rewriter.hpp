#pragma once

#include "memaudit/endpoint.hpp"
#include "memaudit/uri.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace memaudit {

/// A memento addressed through the archive's replay service.
class ReplayUri {
public:
    /// Throws Error{BadTimestamp} for a timestamp that is not a valid
    /// 14-digit UTC instant.
    ReplayUri(const ArchiveEndpoint& endpoint, std::string timestamp, OriginalUri original);

    const std::string& timestamp() const noexcept { return timestamp_; }
    const OriginalUri& original() const noexcept { return original_; }
    const std::string& host() const noexcept { return host_; }
    /// Canonical form: the endpoint's replay template expanded.
    const std::string& str() const noexcept { return uri_; }

    bool operator==(const ReplayUri& other) const noexcept { return uri_ == other.uri_; }

private:
    std::string timestamp_;
    OriginalUri original_;
    std::string host_;
    std::string uri_;
};

enum class HostClass { Archive, Live, ReplayChrome };

std::string_view host_class_name(HostClass c) noexcept;

/// First path segment consisting of exactly 14 digits, if any.
std::optional<std::string> embedded_timestamp(std::string_view uri);

/// Maps an API-style memento URI (".../memento/20110731003335/http://google.com")
/// or an existing replay URI to the endpoint's replay form. Throws
/// UnrecognizedShape or BadTimestamp.
ReplayUri to_replay_uri(std::string_view memento_uri, const ArchiveEndpoint& endpoint);

/// Splits a replay URI into (timestamp, original) by matching it against the
/// replay template. Throws UnrecognizedShape or BadTimestamp.
std::pair<std::string, OriginalUri> parse_replay_uri(std::string_view uri, const ArchiveEndpoint& endpoint);

/// True when `reference` can never produce an archive request (fragment-only,
/// empty, or a data:/blob:/javascript:/mailto: style scheme).
bool is_unfetchable_reference(std::string_view reference);

/// Resolves `reference` against the base memento's original URI and wraps the
/// result in replay form at the base timestamp. References that already are
/// replay URIs are re-stamped with the base timestamp. Throws
/// UnresolvableReference.
ReplayUri rewrite_subresource(const ReplayUri& base, std::string_view reference, const ArchiveEndpoint& endpoint);

HostClass classify_host(std::string_view uri, const ArchiveEndpoint& endpoint);

}  // namespace memaudit
