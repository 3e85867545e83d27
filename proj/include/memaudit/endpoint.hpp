#pragma once

#include "memaudit/uri.hpp"

#include <set>
#include <string>
#include <string_view>

namespace memaudit {

inline constexpr std::string_view kOriginalSlot = "{original}";
inline constexpr std::string_view kTimestampSlot = "{timestamp}";

/// Where an archive lives and how its URIs are shaped.
///
/// timemap_template carries one {original} slot; replay_template carries one
/// {timestamp} and one {original} slot, e.g.
/// "http://web.archive.org/web/{timestamp}/{original}".
struct ArchiveEndpoint {
    std::string timemap_template;
    std::string replay_template;
    std::set<std::string> archive_hosts;           // lower-case hostnames
    std::set<std::string> replay_chrome_prefixes;  // path prefixes, e.g. "/static/"

    /// Throws Error{InvalidArgument} when a template is missing a slot or no
    /// archive host is configured.
    void validate() const;

    std::string timemap_uri(const OriginalUri& original) const;
    std::string replay_uri(std::string_view timestamp, std::string_view original) const;

    /// Hostname of the replay template (the host replay URIs are built on).
    std::string replay_host() const;

    bool operator==(const ArchiveEndpoint&) const = default;
};

std::string expand_template(std::string_view tmpl, std::string_view slot, std::string_view value);

}  // namespace memaudit
