#pragma once

#include "memaudit/endpoint.hpp"
#include "memaudit/http.hpp"
#include "memaudit/link_format.hpp"

#include <string>
#include <string_view>

namespace memaudit {

inline constexpr std::string_view kDefaultRobotsMarker = "robots.txt";

/// GETs the endpoint's TimeMap for `original` and parses it.
///
/// 404 is NotArchived. 403, or a 200 whose body does not parse as
/// link-format but contains `robots_marker`, is RobotsExcluded. Transport failures and other
/// statuses are NetworkError; parse errors propagate.
TimeMap fetch_timemap(const HttpClient& client, const OriginalUri& original, const ArchiveEndpoint& endpoint,
                      std::string_view robots_marker = kDefaultRobotsMarker);

/// Datetime negotiation: sends Accept-Datetime to the timegate and follows the
/// redirect to the selected memento. The returned datetime comes from the
/// memento's Memento-Datetime header, or its 14-digit URI timestamp.
MementoRecord negotiate_datetime(const HttpClient& client, const std::string& timegate_uri, UtcTime accept,
                                 int max_redirects = 10);

}  // namespace memaudit
