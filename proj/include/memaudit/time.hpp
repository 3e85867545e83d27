#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace memaudit {

using UtcTime = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

/// Strict RFC 1123 ("Tue, 20 Jun 2000 18:02:59 GMT"). The weekday must agree
/// with the date. Throws Error{BadDatetime}.
UtcTime parse_rfc1123(std::string_view text);
std::string format_rfc1123(UtcTime t);

/// 14-digit YYYYMMDDHHMMSS archive timestamp. Returns nullopt when the text is
/// not 14 digits or does not name a valid calendar instant.
std::optional<UtcTime> parse_timestamp14(std::string_view text);
std::string format_timestamp14(UtcTime t);

/// "2000-06-20T18:02:59Z"
std::string format_iso8601(UtcTime t);
/// Inverse of format_iso8601; throws Error{InvalidArgument}.
UtcTime parse_iso8601(std::string_view text);

int year_of(UtcTime t);

/// Adds whole calendar months. The day of month is clamped to the last day of
/// the target month (Feb 29 + 12 months = Feb 28) and time of day is kept.
UtcTime add_months(UtcTime t, int months);

}  // namespace memaudit
