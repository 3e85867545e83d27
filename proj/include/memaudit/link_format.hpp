#pragma once

#include "memaudit/time.hpp"
#include "memaudit/uri.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace memaudit {

enum class MementoRel : unsigned {
    Memento = 1u << 0,
    FirstMemento = 1u << 1,
    LastMemento = 1u << 2,
};

/// Subset of {memento, first-memento, last-memento}.
class RelSet {
public:
    RelSet() = default;
    RelSet(std::initializer_list<MementoRel> rels)
    {
        for (auto r : rels)
            insert(r);
    }

    void insert(MementoRel r) noexcept { bits_ |= static_cast<unsigned>(r); }
    bool contains(MementoRel r) const noexcept { return (bits_ & static_cast<unsigned>(r)) != 0; }
    bool empty() const noexcept { return bits_ == 0; }

    /// Link-format relation value: "memento", "first memento",
    /// "last memento" or "first last memento".
    std::string to_link_value() const;

    bool operator==(const RelSet&) const = default;

private:
    unsigned bits_ = 0;
};

struct MementoRecord {
    std::string uri;
    UtcTime datetime;
    RelSet rels;

    bool operator==(const MementoRecord&) const = default;
};

/// Datetime ascending, ties broken by URI byte order.
bool memento_order(const MementoRecord& a, const MementoRecord& b);

struct TimeMap {
    OriginalUri original;
    std::string timegate_uri;
    std::string timemap_uri;
    std::optional<std::string> timebundle_uri;
    std::vector<MementoRecord> mementos;  // sorted by memento_order

    bool operator==(const TimeMap&) const = default;
};

/// Parses an application/link-format TimeMap.
///
/// Entries are `<URI>; param=value; ...` separated by commas. Relation types
/// are space-separated tokens, so rel="first memento" yields
/// {memento, first-memento}. rel="self" is read as the timemap role, which is
/// how current Wayback deployments label it. Unknown relation types and
/// parameters are ignored. Out-of-order mementos are sorted.
///
/// Throws Error with MalformedEntry (syntax, duplicate role; carries the byte
/// offset), MissingRole, or BadDatetime.
TimeMap parse_link_format(std::string_view body);

/// Canonical serialization: timebundle, original, timemap, timegate, then
/// mementos ascending, one entry per line. parse_link_format(serialize(t)) == t.
std::string serialize_link_format(const TimeMap& tm);

}  // namespace memaudit
