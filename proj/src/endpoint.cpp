#include "memaudit/endpoint.hpp"

#include "memaudit/error.hpp"

namespace memaudit {

namespace {

std::size_t count_of(std::string_view haystack, std::string_view needle)
{
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1))
        ++n;
    return n;
}

}  // namespace

std::string expand_template(std::string_view tmpl, std::string_view slot, std::string_view value)
{
    std::string out(tmpl);
    if (auto pos = out.find(slot); pos != std::string::npos)
        out.replace(pos, slot.size(), value);
    return out;
}

void ArchiveEndpoint::validate() const
{
    if (count_of(timemap_template, kOriginalSlot) != 1)
        throw Error(Errc::InvalidArgument, "timemap template needs exactly one {original} slot: " + timemap_template);
    if (count_of(replay_template, kOriginalSlot) != 1 || count_of(replay_template, kTimestampSlot) != 1)
        throw Error(Errc::InvalidArgument,
                    "replay template needs one {timestamp} and one {original} slot: " + replay_template);
    if (archive_hosts.empty())
        throw Error(Errc::InvalidArgument, "at least one archive host is required");
}

std::string ArchiveEndpoint::timemap_uri(const OriginalUri& original) const
{
    return expand_template(timemap_template, kOriginalSlot, original.str());
}

std::string ArchiveEndpoint::replay_uri(std::string_view timestamp, std::string_view original) const
{
    return expand_template(expand_template(replay_template, kTimestampSlot, timestamp), kOriginalSlot, original);
}

std::string ArchiveEndpoint::replay_host() const
{
    return host_of(replay_uri("20000101000000", "http://x/"));
}

}  // namespace memaudit
