#include "memaudit/error.hpp"

namespace memaudit {

std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::MalformedEntry: return "MalformedEntry";
    case Errc::MissingRole: return "MissingRole";
    case Errc::BadDatetime: return "BadDatetime";
    case Errc::NotArchived: return "NotArchived";
    case Errc::RobotsExcluded: return "RobotsExcluded";
    case Errc::NetworkError: return "NetworkError";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::TimestampMismatch: return "TimestampMismatch";
    case Errc::UnrecognizedShape: return "UnrecognizedShape";
    case Errc::BadTimestamp: return "BadTimestamp";
    case Errc::UnresolvableReference: return "UnresolvableReference";
    case Errc::PageFetchFailed: return "PageFetchFailed";
    case Errc::BridgeUnavailable: return "BridgeUnavailable";
    case Errc::BridgeTimeout: return "BridgeTimeout";
    case Errc::MementoMismatch: return "MementoMismatch";
    case Errc::NoPageFetch: return "NoPageFetch";
    case Errc::DuplicateYear: return "DuplicateYear";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::PortInUse: return "PortInUse";
    case Errc::InvalidManifest: return "InvalidManifest";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code), message_(message)
{
}

Error::Error(Errc code, const std::string& message, std::size_t offset)
    : std::runtime_error(std::string(errc_name(code)) + " at byte " + std::to_string(offset) + ": " + message),
      code_(code),
      message_(message),
      offset_(offset)
{
}

}  // namespace memaudit
