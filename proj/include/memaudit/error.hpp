#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace memaudit {

enum class Errc {
    // memento_client
    MalformedEntry,
    MissingRole,
    BadDatetime,
    NotArchived,
    RobotsExcluded,
    NetworkError,
    ProtocolError,
    // sampler
    TimestampMismatch,
    // rewriter
    UnrecognizedShape,
    BadTimestamp,
    UnresolvableReference,
    // capture
    PageFetchFailed,
    BridgeUnavailable,
    BridgeTimeout,
    MementoMismatch,
    // analysis
    NoPageFetch,
    DuplicateYear,
    InsufficientData,
    // fixture_archive
    PortInUse,
    InvalidManifest,
    // shared
    InvalidArgument,
    IoError,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the Errc codes above so
/// callers (and the CLI's exit-code mapping) can branch on the kind without
/// parsing messages.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message);
    Error(Errc code, const std::string& message, std::size_t offset);

    Errc code() const noexcept { return code_; }
    /// what() without the code prefix.
    const std::string& message() const noexcept { return message_; }
    /// Byte offset into the parsed input, for parser errors.
    std::optional<std::size_t> offset() const noexcept { return offset_; }

private:
    Errc code_;
    std::string message_;
    std::optional<std::size_t> offset_;
};

}  // namespace memaudit
