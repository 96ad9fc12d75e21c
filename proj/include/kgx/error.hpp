#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kgx {

// Machine-readable failure categories shared by every module. The string form
// (see to_string) is what crosses process and tool boundaries.
enum class ErrorCode {
    // graphstore
    DuplicateId,
    UnknownLabel,
    UnknownEdgeType,
    MissingEndpoint,
    LabelConstraintViolation,
    UnknownNode,
    DepthExceeded,
    SnapshotFormat,
    // retrieval
    UnknownChunk,
    EmptyIndex,
    ZeroContent,
    ProviderError,
    RerankerUnavailable,
    // ingest
    FileUnreadable,
    AllRecordsInvalid,
    EmptyContent,
    CycleDetected,
    InvalidThesaurus,
    AlreadyPopulated,
    InvalidRecord,
    // tools / agent / gateway
    InvalidArgument,
    UnknownTool,
    NoRelevantPublications,
    InvalidConfig,
    Timeout,
    // agent
    MalformedAction,
    PolicyTimeout,
    PolicyFailure,
    SessionClosed,
    // gateway
    NotFound,
    AlreadyExists,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace kgx
