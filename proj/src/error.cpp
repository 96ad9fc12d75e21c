#include "kgx/error.hpp"

namespace kgx {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateId: return "DUPLICATE_ID";
        case ErrorCode::UnknownLabel: return "UNKNOWN_LABEL";
        case ErrorCode::UnknownEdgeType: return "UNKNOWN_EDGE_TYPE";
        case ErrorCode::MissingEndpoint: return "MISSING_ENDPOINT";
        case ErrorCode::LabelConstraintViolation: return "LABEL_CONSTRAINT";
        case ErrorCode::UnknownNode: return "UNKNOWN_NODE";
        case ErrorCode::DepthExceeded: return "DEPTH_EXCEEDED";
        case ErrorCode::SnapshotFormat: return "SNAPSHOT_FORMAT";
        case ErrorCode::UnknownChunk: return "UNKNOWN_CHUNK";
        case ErrorCode::EmptyIndex: return "EMPTY_INDEX";
        case ErrorCode::ZeroContent: return "ZERO_CONTENT";
        case ErrorCode::ProviderError: return "PROVIDER_ERROR";
        case ErrorCode::RerankerUnavailable: return "RERANKER_UNAVAILABLE";
        case ErrorCode::FileUnreadable: return "FILE_UNREADABLE";
        case ErrorCode::AllRecordsInvalid: return "ALL_RECORDS_INVALID";
        case ErrorCode::EmptyContent: return "EMPTY_CONTENT";
        case ErrorCode::CycleDetected: return "CYCLE_DETECTED";
        case ErrorCode::InvalidThesaurus: return "INVALID_THESAURUS";
        case ErrorCode::AlreadyPopulated: return "ALREADY_POPULATED";
        case ErrorCode::InvalidRecord: return "INVALID_RECORD";
        case ErrorCode::InvalidArgument: return "ARG_SCHEMA";
        case ErrorCode::UnknownTool: return "UNKNOWN_TOOL";
        case ErrorCode::NoRelevantPublications: return "NO_RELEVANT_PUBLICATIONS";
        case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
        case ErrorCode::Timeout: return "TIMEOUT";
        case ErrorCode::MalformedAction: return "MALFORMED_ACTION";
        case ErrorCode::PolicyTimeout: return "POLICY_TIMEOUT";
        case ErrorCode::PolicyFailure: return "POLICY_FAILURE";
        case ErrorCode::SessionClosed: return "SESSION_CLOSED";
        case ErrorCode::NotFound: return "NOT_FOUND";
        case ErrorCode::AlreadyExists: return "ALREADY_EXISTS";
    }
    return "UNKNOWN";
}

}  // namespace kgx
