#pragma once

#include <stdexcept>
#include <string>

namespace tablerag {

enum class ErrorKind {
    MalformedTable,
    InvalidChunkParams,
    DuplicateDocId,
    DimensionMismatch,
    ZeroVector,
    EmbedderFailure,
    RerankerFailure,
    IngestFailure,
    WriteRejected,
    TransportError,
    MalformedResponse,
    UnknownPromptKind,
    ProtocolViolation,
    SchemaViolation,
    MissingReference,
    StoreNotFound,
    ConfigError,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::MalformedTable: return "MalformedTable";
        case ErrorKind::InvalidChunkParams: return "InvalidChunkParams";
        case ErrorKind::DuplicateDocId: return "DuplicateDocId";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ZeroVector: return "ZeroVector";
        case ErrorKind::EmbedderFailure: return "EmbedderFailure";
        case ErrorKind::RerankerFailure: return "RerankerFailure";
        case ErrorKind::IngestFailure: return "IngestFailure";
        case ErrorKind::WriteRejected: return "WriteRejected";
        case ErrorKind::TransportError: return "TransportError";
        case ErrorKind::MalformedResponse: return "MalformedResponse";
        case ErrorKind::UnknownPromptKind: return "UnknownPromptKind";
        case ErrorKind::ProtocolViolation: return "ProtocolViolation";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::MissingReference: return "MissingReference";
        case ErrorKind::StoreNotFound: return "StoreNotFound";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace tablerag
