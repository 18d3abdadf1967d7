#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cocot {

enum class ErrorCode {
    DuplicateOrdinal,
    EmptyStepText,
    UnknownStep,
    MergeNonAdjacent,
    EmptyReplacementText,
    NotStructural,
    CyclicDependency,
    IllegalTransition,
    NoStepsFound,
    NonIncreasingOrdinals,
    PurposeStateMismatch,
    BackendUnreachable,
    BackendMalformedReply,
    ScriptMiss,
    FixtureSchemaError,
    Cancelled,
    IdenticalTexts,
    Precondition,
    RegeneratedWrongSteps,
    StaleStepsRemain,
    EmptyChain,
    StoreUnwritable,
    EnvelopeCorrupt,
    SessionNotFound,
    TranscriptMismatch,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateOrdinal: return "DuplicateOrdinal";
        case ErrorCode::EmptyStepText: return "EmptyStepText";
        case ErrorCode::UnknownStep: return "UnknownStep";
        case ErrorCode::MergeNonAdjacent: return "MergeNonAdjacent";
        case ErrorCode::EmptyReplacementText: return "EmptyReplacementText";
        case ErrorCode::NotStructural: return "NotStructural";
        case ErrorCode::CyclicDependency: return "CyclicDependency";
        case ErrorCode::IllegalTransition: return "IllegalTransition";
        case ErrorCode::NoStepsFound: return "NoStepsFound";
        case ErrorCode::NonIncreasingOrdinals: return "NonIncreasingOrdinals";
        case ErrorCode::PurposeStateMismatch: return "PurposeStateMismatch";
        case ErrorCode::BackendUnreachable: return "BackendUnreachable";
        case ErrorCode::BackendMalformedReply: return "BackendMalformedReply";
        case ErrorCode::ScriptMiss: return "ScriptMiss";
        case ErrorCode::FixtureSchemaError: return "FixtureSchemaError";
        case ErrorCode::Cancelled: return "Cancelled";
        case ErrorCode::IdenticalTexts: return "IdenticalTexts";
        case ErrorCode::Precondition: return "Precondition";
        case ErrorCode::RegeneratedWrongSteps: return "RegeneratedWrongSteps";
        case ErrorCode::StaleStepsRemain: return "StaleStepsRemain";
        case ErrorCode::EmptyChain: return "EmptyChain";
        case ErrorCode::StoreUnwritable: return "StoreUnwritable";
        case ErrorCode::EnvelopeCorrupt: return "EnvelopeCorrupt";
        case ErrorCode::SessionNotFound: return "SessionNotFound";
        case ErrorCode::TranscriptMismatch: return "TranscriptMismatch";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (engine, service, tests) can branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cocot
