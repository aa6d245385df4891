#include "rrk/error.hpp"

namespace rrk {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownTaxonomy: return "UnknownTaxonomy";
        case ErrorCode::UnknownLabel: return "UnknownLabel";
        case ErrorCode::InvalidTaxonomy: return "InvalidTaxonomy";
        case ErrorCode::EmptySentence: return "EmptySentence";
        case ErrorCode::RemoteUnavailable: return "RemoteUnavailable";
        case ErrorCode::LabelMismatch: return "LabelMismatch";
        case ErrorCode::NonFiniteLogit: return "NonFiniteLogit";
        case ErrorCode::GroupTooSmall: return "GroupTooSmall";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::UnjudgedRecord: return "UnjudgedRecord";
        case ErrorCode::JudgeUnavailable: return "JudgeUnavailable";
        case ErrorCode::AllLabelsUnparseable: return "AllLabelsUnparseable";
        case ErrorCode::MalformedLine: return "MalformedLine";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::InvalidValue: return "InvalidValue";
    }
    return "Unknown";
}

bool is_backend_error(ErrorCode code) {
    return code == ErrorCode::RemoteUnavailable || code == ErrorCode::JudgeUnavailable ||
           code == ErrorCode::LabelMismatch;
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> line) {
    std::string out(to_string(code));
    if (line) out += " (line " + std::to_string(*line) + ")";
    out += ": ";
    out += message;
    return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace rrk
