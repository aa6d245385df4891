#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rrk {

enum class ErrorCode {
    UnknownTaxonomy,
    UnknownLabel,
    InvalidTaxonomy,
    EmptySentence,
    RemoteUnavailable,
    LabelMismatch,
    NonFiniteLogit,
    GroupTooSmall,
    LengthMismatch,
    EmptyInput,
    UnjudgedRecord,
    JudgeUnavailable,
    AllLabelsUnparseable,
    MalformedLine,
    DuplicateId,
    IoFailure,
    InvariantViolation,
    InvalidValue,
};

std::string_view to_string(ErrorCode code);

// Backend failures map to CLI exit code 3, everything else to 2.
bool is_backend_error(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> line = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    // 1-based line number for errors raised while reading record streams.
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> line_;
};

}  // namespace rrk
