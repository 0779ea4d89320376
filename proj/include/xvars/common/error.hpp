#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xvars {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    NonFinite,
    EmptyInput,
    InvalidLabel,
    MissingLabel,
    ContextOverflow,
    DecodeFailure,
    Schema,
    DanglingReference,
    DuplicateRecord,
    MissingFile,
    DigestMismatch,
    FrozenViolation,
    EmptyMask,
    Divergence,
    DegenerateSplit,
    InsufficientItems,
    OrphanRecord,
    AlignmentMismatch,
    UnreadableMedia,
    OutOfBounds,
    Transport,
    Config,
    Io,
    NotFound,
    Conflict,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries a category so callers (the
/// CLI exit codes, the HTTP status mapping) can react without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) {
        throw Error(code, message);
    }
}

}  // namespace xvars
