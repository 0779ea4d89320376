#include "xvars/common/error.hpp"

namespace xvars {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::DimensionMismatch: return "dimension-mismatch";
        case ErrorCode::NonFinite: return "non-finite";
        case ErrorCode::EmptyInput: return "empty-input";
        case ErrorCode::InvalidLabel: return "invalid-label";
        case ErrorCode::MissingLabel: return "missing-label";
        case ErrorCode::ContextOverflow: return "context-overflow";
        case ErrorCode::DecodeFailure: return "decode-failure";
        case ErrorCode::Schema: return "schema";
        case ErrorCode::DanglingReference: return "dangling-reference";
        case ErrorCode::DuplicateRecord: return "duplicate-record";
        case ErrorCode::MissingFile: return "missing-file";
        case ErrorCode::DigestMismatch: return "digest-mismatch";
        case ErrorCode::FrozenViolation: return "frozen-violation";
        case ErrorCode::EmptyMask: return "empty-mask";
        case ErrorCode::Divergence: return "divergence";
        case ErrorCode::DegenerateSplit: return "degenerate-split";
        case ErrorCode::InsufficientItems: return "insufficient-items";
        case ErrorCode::OrphanRecord: return "orphan-record";
        case ErrorCode::AlignmentMismatch: return "alignment-mismatch";
        case ErrorCode::UnreadableMedia: return "unreadable-media";
        case ErrorCode::OutOfBounds: return "out-of-bounds";
        case ErrorCode::Transport: return "transport";
        case ErrorCode::Config: return "config";
        case ErrorCode::Io: return "io";
        case ErrorCode::NotFound: return "not-found";
        case ErrorCode::Conflict: return "conflict";
    }
    return "unknown";
}

}  // namespace xvars
