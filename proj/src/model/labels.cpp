#include "xvars/model/labels.hpp"

#include <string>

#include "xvars/common/error.hpp"

namespace xvars {

FoulType foul_type_from_index(int index) {
    if (index < 0 || index >= kFoulTypeCount) {
        fail(ErrorCode::InvalidLabel, "foul type index " + std::to_string(index) + " out of range");
    }
    return static_cast<FoulType>(index);
}

Severity severity_from_index(int index) {
    if (index < 0 || index >= kSeverityCount) {
        fail(ErrorCode::InvalidLabel, "severity index " + std::to_string(index) + " out of range");
    }
    return static_cast<Severity>(index);
}

std::optional<FoulType> parse_foul_type(std::string_view name) {
    for (int i = 0; i < kFoulTypeCount; ++i) {
        if (kFoulTypeNames[static_cast<std::size_t>(i)] == name) {
            return static_cast<FoulType>(i);
        }
    }
    return std::nullopt;
}

std::optional<Severity> parse_severity(std::string_view name) {
    for (int i = 0; i < kSeverityCount; ++i) {
        if (kSeverityNames[static_cast<std::size_t>(i)] == name) {
            return static_cast<Severity>(i);
        }
    }
    return std::nullopt;
}

}  // namespace xvars
