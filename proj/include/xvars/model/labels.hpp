#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace xvars {

enum class FoulType : int {
    Tackling = 0,
    Holding,
    Pushing,
    StandingTackling,
    Elbowing,
    Dive,
    Challenge,
    HighLeg,
};

enum class Severity : int {
    NoOffence = 0,
    OffenceNoCard,
    OffenceYellowCard,
    OffenceRedCard,
};

inline constexpr int kFoulTypeCount = 8;
inline constexpr int kSeverityCount = 4;

inline constexpr std::array<std::string_view, kFoulTypeCount> kFoulTypeNames = {
    "Tackling", "Holding", "Pushing", "Standing tackling", "Elbowing", "Dive", "Challenge", "High leg",
};

inline constexpr std::array<std::string_view, kSeverityCount> kSeverityNames = {
    "No offence", "Offence + No card", "Offence + Yellow card", "Offence + Red card",
};

constexpr int index_of(FoulType f) { return static_cast<int>(f); }
constexpr int index_of(Severity s) { return static_cast<int>(s); }

constexpr std::string_view display_name(FoulType f) { return kFoulTypeNames[static_cast<std::size_t>(f)]; }
constexpr std::string_view display_name(Severity s) { return kSeverityNames[static_cast<std::size_t>(s)]; }

/// Throws Error(InvalidLabel) when the index is out of range.
FoulType foul_type_from_index(int index);
Severity severity_from_index(int index);

/// Exact canonical display string lookup.
std::optional<FoulType> parse_foul_type(std::string_view name);
std::optional<Severity> parse_severity(std::string_view name);

}  // namespace xvars
