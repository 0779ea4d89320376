#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xvars/model/labels.hpp"
#include "xvars/model/projection.hpp"
#include "xvars/model/tokenizer.hpp"

namespace xvars {

inline constexpr std::string_view kUserMarker = "USER: ";
inline constexpr std::string_view kAssistantMarker = " Assistant:";

enum class SegmentKind { Text, Visual };

struct PromptSegment {
    SegmentKind kind = SegmentKind::Text;
    std::string text;            // text segments only
    std::vector<int> token_ids;  // text segments only
    VisualTokens visual;         // visual segments only

    Eigen::Index length() const {
        return kind == SegmentKind::Text ? static_cast<Eigen::Index>(token_ids.size()) : visual.count();
    }
};

/// Model input laid out as
///   text("USER: <question> <foul> <severity> ") | visual(w) | text(" Assistant:") [| text(answer)]
/// answer_mask has one flag per sequence position and is true exactly on the
/// answer positions.
struct PromptSequence {
    std::vector<PromptSegment> segments;
    std::vector<bool> answer_mask;

    Eigen::Index length() const;
    Eigen::Index visual_positions() const;
    /// Concatenated text with each visual segment shown as `placeholder`.
    std::string rendered_text(std::string_view placeholder = "<w>") const;
    /// All token ids in order; visual positions are reported as -1.
    std::vector<int> flat_token_ids() const;
};

/// "USER: " + question + " " + foul + " " + severity + " ".
std::string render_user_turn(std::string_view question, FoulType foul, Severity severity);

/// EmptyInput when the question is empty or w has no rows.
PromptSequence assemble_prompt(std::string_view question, FoulType foul, Severity severity, const VisualTokens& w,
                               const Tokenizer& tokenizer, std::optional<std::string_view> answer = std::nullopt);

/// Follow-up turn: appends the previous assistant reply, then
/// " USER: <message> Assistant:". Visual tokens and label text stay in the
/// first turn only.
PromptSequence continue_conversation(PromptSequence history, std::string_view assistant_reply,
                                     std::string_view user_message, const Tokenizer& tokenizer);

}  // namespace xvars
