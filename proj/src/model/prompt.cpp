#include "xvars/model/prompt.hpp"

#include "xvars/common/error.hpp"

namespace xvars {
namespace {

PromptSegment text_segment(std::string text, const Tokenizer& tokenizer) {
    PromptSegment seg;
    seg.kind = SegmentKind::Text;
    seg.token_ids = tokenizer.encode(text);
    seg.text = std::move(text);
    return seg;
}

void append(PromptSequence& prompt, PromptSegment seg, bool is_answer) {
    prompt.answer_mask.insert(prompt.answer_mask.end(), static_cast<std::size_t>(seg.length()), is_answer);
    prompt.segments.push_back(std::move(seg));
}

}  // namespace

Eigen::Index PromptSequence::length() const {
    Eigen::Index n = 0;
    for (const auto& s : segments) n += s.length();
    return n;
}

Eigen::Index PromptSequence::visual_positions() const {
    Eigen::Index n = 0;
    for (const auto& s : segments) {
        if (s.kind == SegmentKind::Visual) n += s.length();
    }
    return n;
}

std::string PromptSequence::rendered_text(std::string_view placeholder) const {
    std::string out;
    for (const auto& s : segments) {
        if (s.kind == SegmentKind::Text) {
            out += s.text;
        } else {
            out += placeholder;
        }
    }
    return out;
}

std::vector<int> PromptSequence::flat_token_ids() const {
    std::vector<int> ids;
    for (const auto& s : segments) {
        if (s.kind == SegmentKind::Text) {
            ids.insert(ids.end(), s.token_ids.begin(), s.token_ids.end());
        } else {
            ids.insert(ids.end(), static_cast<std::size_t>(s.length()), -1);
        }
    }
    return ids;
}

std::string render_user_turn(std::string_view question, FoulType foul, Severity severity) {
    std::string text(kUserMarker);
    text += question;
    text += ' ';
    text += display_name(foul);
    text += ' ';
    text += display_name(severity);
    text += ' ';
    return text;
}

PromptSequence assemble_prompt(std::string_view question, FoulType foul, Severity severity, const VisualTokens& w,
                               const Tokenizer& tokenizer, std::optional<std::string_view> answer) {
    if (question.empty()) {
        fail(ErrorCode::EmptyInput, "assemble_prompt: empty question");
    }
    if (w.count() == 0) {
        fail(ErrorCode::EmptyInput, "assemble_prompt: no visual tokens");
    }
    PromptSequence prompt;
    append(prompt, text_segment(render_user_turn(question, foul, severity), tokenizer), false);
    PromptSegment visual;
    visual.kind = SegmentKind::Visual;
    visual.visual = w;
    append(prompt, std::move(visual), false);
    append(prompt, text_segment(std::string(kAssistantMarker), tokenizer), false);
    if (answer) {
        append(prompt, text_segment(std::string(*answer), tokenizer), true);
    }
    return prompt;
}

PromptSequence continue_conversation(PromptSequence history, std::string_view assistant_reply,
                                     std::string_view user_message, const Tokenizer& tokenizer) {
    if (user_message.empty()) {
        fail(ErrorCode::EmptyInput, "continue_conversation: empty message");
    }
    std::fill(history.answer_mask.begin(), history.answer_mask.end(), false);
    append(history, text_segment(" " + std::string(assistant_reply), tokenizer), false);
    std::string turn = " ";
    turn += kUserMarker;
    turn += user_message;
    turn += kAssistantMarker;
    append(history, text_segment(std::move(turn), tokenizer), false);
    return history;
}

}  // namespace xvars
