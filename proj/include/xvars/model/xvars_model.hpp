#pragma once

#include <functional>
#include <memory>
#include <string>

#include "xvars/model/encoder.hpp"
#include "xvars/model/heads.hpp"
#include "xvars/model/language_model.hpp"
#include "xvars/model/pooling.hpp"
#include "xvars/model/projection.hpp"
#include "xvars/model/prompt.hpp"

namespace xvars {

/// Everything derived from one clip that does not depend on the question:
/// classifier outputs and the projected visual tokens.
struct PreparedClip {
    std::string clip_id;
    ClassifierBundle classification;
    SpatioTemporalFeatures features;
    VisualTokens visual;
};

struct InferenceOptions {
    int max_new_tokens = 24;
    Decoding decoding = Decoding::greedy();
};

/// Called with every prompt handed to the language model together with the
/// labels injected into it.
using PromptObserver = std::function<void(const PromptSequence&, FoulType, Severity)>;

/// Frozen forward path: encoder -> pooling -> heads / projection -> prompt -> LM.
/// Immutable; any number of threads may call the const methods concurrently.
class XVarsModel {
public:
    XVarsModel(std::shared_ptr<const VisionEncoder> encoder, std::shared_ptr<const ClassificationHeads> heads,
               std::shared_ptr<const Projection> projection = nullptr,
               std::shared_ptr<const ToyLanguageModel> language_model = nullptr,
               std::shared_ptr<const Tokenizer> tokenizer = nullptr);

    bool has_language_model() const { return projection_ && language_model_ && tokenizer_; }

    ClassifierBundle classify_clip(const VideoClip& clip) const;
    PreparedClip prepare(const VideoClip& clip) const;

    /// Prompt carrying the classifier's own predictions.
    PromptSequence build_prompt(const PreparedClip& clip, std::string_view question) const;
    std::string generate(const PromptSequence& prompt, const InferenceOptions& options = {}) const;
    std::string answer(const PreparedClip& clip, std::string_view question, const InferenceOptions& options = {},
                       const PromptObserver& observer = {}) const;

    const VisionEncoder& encoder() const { return *encoder_; }
    const ClassificationHeads& heads() const { return *heads_; }
    const Projection& projection() const;
    const ToyLanguageModel& language_model() const;
    const Tokenizer& tokenizer() const;

private:
    void require_language_model() const;

    std::shared_ptr<const VisionEncoder> encoder_;
    std::shared_ptr<const ClassificationHeads> heads_;
    std::shared_ptr<const Projection> projection_;
    std::shared_ptr<const ToyLanguageModel> language_model_;
    std::shared_ptr<const Tokenizer> tokenizer_;
};

}  // namespace xvars
