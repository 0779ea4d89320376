#include "xvars/model/xvars_model.hpp"

#include "xvars/common/error.hpp"

namespace xvars {

XVarsModel::XVarsModel(std::shared_ptr<const VisionEncoder> encoder, std::shared_ptr<const ClassificationHeads> heads,
                       std::shared_ptr<const Projection> projection,
                       std::shared_ptr<const ToyLanguageModel> language_model,
                       std::shared_ptr<const Tokenizer> tokenizer)
    : encoder_(std::move(encoder)),
      heads_(std::move(heads)),
      projection_(std::move(projection)),
      language_model_(std::move(language_model)),
      tokenizer_(std::move(tokenizer)) {
    require(encoder_ != nullptr && heads_ != nullptr, ErrorCode::InvalidArgument,
            "model needs at least an encoder and classification heads");
    require(encoder_->feature_dim() == heads_->feature_dim(), ErrorCode::DimensionMismatch,
            "encoder feature width does not match the classification heads");
    if (projection_) {
        require(projection_->input_dim() == encoder_->hidden_dim(), ErrorCode::DimensionMismatch,
                "projection input width does not match the encoder hidden width");
    }
    if (projection_ && language_model_) {
        require(projection_->output_dim() == language_model_->config().width, ErrorCode::DimensionMismatch,
                "projection output width does not match the language model width");
    }
}

ClassifierBundle XVarsModel::classify_clip(const VideoClip& clip) const {
    const auto encoded = encode_video(clip, *encoder_);
    return classify(pool_video_level(encoded.frame_features), *heads_);
}

PreparedClip XVarsModel::prepare(const VideoClip& clip) const {
    const auto encoded = encode_video(clip, *encoder_);
    PreparedClip out;
    out.clip_id = clip.clip_id();
    out.classification = classify(pool_video_level(encoded.frame_features), *heads_);
    out.features = build_spatiotemporal(encoded.hidden_states);
    if (projection_) {
        out.visual = project_features(out.features, *projection_, clip.clip_id());
    }
    return out;
}

PromptSequence XVarsModel::build_prompt(const PreparedClip& clip, std::string_view question) const {
    require_language_model();
    return assemble_prompt(question, clip.classification.predicted_foul, clip.classification.predicted_severity,
                           clip.visual, *tokenizer_);
}

std::string XVarsModel::generate(const PromptSequence& prompt, const InferenceOptions& options) const {
    require_language_model();
    return generate_answer(prompt, *language_model_, *tokenizer_, options.max_new_tokens, options.decoding);
}

std::string XVarsModel::answer(const PreparedClip& clip, std::string_view question, const InferenceOptions& options,
                               const PromptObserver& observer) const {
    const auto prompt = build_prompt(clip, question);
    if (observer) {
        observer(prompt, clip.classification.predicted_foul, clip.classification.predicted_severity);
    }
    return generate(prompt, options);
}

const Projection& XVarsModel::projection() const {
    require_language_model();
    return *projection_;
}

const ToyLanguageModel& XVarsModel::language_model() const {
    require_language_model();
    return *language_model_;
}

const Tokenizer& XVarsModel::tokenizer() const {
    require_language_model();
    return *tokenizer_;
}

void XVarsModel::require_language_model() const {
    if (!has_language_model()) {
        fail(ErrorCode::InvalidArgument, "model has no language model attached (stage-1 checkpoint?)");
    }
}

}  // namespace xvars
