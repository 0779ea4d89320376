#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "xvars/dataset/media.hpp"
#include "xvars/dataset/records.hpp"
#include "xvars/model/encoder.hpp"
#include "xvars/model/heads.hpp"
#include "xvars/model/language_model.hpp"
#include "xvars/model/projection.hpp"
#include "xvars/model/tokenizer.hpp"
#include "xvars/training/config.hpp"

namespace xvars::train {

/// Which LM blocks receive adapters: the last ceil(fraction * L) blocks.
/// InvalidArgument unless 0 < fraction <= 1 and rank >= 1.
AdapterSpec select_trainable_parameters(int lm_layers, double fraction, int rank, double alpha = 16.0,
                                        std::uint64_t seed = 0);

/// One stage-2 training example: frozen spatio-temporal features of the clip
/// and a question/answer pair with the clip's ground-truth labels.
struct Stage2Sample {
    std::string clip_id;
    Matrix features;  // (S + T) x D2, from the frozen encoder
    std::string question;
    std::string answer;
    FoulType gt_foul;
    Severity gt_severity;
};

/// Encodes each clip of `split` once with the frozen encoder and pairs it with
/// its triplets. MissingLabel when a triplet's clip lacks ground truth.
std::vector<Stage2Sample> build_stage2_samples(const data::Dataset& dataset, data::Split split,
                                               const VisionEncoder& encoder, int frames_per_clip,
                                               const data::MediaReader& reader = data::FileMediaReader());

struct FrozenGroup {
    std::string name;
    std::string digest_before;
    std::string digest_after;
};

/// Freeze bookkeeping. trainable_count / total_count cover the base language
/// model only; adapter and projection parameters are reported separately.
struct FreezeReport {
    std::vector<FrozenGroup> groups;
    std::string frozen_parameter_digest_before;
    std::string frozen_parameter_digest_after;
    long long trainable_count = 0;
    long long total_count = 0;
    double fraction = 0.0;
    double configured_fraction = 0.0;
    long long adapter_count = 0;
    long long projection_count = 0;
    int lm_layers = 0;
    std::vector<int> adapted_layers;

    bool frozen_intact() const { return frozen_parameter_digest_before == frozen_parameter_digest_after; }
};

/// Every prompt fed to the language model during stage 2, with the labels
/// that were injected into it.
struct CapturedPrompt {
    int epoch = 0;
    long long step = 0;
    std::string clip_id;
    const PromptSequence* prompt = nullptr;
    FoulType injected_foul;
    Severity injected_severity;
};
using PromptCapture = std::function<void(const CapturedPrompt&)>;

struct Stage2Result {
    std::shared_ptr<Projection> projection;
    std::shared_ptr<ToyLanguageModel> language_model;
    std::shared_ptr<Tokenizer> tokenizer;
    FreezeReport freeze;
    std::vector<double> step_losses;
    std::vector<double> epoch_losses;
    std::vector<double> pretrain_losses;
};

/// Vocabulary over the questions and answers of `samples`.
Tokenizer build_tokenizer(const std::vector<Stage2Sample>& samples);

/// Trains projection and adapters with ground-truth labels in the prompt and
/// the loss restricted to answer tokens. The encoder and heads are only
/// digested, never updated; FrozenViolation if any frozen group changed.
Stage2Result train_stage2(const std::vector<Stage2Sample>& samples, const ToyVisionEncoder& encoder,
                          const ClassificationHeads& heads, const Stage2Config& cfg,
                          const PromptCapture& capture = {});

}  // namespace xvars::train
