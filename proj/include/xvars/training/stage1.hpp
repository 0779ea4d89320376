#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "xvars/dataset/media.hpp"
#include "xvars/dataset/records.hpp"
#include "xvars/model/encoder.hpp"
#include "xvars/model/heads.hpp"
#include "xvars/model/video.hpp"
#include "xvars/training/config.hpp"

namespace xvars::train {

struct LabeledClip {
    VideoClip clip;
    FoulType foul;
    Severity severity;
};

/// Samples every clip of `split` and pairs it with its ground-truth labels.
/// MissingLabel when a clip lacks either label.
std::vector<LabeledClip> load_labeled_clips(const data::Dataset& dataset, data::Split split, int frames_per_clip,
                                            const data::MediaReader& reader = data::FileMediaReader());

/// One optimiser step as seen by an observer: the batch-mean loss that was
/// backpropagated and the per-sample logits and labels it was computed from.
struct Stage1StepLog {
    int epoch = 0;
    long long step = 0;
    double loss = 0.0;
    Matrix foul_logits;      // B x 8
    Matrix severity_logits;  // B x 4
    std::vector<FoulType> foul_labels;
    std::vector<Severity> severity_labels;
};

using Stage1Observer = std::function<void(const Stage1StepLog&)>;

struct Stage1Result {
    std::shared_ptr<ToyVisionEncoder> encoder;
    std::shared_ptr<ClassificationHeads> heads;
    std::vector<double> epoch_losses;  // mean per-sample loss of each epoch
    long long steps = 0;
};

/// Encoder and heads exactly as train_stage1 initialises them for cfg.seed.
Stage1Result initialize_stage1(const Stage1Config& cfg);

/// Builds the toy encoder and heads from cfg.seed and trains them jointly on
/// the summed cross-entropy with Adam. Batches follow a seeded shuffle per
/// epoch; gradients of micro-batches are accumulated so that the update equals
/// that of the full batch. Divergence when the loss or a gradient becomes
/// non-finite.
Stage1Result train_stage1(const std::vector<LabeledClip>& clips, const Stage1Config& cfg,
                          const Stage1Observer& observer = {});

}  // namespace xvars::train
