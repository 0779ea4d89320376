#include "xvars/training/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xvars/common/error.hpp"
#include "xvars/common/random.hpp"
#include "xvars/dataset/sampling.hpp"
#include "xvars/nn/optim.hpp"
#include "xvars/training/loss.hpp"

namespace xvars::train {

std::vector<LabeledClip> load_labeled_clips(const data::Dataset& dataset, data::Split split, int frames_per_clip,
                                            const data::MediaReader& reader) {
    std::vector<LabeledClip> out;
    for (const auto* c : dataset.clips_in(split)) {
        if (!c->gt_foul || !c->gt_severity) {
            fail(ErrorCode::MissingLabel, "clip '" + c->clip_id + "' has no ground-truth foul type or severity");
        }
        out.push_back({data::sample_frames(dataset, *c, frames_per_clip, reader), *c->gt_foul, *c->gt_severity});
    }
    return out;
}

Stage1Result initialize_stage1(const Stage1Config& cfg) {
    cfg.validate();
    Rng root(cfg.seed);
    const auto encoder_seed = root.next();
    const auto heads_seed = root.next();
    Stage1Result result;
    result.encoder = std::make_shared<ToyVisionEncoder>(cfg.encoder, encoder_seed);
    result.heads = std::make_shared<ClassificationHeads>(cfg.encoder.feature_dim, heads_seed);
    return result;
}

Stage1Result train_stage1(const std::vector<LabeledClip>& clips, const Stage1Config& cfg,
                          const Stage1Observer& observer) {
    auto result = initialize_stage1(cfg);
    Rng order_rng(cfg.seed);
    order_rng.next();  // encoder and heads seeds
    order_rng.next();
    order_rng = order_rng.fork(3);
    if (cfg.epochs == 0) {
        return result;
    }
    if (clips.empty()) {
        fail(ErrorCode::EmptyInput, "stage1: no training clips");
    }

    // Patches never change, so cut them once.
    const auto& ecfg = cfg.encoder;
    std::vector<std::vector<Matrix>> patches(clips.size());
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const auto& clip = clips[i].clip;
        if (clip.height() != ecfg.image_height || clip.width() != ecfg.image_width) {
            fail(ErrorCode::DimensionMismatch, "stage1: clip " + clip.clip_id() + " is " +
                                                   std::to_string(clip.height()) + "x" + std::to_string(clip.width()) +
                                                   ", encoder expects " + std::to_string(ecfg.image_height) + "x" +
                                                   std::to_string(ecfg.image_width));
        }
        for (int t = 0; t < clip.frames(); ++t) {
            patches[i].push_back(ToyVisionEncoder::patchify(clip.frame(t), clip.height(), clip.width(),
                                                            clip.channels(), ecfg.patch_size));
        }
    }

    ParameterList params = result.encoder->parameters();
    for (auto* p : result.heads->parameters()) params.push_back(p);
    nn::GradientBuffer grads(params);
    nn::Adam adam(params, {cfg.learning_rate});

    std::vector<std::size_t> order(clips.size());
    const auto micro = static_cast<std::size_t>(cfg.micro_batch_size > 0 ? cfg.micro_batch_size : cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const auto batch = end - start;
            const double weight = 1.0 / static_cast<double>(batch);
            Stage1StepLog log;
            log.epoch = epoch;
            log.step = result.steps;
            log.foul_logits.resize(static_cast<Eigen::Index>(batch), kFoulTypeCount);
            log.severity_logits.resize(static_cast<Eigen::Index>(batch), kSeverityCount);
            grads.clear();
            try {
                for (std::size_t m0 = start; m0 < end; m0 += micro) {
                    const auto m1 = std::min(end, m0 + micro);
                    ad::Tape tape(true);
                    std::vector<ad::Var> losses;
                    for (std::size_t k = m0; k < m1; ++k) {
                        const auto idx = order[k];
                        std::vector<ad::Var> features;
                        for (const auto& p : patches[idx]) features.push_back(result.encoder->forward(tape, p).feature);
                        const auto f = ad::mean_rows(ad::concat_rows(features));
                        const auto logits = result.heads->forward(tape, f);
                        const auto row = static_cast<Eigen::Index>(k - start);
                        log.foul_logits.row(row) = logits.foul.value();
                        log.severity_logits.row(row) = logits.severity.value();
                        log.foul_labels.push_back(clips[idx].foul);
                        log.severity_labels.push_back(clips[idx].severity);
                        losses.push_back(multitask_loss(logits.foul, logits.severity, clips[idx].foul,
                                                        clips[idx].severity, weight));
                    }
                    const auto total = ad::sum_scalars(losses);
                    log.loss += total.value()(0, 0);
                    tape.backward(total);
                    grads.add(tape);
                }
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NonFinite) throw;
                fail(ErrorCode::Divergence, "stage1: step " + std::to_string(result.steps) + ": " + e.what());
            }
            if (!std::isfinite(log.loss) || !grads.all_finite()) {
                fail(ErrorCode::Divergence, "stage1: non-finite loss or gradient at step " +
                                                std::to_string(result.steps));
            }
            adam.step(grads);
            epoch_loss += log.loss * static_cast<double>(batch);
            if (observer) observer(log);
            ++result.steps;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(clips.size()));
    }
    return result;
}

}  // namespace xvars::train
