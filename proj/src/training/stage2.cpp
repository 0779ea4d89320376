#include "xvars/training/stage2.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "xvars/common/digest.hpp"
#include "xvars/common/error.hpp"
#include "xvars/common/random.hpp"
#include "xvars/dataset/sampling.hpp"
#include "xvars/model/pooling.hpp"
#include "xvars/model/prompt.hpp"
#include "xvars/nn/optim.hpp"
#include "xvars/nn/serialize.hpp"
#include "xvars/training/loss.hpp"

namespace xvars::train {
namespace {

ConstParameterList to_const(const ParameterList& params) { return {params.begin(), params.end()}; }

std::string combined_digest(const std::vector<FrozenGroup>& groups, bool after) {
    std::string joined;
    for (const auto& g : groups) joined += g.name + "=" + (after ? g.digest_after : g.digest_before) + "\n";
    return sha256_digest(std::string_view(joined));
}

// Runs `body(sample_index, weight, tape)` over shuffled batches, accumulating
// gradients of micro-batches, and applies one Adam step per batch.
template <class Body>
void run_epochs(std::size_t n, int epochs, int batch_size, int micro_batch_size, Rng& order_rng,
                const ParameterList& params, double learning_rate, std::vector<double>& step_losses,
                std::vector<double>& epoch_losses, const char* what, Body&& body) {
    nn::GradientBuffer grads(params);
    nn::Adam adam(params, {learning_rate});
    std::vector<std::size_t> order(n);
    const auto micro = static_cast<std::size_t>(micro_batch_size > 0 ? micro_batch_size : batch_size);
    long long step = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        order_rng.shuffle(order);
        double epoch_loss = 0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
            const auto end = std::min(n, start + static_cast<std::size_t>(batch_size));
            const double weight = 1.0 / static_cast<double>(end - start);
            grads.clear();
            double loss = 0;
            try {
                for (std::size_t m0 = start; m0 < end; m0 += micro) {
                    const auto m1 = std::min(end, m0 + micro);
                    ad::Tape tape(true);
                    std::vector<ad::Var> losses;
                    for (std::size_t k = m0; k < m1; ++k) losses.push_back(body(order[k], weight, tape, epoch, step));
                    const auto total = ad::sum_scalars(losses);
                    loss += total.value()(0, 0);
                    tape.backward(total);
                    grads.add(tape);
                }
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NonFinite) throw;
                fail(ErrorCode::Divergence, std::string(what) + ": step " + std::to_string(step) + ": " + e.what());
            }
            if (!std::isfinite(loss) || !grads.all_finite()) {
                fail(ErrorCode::Divergence, std::string(what) + ": non-finite loss or gradient at step " +
                                                std::to_string(step));
            }
            adam.step(grads);
            step_losses.push_back(loss);
            epoch_loss += loss * static_cast<double>(end - start);
            ++step;
        }
        epoch_losses.push_back(epoch_loss / static_cast<double>(n));
    }
}

}  // namespace

AdapterSpec select_trainable_parameters(int lm_layers, double fraction, int rank, double alpha,
                                        std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        fail(ErrorCode::InvalidArgument, "trainable fraction must be in (0, 1], got " + std::to_string(fraction));
    }
    if (rank < 1) {
        fail(ErrorCode::InvalidArgument, "adapter rank must be at least 1");
    }
    if (lm_layers < 1) {
        fail(ErrorCode::InvalidArgument, "language model has no layers");
    }
    // The epsilon keeps exact products such as 0.25 * 4 from rounding up.
    const int count = std::clamp(static_cast<int>(std::ceil(fraction * lm_layers - 1e-9)), 1, lm_layers);
    AdapterSpec spec;
    spec.rank = rank;
    spec.alpha = alpha;
    spec.seed = seed;
    for (int l = lm_layers - count; l < lm_layers; ++l) spec.layers.push_back(l);
    return spec;
}

std::vector<Stage2Sample> build_stage2_samples(const data::Dataset& dataset, data::Split split,
                                               const VisionEncoder& encoder, int frames_per_clip,
                                               const data::MediaReader& reader) {
    std::map<std::string, Matrix> cache;
    std::vector<Stage2Sample> out;
    for (const auto* t : dataset.triplets_in(split)) {
        const auto& clip = dataset.clip(t->clip_id);
        if (!clip.gt_foul || !clip.gt_severity) {
            fail(ErrorCode::MissingLabel, "stage2: clip '" + clip.clip_id + "' has no ground-truth labels to inject");
        }
        auto it = cache.find(clip.clip_id);
        if (it == cache.end()) {
            const auto video = data::sample_frames(dataset, clip, frames_per_clip, reader);
            const auto encoded = encode_video(video, encoder);
            it = cache.emplace(clip.clip_id, build_spatiotemporal(encoded.hidden_states).combined).first;
        }
        out.push_back({clip.clip_id, it->second, t->question, t->answer, *clip.gt_foul, *clip.gt_severity});
    }
    return out;
}

Tokenizer build_tokenizer(const std::vector<Stage2Sample>& samples) {
    std::vector<std::string> corpus;
    corpus.reserve(samples.size() * 2);
    for (const auto& s : samples) {
        corpus.push_back(s.question);
        corpus.push_back(s.answer);
    }
    return Tokenizer::build(corpus);
}

Stage2Result train_stage2(const std::vector<Stage2Sample>& samples, const ToyVisionEncoder& encoder,
                          const ClassificationHeads& heads, const Stage2Config& cfg, const PromptCapture& capture) {
    cfg.validate();
    if (samples.empty()) {
        fail(ErrorCode::EmptyInput, "stage2: no training samples");
    }
    Rng root(cfg.seed);
    const auto lm_seed = root.next();
    const auto projection_seed = root.next();
    const auto adapter_seed = root.next();
    Rng pretrain_order = root.fork(4);
    Rng order_rng = root.fork(5);

    Stage2Result result;
    result.tokenizer = std::make_shared<Tokenizer>(build_tokenizer(samples));
    auto lm_cfg = cfg.language_model;
    lm_cfg.vocab_size = result.tokenizer->size();
    result.language_model = std::make_shared<ToyLanguageModel>(lm_cfg, lm_seed);
    result.projection = std::make_shared<Projection>(encoder.hidden_dim(), lm_cfg.width, projection_seed);
    auto& lm = *result.language_model;
    const auto& tok = *result.tokenizer;

    // Optional text-only warm-up of the base decoder on the answers.
    if (cfg.lm_pretrain_epochs > 0) {
        std::vector<std::vector<int>> texts;
        for (const auto& s : samples) {
            auto ids = tok.encode(s.answer);
            ids.push_back(Tokenizer::kEndOfText);
            texts.push_back(std::move(ids));
        }
        std::vector<double> unused;
        run_epochs(texts.size(), cfg.lm_pretrain_epochs, cfg.batch_size, cfg.micro_batch_size, pretrain_order,
                   lm.base_parameters(), cfg.lm_pretrain_learning_rate, unused, result.pretrain_losses,
                   "lm warm-up", [&](std::size_t i, double weight, ad::Tape& tape, int, long long) {
                       const auto& ids = texts[i];
                       ToyLanguageModel::InputBlock block;
                       block.ids.assign(ids.begin(), ids.end() - 1);
                       const auto logits = lm.forward(tape, {block});
                       std::vector<int> targets(ids.begin() + 1, ids.end());
                       return masked_lm_loss(logits, targets, weight);
                   });
    }

    // Freeze: everything except projection, adapters and (optionally) embeddings.
    auto base = lm.base_parameters();
    const auto embeddings = lm.embedding_parameters();
    ParameterList frozen_lm;
    ParameterList trainable_base;
    for (auto* p : base) {
        const bool is_embedding = std::find(embeddings.begin(), embeddings.end(), p) != embeddings.end();
        if (cfg.train_embeddings && is_embedding) {
            p->trainable = true;
            trainable_base.push_back(p);
        } else {
            p->trainable = false;
            frozen_lm.push_back(p);
        }
    }
    auto& freeze = result.freeze;
    freeze.groups = {
        {"encoder", nn::parameter_digest(encoder.parameters()), ""},
        {"heads", nn::parameter_digest(heads.parameters()), ""},
        {"lm_base", nn::parameter_digest(to_const(frozen_lm)), ""},
    };
    freeze.frozen_parameter_digest_before = combined_digest(freeze.groups, false);

    const auto spec = select_trainable_parameters(lm_cfg.layers, cfg.trainable_fraction, cfg.adapter_rank,
                                                  cfg.adapter_alpha, adapter_seed);
    lm.attach_adapters(spec);
    ParameterList params = result.projection->parameters();
    for (auto* p : lm.adapter_parameters()) params.push_back(p);
    for (auto* p : trainable_base) params.push_back(p);

    run_epochs(samples.size(), cfg.epochs, cfg.batch_size, cfg.micro_batch_size, order_rng, params,
               cfg.learning_rate, result.step_losses, result.epoch_losses, "stage2",
               [&](std::size_t i, double weight, ad::Tape& tape, int epoch, long long step) {
                   const auto& s = samples[i];
                   const auto projected = result.projection->forward(tape, tape.constant(s.features));
                   const VisualTokens w{projected.value(), s.clip_id};
                   const auto prompt = assemble_prompt(s.question, s.gt_foul, s.gt_severity, w, tok,
                                                       std::string_view(s.answer));
                   if (capture) capture({epoch, step, s.clip_id, &prompt, s.gt_foul, s.gt_severity});
                   const auto logits = lm.forward(tape, lm.prompt_inputs(tape, prompt, projected));
                   return masked_lm_loss(logits, answer_targets(prompt), weight);
               });

    freeze.groups[0].digest_after = nn::parameter_digest(encoder.parameters());
    freeze.groups[1].digest_after = nn::parameter_digest(heads.parameters());
    freeze.groups[2].digest_after = nn::parameter_digest(to_const(frozen_lm));
    freeze.frozen_parameter_digest_after = combined_digest(freeze.groups, true);
    freeze.total_count = nn::parameter_count(to_const(base));
    freeze.trainable_count = nn::parameter_count(to_const(trainable_base));
    freeze.fraction = static_cast<double>(freeze.trainable_count) / static_cast<double>(freeze.total_count);
    freeze.configured_fraction = cfg.trainable_fraction;
    freeze.adapter_count = nn::parameter_count(std::as_const(lm).adapter_parameters());
    freeze.projection_count = nn::parameter_count(std::as_const(*result.projection).parameters());
    freeze.lm_layers = lm_cfg.layers;
    freeze.adapted_layers = lm.adapted_layers();
    for (const auto& g : freeze.groups) {
        if (g.digest_before != g.digest_after) {
            fail(ErrorCode::FrozenViolation, "stage2: frozen group '" + g.name + "' changed during training");
        }
    }
    return result;
}

}  // namespace xvars::train
