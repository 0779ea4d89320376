#include "xvars/model/language_model.hpp"

#include <algorithm>
#include <cmath>

#include "xvars/common/error.hpp"
#include "xvars/model/heads.hpp"

namespace xvars {

void LanguageModelConfig::validate() const {
    require(vocab_size > 3, ErrorCode::InvalidArgument, "language model: vocabulary too small");
    require(width > 0 && layers >= 1 && mlp_hidden > 0 && context_window > 0, ErrorCode::InvalidArgument,
            "language model: dimensions must be positive");
}

ToyLanguageModel::ToyLanguageModel(const LanguageModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    auto normal = [&](Eigen::Index r, Eigen::Index c, double s) {
        Matrix m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal() * s;
        return m;
    };
    token_embedding_ = Parameter("lm.token_embedding", normal(cfg_.vocab_size, cfg_.width, 1.0));
    position_embedding_ = Parameter("lm.position_embedding", normal(cfg_.context_window, cfg_.width, 0.1));
    nn::BlockConfig block{cfg_.width, cfg_.mlp_hidden, true, cfg_.init_std};
    blocks_.reserve(static_cast<std::size_t>(cfg_.layers));
    for (int l = 0; l < cfg_.layers; ++l) {
        blocks_.emplace_back("lm.block" + std::to_string(l), block, rng);
    }
    final_norm_ = nn::LayerNorm("lm.final_norm", cfg_.width);
    head_ = nn::Linear("lm.head", cfg_.width, cfg_.vocab_size, rng, 1.0 / std::sqrt(static_cast<double>(cfg_.width)));
}

ad::Var ToyLanguageModel::forward(ad::Tape& tape, const std::vector<InputBlock>& blocks) const {
    std::vector<ad::Var> pieces;
    const auto table = tape.parameter(token_embedding_);
    for (const auto& b : blocks) {
        if (b.rows) {
            if (b.rows->cols() != cfg_.width) {
                fail(ErrorCode::DimensionMismatch, "language model: embedding rows have width " +
                                                       std::to_string(b.rows->cols()) + ", expected " +
                                                       std::to_string(cfg_.width));
            }
            pieces.push_back(*b.rows);
        } else if (!b.ids.empty()) {
            pieces.push_back(ad::gather_rows(table, b.ids));
        }
    }
    auto x = ad::concat_rows(pieces);
    const auto n = x.rows();
    if (n > cfg_.context_window) {
        fail(ErrorCode::ContextOverflow, "sequence of " + std::to_string(n) + " positions exceeds context window " +
                                             std::to_string(cfg_.context_window));
    }
    x = ad::add(x, ad::slice_rows(tape.parameter(position_embedding_), 0, n));
    for (const auto& block : blocks_) {
        x = block.forward(tape, x);
    }
    return head_.forward(tape, final_norm_.forward(tape, x));
}

std::vector<ToyLanguageModel::InputBlock> ToyLanguageModel::prompt_inputs(ad::Tape& tape, const PromptSequence& prompt,
                                                                          const std::optional<ad::Var>& visual) const {
    std::vector<InputBlock> blocks;
    for (const auto& seg : prompt.segments) {
        InputBlock b;
        if (seg.kind == SegmentKind::Text) {
            b.ids = seg.token_ids;
        } else if (visual) {
            if (visual->rows() != seg.visual.count()) {
                fail(ErrorCode::DimensionMismatch, "visual override row count differs from the prompt's visual segment");
            }
            b.rows = *visual;
        } else {
            b.rows = tape.constant(seg.visual.tokens);
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

Matrix ToyLanguageModel::logits(const PromptSequence& prompt, std::span<const int> continuation) const {
    ad::Tape tape(false);
    auto blocks = prompt_inputs(tape, prompt);
    if (!continuation.empty()) {
        InputBlock tail;
        tail.ids.assign(continuation.begin(), continuation.end());
        blocks.push_back(std::move(tail));
    }
    return forward(tape, blocks).value();
}

void ToyLanguageModel::attach_adapters(const AdapterSpec& spec) {
    require(spec.rank >= 1, ErrorCode::InvalidArgument, "adapter rank must be at least 1");
    Rng rng(spec.seed);
    for (int layer : spec.layers) {
        if (layer < 0 || layer >= cfg_.layers) {
            fail(ErrorCode::InvalidArgument, "adapter layer " + std::to_string(layer) + " out of range");
        }
        blocks_[static_cast<std::size_t>(layer)].attach_adapters(spec.rank, spec.alpha, rng);
    }
}

std::vector<int> ToyLanguageModel::adapted_layers() const {
    std::vector<int> out;
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
        if (blocks_[l].has_adapters()) out.push_back(static_cast<int>(l));
    }
    return out;
}

ParameterList ToyLanguageModel::base_parameters() {
    ParameterList out{&token_embedding_, &position_embedding_};
    for (auto& b : blocks_) b.collect(out);
    final_norm_.collect(out);
    head_.collect(out);
    return out;
}

ConstParameterList ToyLanguageModel::base_parameters() const {
    ConstParameterList out{&token_embedding_, &position_embedding_};
    for (const auto& b : blocks_) b.collect(out);
    final_norm_.collect(out);
    head_.collect(out);
    return out;
}

ParameterList ToyLanguageModel::embedding_parameters() { return {&token_embedding_, &position_embedding_}; }

ParameterList ToyLanguageModel::adapter_parameters() {
    ParameterList out;
    for (auto& b : blocks_) b.collect_adapters(out);
    return out;
}

ConstParameterList ToyLanguageModel::adapter_parameters() const {
    ConstParameterList out;
    for (const auto& b : blocks_) b.collect_adapters(out);
    return out;
}

std::string generate_answer(const PromptSequence& prompt, const ToyLanguageModel& lm, const Tokenizer& tokenizer,
                            int max_new_tokens, const Decoding& decoding) {
    if (max_new_tokens < 0) {
        fail(ErrorCode::InvalidArgument, "max_new_tokens must be non-negative");
    }
    if (prompt.length() + max_new_tokens > lm.config().context_window) {
        fail(ErrorCode::ContextOverflow, "prompt of " + std::to_string(prompt.length()) + " positions plus " +
                                             std::to_string(max_new_tokens) + " new tokens exceeds context window " +
                                             std::to_string(lm.config().context_window));
    }
    if (lm.config().vocab_size != tokenizer.size()) {
        fail(ErrorCode::DimensionMismatch, "tokenizer and language model disagree on vocabulary size");
    }
    Rng rng(decoding.seed);
    std::vector<int> generated;
    for (int step = 0; step < max_new_tokens; ++step) {
        const Matrix all = lm.logits(prompt, generated);
        const RowVector last = all.row(all.rows() - 1);
        int next = 0;
        if (decoding.mode == Decoding::Mode::Greedy) {
            next = argmax_lowest(last);
        } else {
            const double temp = decoding.temperature > 0 ? decoding.temperature : 1.0;
            const double mx = last.maxCoeff();
            const Eigen::ArrayXd weights = ((last.array() - mx) / temp).exp().transpose();
            double draw = rng.uniform() * weights.sum();
            next = static_cast<int>(weights.size()) - 1;
            for (Eigen::Index i = 0; i < weights.size(); ++i) {
                draw -= weights(i);
                if (draw < 0) {
                    next = static_cast<int>(i);
                    break;
                }
            }
        }
        if (next == Tokenizer::kEndOfText) {
            break;
        }
        generated.push_back(next);
    }
    return tokenizer.decode(generated);
}

}  // namespace xvars
