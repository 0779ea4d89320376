#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xvars/autograd/tape.hpp"
#include "xvars/model/prompt.hpp"
#include "xvars/model/tokenizer.hpp"
#include "xvars/nn/layers.hpp"

namespace xvars {

struct LanguageModelConfig {
    int vocab_size = 0;
    int width = 32;  // E
    int layers = 4;  // L
    int mlp_hidden = 64;
    int context_window = 128;
    double init_std = 0.08;

    void validate() const;
};

/// Which blocks carry low-rank adapters, and their shape.
struct AdapterSpec {
    std::vector<int> layers;
    int rank = 4;
    double alpha = 4.0;
    std::uint64_t seed = 0;
};

/// Decoder-only causal transformer: token + position embeddings, L pre-norm
/// blocks, final norm, untied output head.
class ToyLanguageModel {
public:
    ToyLanguageModel(const LanguageModelConfig& cfg, std::uint64_t seed);
    ToyLanguageModel(const ToyLanguageModel&) = delete;
    ToyLanguageModel& operator=(const ToyLanguageModel&) = delete;

    /// One run of consecutive sequence positions: either token ids looked up
    /// in the embedding table, or ready-made embedding rows (visual tokens).
    struct InputBlock {
        std::vector<int> ids;
        std::optional<ad::Var> rows;
    };

    /// Logits for every position (N x V).
    ad::Var forward(ad::Tape& tape, const std::vector<InputBlock>& blocks) const;

    /// Input blocks for a prompt. When `visual` is given it replaces the
    /// values of the visual segments (used to backpropagate into the projection).
    std::vector<InputBlock> prompt_inputs(ad::Tape& tape, const PromptSequence& prompt,
                                          const std::optional<ad::Var>& visual = std::nullopt) const;

    /// No-grad logits of the prompt followed by `continuation` ids.
    Matrix logits(const PromptSequence& prompt, std::span<const int> continuation = {}) const;

    void attach_adapters(const AdapterSpec& spec);
    std::vector<int> adapted_layers() const;

    const LanguageModelConfig& config() const { return cfg_; }
    int layer_count() const { return cfg_.layers; }

    /// Base weights (embeddings, blocks, norms, head) without adapters.
    ParameterList base_parameters();
    ConstParameterList base_parameters() const;
    /// Token and position tables only.
    ParameterList embedding_parameters();
    ParameterList adapter_parameters();
    ConstParameterList adapter_parameters() const;

private:
    LanguageModelConfig cfg_;
    Parameter token_embedding_;     // V x E
    Parameter position_embedding_;  // context x E
    std::vector<nn::TransformerBlock> blocks_;
    nn::LayerNorm final_norm_;
    nn::Linear head_;
};

struct Decoding {
    enum class Mode { Greedy, Sampled };
    Mode mode = Mode::Greedy;
    std::uint64_t seed = 0;
    double temperature = 1.0;

    static Decoding greedy() { return {}; }
    static Decoding sampled(std::uint64_t seed, double temperature = 1.0) {
        return {Mode::Sampled, seed, temperature};
    }
};

/// Autoregressively emits up to `max_new_tokens` after the prompt, stopping at
/// <eos>. ContextOverflow when prompt length + max_new_tokens exceeds the
/// context window; DecodeFailure if an emitted id cannot be decoded.
std::string generate_answer(const PromptSequence& prompt, const ToyLanguageModel& lm, const Tokenizer& tokenizer,
                            int max_new_tokens, const Decoding& decoding = Decoding::greedy());

}  // namespace xvars
