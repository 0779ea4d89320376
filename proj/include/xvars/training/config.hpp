#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xvars/common/ini.hpp"
#include "xvars/model/encoder.hpp"
#include "xvars/model/language_model.hpp"

namespace xvars::train {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Stage 1: fine-tune the encoder and both heads on the summed cross-entropy.
/// Defaults are the full-scale values; toy runs override them.
struct Stage1Config {
    double learning_rate = 5e-6;
    int epochs = 14;
    int batch_size = 64;
    /// Clips per forward/backward pass; gradients are accumulated up to
    /// batch_size. 0 means the whole batch at once.
    int micro_batch_size = 0;
    int frames_per_clip = 16;
    std::uint64_t seed = 0;
    ToyEncoderConfig encoder;

    void validate() const;
};

/// Stage 2: frozen encoder and heads, train projection + low-rank adapters
/// with ground-truth labels injected into the prompt.
struct Stage2Config {
    double learning_rate = 2e-4;
    int epochs = 3;
    int batch_size = 32;
    int micro_batch_size = 0;
    double trainable_fraction = 0.01;
    int adapter_rank = 8;
    double adapter_alpha = 16.0;
    /// Also update the token and position tables (off by default).
    bool train_embeddings = false;
    /// Text-only warm-up of the base language model on the training answers
    /// before it is frozen; stands in for a pretrained decoder.
    int lm_pretrain_epochs = 0;
    double lm_pretrain_learning_rate = 3e-3;
    std::uint64_t seed = 0;
    LanguageModelConfig language_model;

    void validate() const;
};

/// Applies the keys of one INI section. Unknown keys and malformed values are
/// Config errors that carry the file and line.
void apply_section(const IniDocument& doc, const std::string& section, Stage1Config& cfg);
void apply_section(const IniDocument& doc, const std::string& section, Stage2Config& cfg);

/// Flat key/value snapshot, in the same key names the INI sections accept.
KeyValues describe(const Stage1Config& cfg);
KeyValues describe(const Stage2Config& cfg);

/// Applies a single key (used by INI loading and by snapshot restoring).
void set_option(Stage1Config& cfg, const std::string& key, const std::string& value);
void set_option(Stage2Config& cfg, const std::string& key, const std::string& value);

}  // namespace xvars::train
