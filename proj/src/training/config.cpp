#include "xvars/training/config.hpp"

#include "xvars/common/error.hpp"

namespace xvars::train {
namespace {

int to_int(const std::string& key, const std::string& value) {
    const auto v = parse_int(value, key);
    if (v < -2147483647LL || v > 2147483647LL) {
        fail(ErrorCode::Config, key + ": value out of range");
    }
    return static_cast<int>(v);
}

std::uint64_t to_seed(const std::string& key, const std::string& value) {
    const auto v = parse_int(value, key);
    if (v < 0) {
        fail(ErrorCode::Config, key + ": seed must be non-negative");
    }
    return static_cast<std::uint64_t>(v);
}

[[noreturn]] void unknown(const std::string& key) { fail(ErrorCode::Config, "unknown option '" + key + "'"); }

template <class Cfg>
void apply(const IniDocument& doc, const std::string& section, Cfg& cfg) {
    for (const auto& e : doc.entries(section)) {
        try {
            set_option(cfg, e.key, e.value);
        } catch (const Error& err) {
            fail(ErrorCode::Config, "line " + std::to_string(e.line) + " [" + section + "]: " + err.what());
        }
    }
}

}  // namespace

void Stage1Config::validate() const {
    require(learning_rate > 0, ErrorCode::InvalidArgument, "stage1: learning_rate must be positive");
    require(epochs >= 0, ErrorCode::InvalidArgument, "stage1: epochs must be non-negative");
    require(batch_size > 0, ErrorCode::InvalidArgument, "stage1: batch_size must be positive");
    require(micro_batch_size >= 0, ErrorCode::InvalidArgument, "stage1: micro_batch_size must be non-negative");
    require(frames_per_clip > 0 && frames_per_clip % 2 == 0, ErrorCode::InvalidArgument,
            "stage1: frames_per_clip must be positive and even");
    encoder.validate();
}

void Stage2Config::validate() const {
    require(learning_rate > 0, ErrorCode::InvalidArgument, "stage2: learning_rate must be positive");
    require(epochs >= 0, ErrorCode::InvalidArgument, "stage2: epochs must be non-negative");
    require(batch_size > 0, ErrorCode::InvalidArgument, "stage2: batch_size must be positive");
    require(micro_batch_size >= 0, ErrorCode::InvalidArgument, "stage2: micro_batch_size must be non-negative");
    require(trainable_fraction > 0 && trainable_fraction <= 1, ErrorCode::InvalidArgument,
            "stage2: trainable_fraction must be in (0, 1]");
    require(adapter_rank >= 1, ErrorCode::InvalidArgument, "stage2: adapter_rank must be at least 1");
    require(adapter_alpha > 0, ErrorCode::InvalidArgument, "stage2: adapter_alpha must be positive");
    require(lm_pretrain_epochs >= 0 && lm_pretrain_learning_rate > 0, ErrorCode::InvalidArgument,
            "stage2: invalid language-model warm-up settings");
    require(language_model.width > 0 && language_model.layers >= 1 && language_model.mlp_hidden > 0 &&
                language_model.context_window > 0,
            ErrorCode::InvalidArgument, "stage2: language model dimensions must be positive");
}

void set_option(Stage1Config& cfg, const std::string& key, const std::string& value) {
    if (key == "learning_rate") cfg.learning_rate = parse_double(value, key);
    else if (key == "epochs") cfg.epochs = to_int(key, value);
    else if (key == "batch_size") cfg.batch_size = to_int(key, value);
    else if (key == "micro_batch_size") cfg.micro_batch_size = to_int(key, value);
    else if (key == "frames_per_clip") cfg.frames_per_clip = to_int(key, value);
    else if (key == "seed") cfg.seed = to_seed(key, value);
    else if (key == "encoder.image_height") cfg.encoder.image_height = to_int(key, value);
    else if (key == "encoder.image_width") cfg.encoder.image_width = to_int(key, value);
    else if (key == "encoder.patch_size") cfg.encoder.patch_size = to_int(key, value);
    else if (key == "encoder.hidden_dim") cfg.encoder.hidden_dim = to_int(key, value);
    else if (key == "encoder.feature_dim") cfg.encoder.feature_dim = to_int(key, value);
    else if (key == "encoder.layers") cfg.encoder.layers = to_int(key, value);
    else if (key == "encoder.mlp_hidden") cfg.encoder.mlp_hidden = to_int(key, value);
    else if (key == "encoder.init_std") cfg.encoder.init_std = parse_double(value, key);
    else if (key == "encoder.hidden_layer") {
        if (value == "last") cfg.encoder.hidden_layer = HiddenLayer::Last;
        else if (value == "penultimate") cfg.encoder.hidden_layer = HiddenLayer::Penultimate;
        else fail(ErrorCode::Config, key + ": expected 'last' or 'penultimate', got '" + value + "'");
    } else unknown(key);
}

void set_option(Stage2Config& cfg, const std::string& key, const std::string& value) {
    if (key == "learning_rate") cfg.learning_rate = parse_double(value, key);
    else if (key == "epochs") cfg.epochs = to_int(key, value);
    else if (key == "batch_size") cfg.batch_size = to_int(key, value);
    else if (key == "micro_batch_size") cfg.micro_batch_size = to_int(key, value);
    else if (key == "trainable_fraction") cfg.trainable_fraction = parse_double(value, key);
    else if (key == "adapter_rank") cfg.adapter_rank = to_int(key, value);
    else if (key == "adapter_alpha") cfg.adapter_alpha = parse_double(value, key);
    else if (key == "train_embeddings") cfg.train_embeddings = parse_bool(value, key);
    else if (key == "lm_pretrain_epochs") cfg.lm_pretrain_epochs = to_int(key, value);
    else if (key == "lm_pretrain_learning_rate") cfg.lm_pretrain_learning_rate = parse_double(value, key);
    else if (key == "seed") cfg.seed = to_seed(key, value);
    else if (key == "lm.width") cfg.language_model.width = to_int(key, value);
    else if (key == "lm.layers") cfg.language_model.layers = to_int(key, value);
    else if (key == "lm.mlp_hidden") cfg.language_model.mlp_hidden = to_int(key, value);
    else if (key == "lm.context_window") cfg.language_model.context_window = to_int(key, value);
    else if (key == "lm.init_std") cfg.language_model.init_std = parse_double(value, key);
    else unknown(key);
}

void apply_section(const IniDocument& doc, const std::string& section, Stage1Config& cfg) {
    apply(doc, section, cfg);
}

void apply_section(const IniDocument& doc, const std::string& section, Stage2Config& cfg) {
    apply(doc, section, cfg);
}

KeyValues describe(const Stage1Config& cfg) {
    return {
        {"learning_rate", format_double(cfg.learning_rate)},
        {"epochs", std::to_string(cfg.epochs)},
        {"batch_size", std::to_string(cfg.batch_size)},
        {"micro_batch_size", std::to_string(cfg.micro_batch_size)},
        {"frames_per_clip", std::to_string(cfg.frames_per_clip)},
        {"seed", std::to_string(cfg.seed)},
        {"encoder.image_height", std::to_string(cfg.encoder.image_height)},
        {"encoder.image_width", std::to_string(cfg.encoder.image_width)},
        {"encoder.patch_size", std::to_string(cfg.encoder.patch_size)},
        {"encoder.hidden_dim", std::to_string(cfg.encoder.hidden_dim)},
        {"encoder.feature_dim", std::to_string(cfg.encoder.feature_dim)},
        {"encoder.layers", std::to_string(cfg.encoder.layers)},
        {"encoder.mlp_hidden", std::to_string(cfg.encoder.mlp_hidden)},
        {"encoder.init_std", format_double(cfg.encoder.init_std)},
        {"encoder.hidden_layer", cfg.encoder.hidden_layer == HiddenLayer::Last ? "last" : "penultimate"},
    };
}

KeyValues describe(const Stage2Config& cfg) {
    return {
        {"learning_rate", format_double(cfg.learning_rate)},
        {"epochs", std::to_string(cfg.epochs)},
        {"batch_size", std::to_string(cfg.batch_size)},
        {"micro_batch_size", std::to_string(cfg.micro_batch_size)},
        {"trainable_fraction", format_double(cfg.trainable_fraction)},
        {"adapter_rank", std::to_string(cfg.adapter_rank)},
        {"adapter_alpha", format_double(cfg.adapter_alpha)},
        {"train_embeddings", cfg.train_embeddings ? "true" : "false"},
        {"lm_pretrain_epochs", std::to_string(cfg.lm_pretrain_epochs)},
        {"lm_pretrain_learning_rate", format_double(cfg.lm_pretrain_learning_rate)},
        {"seed", std::to_string(cfg.seed)},
        {"lm.width", std::to_string(cfg.language_model.width)},
        {"lm.layers", std::to_string(cfg.language_model.layers)},
        {"lm.mlp_hidden", std::to_string(cfg.language_model.mlp_hidden)},
        {"lm.context_window", std::to_string(cfg.language_model.context_window)},
        {"lm.init_std", format_double(cfg.language_model.init_std)},
    };
}

}  // namespace xvars::train
