#include "xvars/model/encoder.hpp"

#include <array>

#include "xvars/common/error.hpp"

namespace xvars {

void ToyEncoderConfig::validate() const {
    require(patch_size > 0 && image_height >= patch_size && image_width >= patch_size &&
                image_height % patch_size == 0 && image_width % patch_size == 0,
            ErrorCode::DimensionMismatch, "toy encoder: image size must be a positive multiple of the patch size");
    require(channels == 3, ErrorCode::DimensionMismatch, "toy encoder: expects 3 channels");
    require(hidden_dim > 0 && feature_dim > 0 && mlp_hidden > 0 && layers >= 1, ErrorCode::InvalidArgument,
            "toy encoder: dimensions must be positive");
}

ToyVisionEncoder::ToyVisionEncoder(const ToyEncoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const int patch_values = cfg_.patch_size * cfg_.patch_size * cfg_.channels;
    patch_embed_ = nn::Linear("encoder.patch_embed", patch_values, cfg_.hidden_dim, rng,
                              1.0 / std::sqrt(static_cast<double>(patch_values)));
    Matrix summary(1, cfg_.hidden_dim);
    for (Eigen::Index j = 0; j < summary.cols(); ++j) summary(0, j) = rng.normal() * cfg_.init_std;
    summary_token_ = Parameter("encoder.summary_token", summary);
    Matrix pos(cfg_.token_count() + 1, cfg_.hidden_dim);
    for (Eigen::Index j = 0; j < pos.cols(); ++j)
        for (Eigen::Index i = 0; i < pos.rows(); ++i) pos(i, j) = rng.normal() * cfg_.init_std;
    positions_ = Parameter("encoder.positions", pos);
    nn::BlockConfig block{cfg_.hidden_dim, cfg_.mlp_hidden, false, cfg_.init_std};
    blocks_.reserve(static_cast<std::size_t>(cfg_.layers));
    for (int l = 0; l < cfg_.layers; ++l) {
        blocks_.emplace_back("encoder.block" + std::to_string(l), block, rng);
    }
    final_norm_ = nn::LayerNorm("encoder.final_norm", cfg_.hidden_dim);
    feature_proj_ = nn::Linear("encoder.feature_proj", cfg_.hidden_dim, cfg_.feature_dim, rng,
                               1.0 / std::sqrt(static_cast<double>(cfg_.hidden_dim)));
}

Matrix ToyVisionEncoder::patchify(std::span<const float> frame, int height, int width, int channels, int patch) {
    if (patch <= 0 || height < patch || width < patch || height % patch != 0 || width % patch != 0) {
        fail(ErrorCode::DimensionMismatch, "frame " + std::to_string(height) + "x" + std::to_string(width) +
                                               " is not divisible by patch size " + std::to_string(patch));
    }
    const int rows = height / patch;
    const int cols = width / patch;
    Matrix out(rows * cols, patch * patch * channels);
    for (int pr = 0; pr < rows; ++pr) {
        for (int pc = 0; pc < cols; ++pc) {
            const int token = pr * cols + pc;
            int k = 0;
            for (int y = 0; y < patch; ++y) {
                for (int x = 0; x < patch; ++x) {
                    const auto base = (static_cast<std::size_t>(pr * patch + y) * width + (pc * patch + x)) * channels;
                    for (int c = 0; c < channels; ++c) {
                        out(token, k++) = frame[base + static_cast<std::size_t>(c)];
                    }
                }
            }
        }
    }
    return out;
}

ToyVisionEncoder::Outputs ToyVisionEncoder::forward(ad::Tape& tape, const Matrix& patches) const {
    if (patches.rows() != cfg_.token_count() || patches.cols() != patch_embed_.in_features()) {
        fail(ErrorCode::DimensionMismatch, "toy encoder: expected " + std::to_string(cfg_.token_count()) + "x" +
                                               std::to_string(patch_embed_.in_features()) + " patches");
    }
    const auto embedded = patch_embed_.forward(tape, tape.constant(patches));
    const std::array<ad::Var, 2> parts = {tape.parameter(summary_token_), embedded};
    auto x = ad::add(ad::concat_rows(parts), tape.parameter(positions_));
    const auto S = static_cast<Eigen::Index>(cfg_.token_count());

    ad::Var penultimate = x;
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
        if (l + 1 == blocks_.size()) {
            penultimate = x;
        }
        x = blocks_[l].forward(tape, x);
    }
    const auto normed = final_norm_.forward(tape, x);
    const auto feature = feature_proj_.forward(tape, ad::slice_rows(normed, 0, 1));
    const auto& source = cfg_.hidden_layer == HiddenLayer::Last ? normed : penultimate;
    return {feature, ad::slice_rows(source, 1, S)};
}

FrameEncoding ToyVisionEncoder::encode_frame(std::span<const float> frame, int height, int width,
                                             int channels) const {
    if (height != cfg_.image_height || width != cfg_.image_width || channels != cfg_.channels) {
        fail(ErrorCode::DimensionMismatch, "toy encoder: configured for " + std::to_string(cfg_.image_height) +
                                               "x" + std::to_string(cfg_.image_width) + " frames, got " +
                                               std::to_string(height) + "x" + std::to_string(width));
    }
    ad::Tape tape(false);
    const auto out = forward(tape, patchify(frame, height, width, channels, cfg_.patch_size));
    return {out.feature.value().row(0), out.hidden.value()};
}

ParameterList ToyVisionEncoder::parameters() {
    ParameterList out;
    patch_embed_.collect(out);
    out.push_back(&summary_token_);
    out.push_back(&positions_);
    for (auto& b : blocks_) b.collect(out);
    final_norm_.collect(out);
    feature_proj_.collect(out);
    return out;
}

ConstParameterList ToyVisionEncoder::parameters() const {
    ConstParameterList out;
    patch_embed_.collect(out);
    out.push_back(&summary_token_);
    out.push_back(&positions_);
    for (const auto& b : blocks_) b.collect(out);
    final_norm_.collect(out);
    feature_proj_.collect(out);
    return out;
}

ExternalEncoderAdapter::ExternalEncoderAdapter(Backend backend, int patch_size, int feature_dim, int hidden_dim)
    : backend_(std::move(backend)), patch_size_(patch_size), feature_dim_(feature_dim), hidden_dim_(hidden_dim) {
    require(static_cast<bool>(backend_), ErrorCode::InvalidArgument, "external encoder: empty backend");
    require(patch_size_ > 0 && feature_dim_ > 0 && hidden_dim_ > 0, ErrorCode::InvalidArgument,
            "external encoder: dimensions must be positive");
}

FrameEncoding ExternalEncoderAdapter::encode_frame(std::span<const float> frame, int height, int width,
                                                   int channels) const {
    auto out = backend_(frame, height, width, channels);
    const int expected_tokens = (height / patch_size_) * (width / patch_size_);
    if (out.feature.size() != feature_dim_ || out.hidden.rows() != expected_tokens ||
        out.hidden.cols() != hidden_dim_) {
        fail(ErrorCode::DimensionMismatch, "external encoder returned shapes inconsistent with its declaration");
    }
    return out;
}

EncoderOutput encode_video(const VideoClip& clip, const VisionEncoder& encoder) {
    const int p = encoder.patch_size();
    if (clip.height() < p || clip.width() < p || clip.height() % p != 0 || clip.width() % p != 0) {
        fail(ErrorCode::DimensionMismatch, "clip " + clip.clip_id() + ": " + std::to_string(clip.height()) + "x" +
                                               std::to_string(clip.width()) + " not divisible by patch size " +
                                               std::to_string(p));
    }
    EncoderOutput out;
    out.patch_size = p;
    out.token_count = (clip.height() / p) * (clip.width() / p);
    out.frame_features.resize(clip.frames(), encoder.feature_dim());
    out.hidden_states.reserve(static_cast<std::size_t>(clip.frames()));
    for (int t = 0; t < clip.frames(); ++t) {
        auto enc = encoder.encode_frame(clip.frame(t), clip.height(), clip.width(), clip.channels());
        if (!enc.feature.allFinite() || !enc.hidden.allFinite()) {
            fail(ErrorCode::NonFinite, "clip " + clip.clip_id() + ": encoder produced non-finite values at frame " +
                                           std::to_string(t));
        }
        if (enc.hidden.rows() != out.token_count) {
            fail(ErrorCode::DimensionMismatch, "encoder returned " + std::to_string(enc.hidden.rows()) +
                                                   " tokens, expected " + std::to_string(out.token_count));
        }
        out.frame_features.row(t) = enc.feature;
        out.hidden_states.push_back(std::move(enc.hidden));
    }
    return out;
}

}  // namespace xvars
