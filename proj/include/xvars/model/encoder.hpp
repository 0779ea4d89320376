#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xvars/autograd/tape.hpp"
#include "xvars/model/video.hpp"
#include "xvars/nn/layers.hpp"

namespace xvars {

/// Per-frame encoder output: the frame feature f_i (1 x D1) and the patch
/// token hidden states h_i (S x D2). The global summary token is not part of
/// `hidden`.
struct FrameEncoding {
    RowVector feature;
    Matrix hidden;
};

struct EncoderOutput {
    Matrix frame_features;              // T x D1
    std::vector<Matrix> hidden_states;  // T entries of S x D2
    int patch_size = 0;
    int token_count = 0;                // S = (H/p) * (W/p)
};

/// Frames in, (f_i, h_i) out. Implementations must be safe to call
/// concurrently from several threads.
class VisionEncoder {
public:
    virtual ~VisionEncoder() = default;

    virtual int patch_size() const = 0;
    virtual int feature_dim() const = 0;
    virtual int hidden_dim() const = 0;
    virtual FrameEncoding encode_frame(std::span<const float> frame, int height, int width, int channels) const = 0;
};

/// Which block output supplies the hidden states.
enum class HiddenLayer { Last, Penultimate };

struct ToyEncoderConfig {
    int image_height = 28;
    int image_width = 28;
    int channels = 3;
    int patch_size = 7;
    int hidden_dim = 24;   // D2
    int feature_dim = 16;  // D1
    int layers = 2;
    int mlp_hidden = 48;
    HiddenLayer hidden_layer = HiddenLayer::Last;
    double init_std = 0.08;

    int token_count() const { return (image_height / patch_size) * (image_width / patch_size); }
    void validate() const;
};

/// Small ViT: patch embedding + learned summary token + positional table,
/// pre-norm transformer blocks, final norm, linear feature projection of the
/// summary token.
class ToyVisionEncoder final : public VisionEncoder {
public:
    ToyVisionEncoder(const ToyEncoderConfig& cfg, std::uint64_t seed);
    ToyVisionEncoder(const ToyVisionEncoder&) = delete;
    ToyVisionEncoder& operator=(const ToyVisionEncoder&) = delete;

    struct Outputs {
        ad::Var feature;  // 1 x D1
        ad::Var hidden;   // S x D2
    };

    /// Differentiable pass over one frame already cut into S patch rows.
    Outputs forward(ad::Tape& tape, const Matrix& patches) const;

    /// Cuts an H x W x C frame into S rows of p*p*C values (patch raster order,
    /// rows then columns then channels inside a patch).
    static Matrix patchify(std::span<const float> frame, int height, int width, int channels, int patch);

    int patch_size() const override { return cfg_.patch_size; }
    int feature_dim() const override { return cfg_.feature_dim; }
    int hidden_dim() const override { return cfg_.hidden_dim; }
    FrameEncoding encode_frame(std::span<const float> frame, int height, int width, int channels) const override;

    const ToyEncoderConfig& config() const { return cfg_; }
    ParameterList parameters();
    ConstParameterList parameters() const;

private:
    ToyEncoderConfig cfg_;
    nn::Linear patch_embed_;
    Parameter summary_token_;
    Parameter positions_;
    std::vector<nn::TransformerBlock> blocks_;
    nn::LayerNorm final_norm_;
    nn::Linear feature_proj_;
};

/// Slot for a pretrained image-text encoder running outside this library.
/// The backend is validated against the declared dimensions on every call.
class ExternalEncoderAdapter final : public VisionEncoder {
public:
    using Backend = std::function<FrameEncoding(std::span<const float>, int height, int width, int channels)>;

    ExternalEncoderAdapter(Backend backend, int patch_size, int feature_dim, int hidden_dim);

    int patch_size() const override { return patch_size_; }
    int feature_dim() const override { return feature_dim_; }
    int hidden_dim() const override { return hidden_dim_; }
    FrameEncoding encode_frame(std::span<const float> frame, int height, int width, int channels) const override;

private:
    Backend backend_;
    int patch_size_, feature_dim_, hidden_dim_;
};

/// Runs the encoder frame by frame. Fails with DimensionMismatch when H or W
/// is not a multiple of the patch size (or smaller than it) and with
/// NonFinite when the encoder emits NaN/Inf.
EncoderOutput encode_video(const VideoClip& clip, const VisionEncoder& encoder);

}  // namespace xvars
