#include "xvars/model/video.hpp"

#include <cmath>

#include "xvars/common/error.hpp"

namespace xvars {

VideoClip::VideoClip(std::string clip_id, int frames, int height, int width, int channels,
                     std::vector<float> pixels, int foul_frame_index, double fps)
    : clip_id_(std::move(clip_id)),
      frames_(frames),
      height_(height),
      width_(width),
      channels_(channels),
      pixels_(std::move(pixels)),
      foul_frame_index_(foul_frame_index),
      fps_(fps) {
    if (frames_ < 1) {
        fail(ErrorCode::EmptyInput, "clip " + clip_id_ + ": needs at least one frame");
    }
    if (height_ < 1 || width_ < 1) {
        fail(ErrorCode::DimensionMismatch, "clip " + clip_id_ + ": empty frame size");
    }
    if (channels_ != 3) {
        fail(ErrorCode::DimensionMismatch, "clip " + clip_id_ + ": expected 3 channels, got " +
                                               std::to_string(channels_));
    }
    const auto expected = static_cast<std::size_t>(frames_) * height_ * width_ * channels_;
    if (pixels_.size() != expected) {
        fail(ErrorCode::DimensionMismatch, "clip " + clip_id_ + ": pixel buffer has " +
                                               std::to_string(pixels_.size()) + " values, expected " +
                                               std::to_string(expected));
    }
    for (float v : pixels_) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
            fail(ErrorCode::NonFinite, "clip " + clip_id_ + ": pixel value outside [0,1]");
        }
    }
}

std::span<const float> VideoClip::frame(int t) const {
    const auto stride = static_cast<std::size_t>(height_) * width_ * channels_;
    return std::span<const float>(pixels_).subspan(static_cast<std::size_t>(t) * stride, stride);
}

}  // namespace xvars
