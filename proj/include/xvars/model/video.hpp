#pragma once

#include <span>
#include <string>
#include <vector>

namespace xvars {

/// T x H x W x C frames (row-major, channel fastest) normalised to [0, 1].
class VideoClip {
public:
    /// Validates: T >= 1, H >= 1, W >= 1, C == 3, pixel count matches,
    /// every value finite and inside [0, 1].
    VideoClip(std::string clip_id, int frames, int height, int width, int channels, std::vector<float> pixels,
              int foul_frame_index = 0, double fps = 25.0);

    const std::string& clip_id() const { return clip_id_; }
    int frames() const { return frames_; }
    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    int foul_frame_index() const { return foul_frame_index_; }
    double fps() const { return fps_; }

    float at(int t, int y, int x, int c) const {
        return pixels_[((static_cast<std::size_t>(t) * height_ + y) * width_ + x) * channels_ + c];
    }
    std::span<const float> frame(int t) const;
    const std::vector<float>& pixels() const { return pixels_; }

private:
    std::string clip_id_;
    int frames_, height_, width_, channels_;
    std::vector<float> pixels_;
    int foul_frame_index_;
    double fps_;
};

}  // namespace xvars
