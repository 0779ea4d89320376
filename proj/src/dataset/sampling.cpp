#include "xvars/dataset/sampling.hpp"

#include <algorithm>

#include "xvars/common/error.hpp"

namespace xvars::data {

std::vector<int> frame_window(int foul_frame_index, int frames_per_clip, int media_frames) {
    if (frames_per_clip < 1) {
        fail(ErrorCode::InvalidArgument, "frames_per_clip must be positive");
    }
    if (media_frames < 1) {
        fail(ErrorCode::UnreadableMedia, "media has no frames");
    }
    if (foul_frame_index < 0 || foul_frame_index >= media_frames) {
        fail(ErrorCode::OutOfBounds, "foul frame " + std::to_string(foul_frame_index) + " outside media of " +
                                         std::to_string(media_frames) + " frames");
    }
    std::vector<int> idx(static_cast<std::size_t>(frames_per_clip));
    const int start = foul_frame_index - frames_per_clip / 2;
    for (int i = 0; i < frames_per_clip; ++i) {
        idx[static_cast<std::size_t>(i)] = std::clamp(start + i, 0, media_frames - 1);
    }
    return idx;
}

VideoClip sample_frames(const MediaFrames& media, const std::string& clip_id, int foul_frame_index,
                        int frames_per_clip) {
    const auto idx = frame_window(foul_frame_index, frames_per_clip, media.frames);
    const auto frame_values = static_cast<std::size_t>(media.height) * media.width * media.channels;
    std::vector<float> pixels;
    pixels.reserve(frame_values * idx.size());
    for (int t : idx) {
        const auto* src = media.frame(t);
        for (std::size_t k = 0; k < frame_values; ++k) pixels.push_back(static_cast<float>(src[k]) / 255.0f);
    }
    return VideoClip(clip_id, frames_per_clip, media.height, media.width, media.channels, std::move(pixels),
                     frames_per_clip / 2, media.fps);
}

VideoClip sample_frames(const Dataset& dataset, const ClipRecord& clip, int frames_per_clip,
                        const MediaReader& reader) {
    const auto media = reader.read(dataset.media_path(clip));
    return sample_frames(media, clip.clip_id, clip.foul_frame_index, frames_per_clip);
}

}  // namespace xvars::data
