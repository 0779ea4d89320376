#pragma once

#include <vector>

#include "xvars/dataset/media.hpp"
#include "xvars/dataset/records.hpp"
#include "xvars/model/video.hpp"

namespace xvars::data {

/// Source frame indices for a window of `frames_per_clip` frames around the
/// foul: [foul - n/2, foul - n/2 + n), out-of-range positions replaced by the
/// nearest valid frame. OutOfBounds when the foul frame is outside the media.
std::vector<int> frame_window(int foul_frame_index, int frames_per_clip, int media_frames);

/// Frames normalised to [0, 1]; the returned clip's foul_frame_index is the
/// foul frame's position inside the window (n/2).
VideoClip sample_frames(const MediaFrames& media, const std::string& clip_id, int foul_frame_index,
                        int frames_per_clip = 16);
VideoClip sample_frames(const Dataset& dataset, const ClipRecord& clip, int frames_per_clip = 16,
                        const MediaReader& reader = FileMediaReader());

}  // namespace xvars::data
