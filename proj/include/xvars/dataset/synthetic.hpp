#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "xvars/common/random.hpp"
#include "xvars/dataset/media.hpp"
#include "xvars/dataset/records.hpp"

namespace xvars::data {

/// Toy dataset whose labels are a deterministic function of pixel content:
/// every frame carries one solid coloured cell whose colour encodes the foul
/// type and one black/white textured cell whose texture encodes the severity,
/// at grid-aligned positions redrawn every frame, over a noisy background.
struct SyntheticConfig {
    int clips_per_combination = 8;  // 8 foul types x 4 severities x this
    int media_frames = 12;
    int height = 28;
    int width = 28;
    int cell = 7;                   // marker size, aligned to this grid
    double background_level = 0.25;
    double marker_noise = 0.04;
    double train_fraction = 0.75;
    /// Every n-th clip gets a second answer to the card question (0 = never).
    int second_answer_every = 3;
    std::uint64_t seed = 7;

    void validate() const;
};

/// Media for one clip with the given labels. Marker positions, foul frame and
/// noise come from `rng`; foul_frame_index receives the chosen foul frame.
MediaFrames render_synthetic_media(FoulType foul, Severity severity, const SyntheticConfig& cfg, Rng& rng,
                                   int& foul_frame_index);

/// The templated referee answer for a label pair. `variant` picks one of two
/// phrasings per question; `card_question` selects the "What card" template.
std::string synthetic_answer(FoulType foul, Severity severity, bool card_question, int variant);

inline constexpr const char* kCardQuestion = "What card would you give? Why?";
inline constexpr const char* kFoulQuestion = "Is it a foul or not? Why?";

/// Writes `<out_dir>/media/*.xvc` and `<out_dir>/manifest.csv` and returns the
/// dataset as loaded from that manifest.
Dataset generate_synthetic(const SyntheticConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace xvars::data
