#include "xvars/dataset/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "xvars/common/error.hpp"
#include "xvars/dataset/manifest.hpp"
#include "xvars/dataset/split.hpp"

namespace xvars::data {
namespace {

// Channel levels of the foul-type colours; bit k of the index selects the high
// level on channel k.
constexpr double kLow = 0.4;
constexpr double kHigh = 0.9;

std::array<double, 3> foul_colour(FoulType foul) {
    const int i = index_of(foul);
    return {(i & 1) ? kHigh : kLow, (i & 2) ? kHigh : kLow, (i & 4) ? kHigh : kLow};
}

bool severity_texture(Severity severity, int y, int x) {
    switch (severity) {
        case Severity::NoOffence: return y % 2 == 0;
        case Severity::OffenceNoCard: return x % 2 == 0;
        case Severity::OffenceYellowCard: return (x + y) % 2 == 0;
        case Severity::OffenceRedCard: return (x + y) % 3 == 0;
    }
    return false;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

const std::array<std::array<const char*, 2>, kFoulTypeCount> kReasons = {{
    {"The tackle from behind was late.", "He went in with a late tackle."},
    {"He held the shirt of the attacker.", "He was holding the opponent back."},
    {"He pushed the opponent in the back.", "The push on the attacker was clear."},
    {"It was a standing tackle on the ankle.", "The standing tackle caught the opponent."},
    {"He used his elbow against the opponent.", "The elbow hit the face of the attacker."},
    {"The attacker tried a dive.", "It was simulation by the attacker."},
    {"The challenge was careless.", "He made a careless challenge on the attacker."},
    {"His high leg caught the opponent.", "The high foot was dangerous for the attacker."},
}};

const std::array<const char*, kSeverityCount> kVerdicts = {"No foul.", "No card.", "Yellow card.", "Red card."};

}  // namespace

void SyntheticConfig::validate() const {
    require(clips_per_combination >= 1 && media_frames >= 1, ErrorCode::InvalidArgument,
            "synthetic: need at least one clip per combination and one frame");
    require(cell >= 1 && height % cell == 0 && width % cell == 0 && (height / cell) * (width / cell) >= 2,
            ErrorCode::InvalidArgument, "synthetic: frame must hold at least two aligned cells");
    require(train_fraction > 0 && train_fraction < 1, ErrorCode::InvalidArgument,
            "synthetic: train_fraction must be in (0, 1)");
    require(background_level >= 0 && background_level < kLow, ErrorCode::InvalidArgument,
            "synthetic: background must stay below the marker colours");
}

MediaFrames render_synthetic_media(FoulType foul, Severity severity, const SyntheticConfig& cfg, Rng& rng,
                                   int& foul_frame_index) {
    cfg.validate();
    MediaFrames m;
    m.frames = cfg.media_frames;
    m.height = cfg.height;
    m.width = cfg.width;
    m.channels = 3;
    m.fps = 25.0;
    m.pixels.resize(static_cast<std::size_t>(m.frames) * m.height * m.width * 3);

    const int cells_x = cfg.width / cfg.cell;
    const int cell_count = (cfg.height / cfg.cell) * cells_x;
    foul_frame_index = static_cast<int>(rng.below(static_cast<std::size_t>(m.frames)));

    const auto colour = foul_colour(foul);
    for (int t = 0; t < m.frames; ++t) {
        const int foul_cell = static_cast<int>(rng.below(static_cast<std::size_t>(cell_count)));
        int sev_cell = static_cast<int>(rng.below(static_cast<std::size_t>(cell_count - 1)));
        if (sev_cell >= foul_cell) ++sev_cell;
        for (int y = 0; y < m.height; ++y) {
            for (int x = 0; x < m.width; ++x) {
                const int c_idx = (y / cfg.cell) * cells_x + x / cfg.cell;
                const auto base = ((static_cast<std::size_t>(t) * m.height + y) * m.width + x) * 3;
                for (int c = 0; c < 3; ++c) {
                    double v;
                    if (c_idx == foul_cell) {
                        v = colour[static_cast<std::size_t>(c)] + rng.uniform(-cfg.marker_noise, cfg.marker_noise);
                    } else if (c_idx == sev_cell) {
                        const bool on = severity_texture(severity, y % cfg.cell, x % cfg.cell);
                        v = (on ? 1.0 : 0.0) + rng.uniform(-cfg.marker_noise, cfg.marker_noise);
                    } else {
                        v = rng.uniform(0.0, cfg.background_level);
                    }
                    m.pixels[base + static_cast<std::size_t>(c)] = to_byte(v);
                }
            }
        }
    }
    return m;
}

std::string synthetic_answer(FoulType foul, Severity severity, bool card_question, int variant) {
    const std::string reason = kReasons[static_cast<std::size_t>(index_of(foul))][static_cast<std::size_t>(variant & 1)];
    const std::string verdict = kVerdicts[static_cast<std::size_t>(index_of(severity))];
    if (card_question || severity == Severity::NoOffence) {
        return verdict + " " + reason;
    }
    return "It is a foul. " + verdict + " " + reason;
}

Dataset generate_synthetic(const SyntheticConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    std::filesystem::create_directories(out_dir / "media");
    Rng rng(cfg.seed);
    Rng media_rng = rng.fork(1);
    Rng meta_rng = rng.fork(2);

    std::vector<ClipRecord> clips;
    std::vector<VqaTriplet> triplets;
    const std::array<const char*, 4> languages = {"en", "fr", "de", "it"};
    int n = 0;
    for (int f = 0; f < kFoulTypeCount; ++f) {
        for (int s = 0; s < kSeverityCount; ++s) {
            for (int k = 0; k < cfg.clips_per_combination; ++k, ++n) {
                char id[32];
                std::snprintf(id, sizeof id, "clip_%04d", n);
                const auto foul = foul_type_from_index(f);
                const auto severity = severity_from_index(s);
                ClipRecord c;
                c.clip_id = id;
                c.media = std::string("media/") + id + ".xvc";
                c.gt_foul = foul;
                c.gt_severity = severity;
                const auto media = render_synthetic_media(foul, severity, cfg, media_rng, c.foul_frame_index);
                write_xvc(out_dir / c.media, media);

                auto triplet = [&](const char* question, bool card, int variant, int annotator) {
                    VqaTriplet t;
                    t.clip_id = id;
                    t.question = question;
                    t.answer = synthetic_answer(foul, severity, card, variant);
                    t.annotator_id = "ref_" + std::to_string(annotator);
                    t.games_officiated = 50 + annotator * 37;
                    t.original_language = languages[static_cast<std::size_t>(annotator) % languages.size()];
                    triplets.push_back(std::move(t));
                };
                const int annotator = static_cast<int>(meta_rng.below(6));
                triplet(kCardQuestion, true, static_cast<int>(meta_rng.below(2)), annotator);
                triplet(kFoulQuestion, false, static_cast<int>(meta_rng.below(2)), annotator);
                if (cfg.second_answer_every > 0 && n % cfg.second_answer_every == 0) {
                    triplet(kCardQuestion, true, static_cast<int>(meta_rng.below(2)), (annotator + 1) % 6);
                }
                clips.push_back(std::move(c));
            }
        }
    }
    Dataset dataset(std::move(clips), std::move(triplets), out_dir);
    apply_split(dataset, split_dataset(dataset.clips(), cfg.train_fraction, cfg.seed));
    save_dataset(out_dir / "manifest.csv", dataset);
    return load_dataset(out_dir / "manifest.csv");
}

}  // namespace xvars::data
