#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xvars/model/labels.hpp"

namespace xvars::data {

enum class Split { Train, Test };

std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view text);

struct ClipRecord {
    std::string clip_id;
    std::string media;  // path, relative to the manifest directory unless absolute
    int foul_frame_index = 0;
    std::optional<FoulType> gt_foul;
    std::optional<Severity> gt_severity;
    Split split = Split::Train;
};

struct VqaTriplet {
    std::string clip_id;
    std::string question;
    std::string answer;
    std::string annotator_id;
    std::optional<int> games_officiated;
    std::optional<std::string> original_language;
};

/// Clips and triplets with referential integrity: every triplet's clip_id
/// names exactly one clip.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<ClipRecord> clips, std::vector<VqaTriplet> triplets, std::filesystem::path base_dir = {});

    const std::vector<ClipRecord>& clips() const { return clips_; }
    const std::vector<VqaTriplet>& triplets() const { return triplets_; }
    const std::filesystem::path& base_dir() const { return base_dir_; }

    const ClipRecord* find_clip(std::string_view clip_id) const;
    const ClipRecord& clip(std::string_view clip_id) const;
    /// Absolute path of a clip's media.
    std::filesystem::path media_path(const ClipRecord& clip) const;

    std::vector<const ClipRecord*> clips_in(Split split) const;
    std::vector<const VqaTriplet*> triplets_in(Split split) const;

    /// Reassigns splits; ids not listed keep their current split.
    void assign_split(const std::vector<std::string>& clip_ids, Split split);

private:
    void index();

    std::vector<ClipRecord> clips_;
    std::vector<VqaTriplet> triplets_;
    std::filesystem::path base_dir_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace xvars::data
