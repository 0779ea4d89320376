#include "xvars/dataset/records.hpp"

#include <set>

#include "xvars/common/error.hpp"

namespace xvars::data {

std::string_view split_name(Split s) { return s == Split::Train ? "train" : "test"; }

std::optional<Split> parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "test") return Split::Test;
    return std::nullopt;
}

Dataset::Dataset(std::vector<ClipRecord> clips, std::vector<VqaTriplet> triplets, std::filesystem::path base_dir)
    : clips_(std::move(clips)), triplets_(std::move(triplets)), base_dir_(std::move(base_dir)) {
    index();
}

void Dataset::index() {
    by_id_.clear();
    for (std::size_t i = 0; i < clips_.size(); ++i) {
        if (!by_id_.emplace(clips_[i].clip_id, i).second) {
            fail(ErrorCode::DuplicateRecord, "clip '" + clips_[i].clip_id + "' defined twice");
        }
    }
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& t : triplets_) {
        if (!by_id_.count(t.clip_id)) {
            fail(ErrorCode::DanglingReference, "triplet references unknown clip '" + t.clip_id + "'");
        }
        if (!seen.emplace(t.clip_id, t.question, t.annotator_id).second) {
            fail(ErrorCode::DuplicateRecord, "duplicate triplet for clip '" + t.clip_id + "', annotator '" +
                                                 t.annotator_id + "'");
        }
    }
}

const ClipRecord* Dataset::find_clip(std::string_view clip_id) const {
    const auto it = by_id_.find(std::string(clip_id));
    return it == by_id_.end() ? nullptr : &clips_[it->second];
}

const ClipRecord& Dataset::clip(std::string_view clip_id) const {
    const auto* c = find_clip(clip_id);
    if (!c) {
        fail(ErrorCode::NotFound, "unknown clip '" + std::string(clip_id) + "'");
    }
    return *c;
}

std::filesystem::path Dataset::media_path(const ClipRecord& clip) const {
    const std::filesystem::path p(clip.media);
    return p.is_absolute() ? p : base_dir_ / p;
}

std::vector<const ClipRecord*> Dataset::clips_in(Split split) const {
    std::vector<const ClipRecord*> out;
    for (const auto& c : clips_) {
        if (c.split == split) out.push_back(&c);
    }
    return out;
}

std::vector<const VqaTriplet*> Dataset::triplets_in(Split split) const {
    std::vector<const VqaTriplet*> out;
    for (const auto& t : triplets_) {
        if (find_clip(t.clip_id)->split == split) out.push_back(&t);
    }
    return out;
}

void Dataset::assign_split(const std::vector<std::string>& clip_ids, Split split) {
    for (const auto& id : clip_ids) {
        const auto it = by_id_.find(id);
        if (it == by_id_.end()) {
            fail(ErrorCode::DanglingReference, "split names unknown clip '" + id + "'");
        }
        clips_[it->second].split = split;
    }
}

}  // namespace xvars::data
