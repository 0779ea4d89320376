#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "xvars/dataset/records.hpp"

namespace xvars::data {

// Dataset manifest: UTF-8 CSV, one header line, one row per triplet. Columns:
//   clip_id, media, foul_frame, foul_type, severity, split, question, answer,
//   annotator_id[, games_officiated][, language]
// A row with non-empty `media` defines its clip; other rows of the same clip
// leave the clip columns empty. A row with empty question and answer defines
// a clip without triplets. See docs/dataset_manifest.md.

/// Schema errors name the manifest line; DanglingReference for triplets whose
/// clip is never defined; DuplicateRecord for repeated clips or repeated
/// (clip_id, question, annotator_id).
Dataset parse_manifest(std::string_view text, const std::string& origin = "<memory>",
                       const std::filesystem::path& base_dir = {});
Dataset load_dataset(const std::filesystem::path& manifest_path);

std::string format_manifest(const Dataset& dataset);
void save_dataset(const std::filesystem::path& manifest_path, const Dataset& dataset);

}  // namespace xvars::data
