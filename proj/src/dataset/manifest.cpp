#include "xvars/dataset/manifest.hpp"

#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "xvars/common/csv.hpp"
#include "xvars/common/error.hpp"

namespace xvars::data {
namespace {

constexpr std::array<std::string_view, 9> kRequired = {
    "clip_id", "media", "foul_frame", "foul_type", "severity", "split", "question", "answer", "annotator_id",
};
constexpr std::array<std::string_view, 2> kOptional = {"games_officiated", "language"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::string where(const std::string& origin, std::size_t line) { return origin + ":" + std::to_string(line) + ": "; }

int parse_nonnegative(const std::string& text, const std::string& column, const std::string& at) {
    std::size_t pos = 0;
    long long v = -1;
    try {
        v = std::stoll(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || v < 0 || v > 1'000'000'000) {
        fail(ErrorCode::Schema, at + column + " must be a non-negative integer, got '" + text + "'");
    }
    return static_cast<int>(v);
}

}  // namespace

Dataset parse_manifest(std::string_view text, const std::string& origin, const std::filesystem::path& base_dir) {
    auto rows = csv::parse(text);
    if (rows.empty()) {
        fail(ErrorCode::Schema, origin + ": empty manifest (missing header)");
    }
    std::map<std::string, std::size_t> col;
    const auto& header = rows.front();
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
        const auto name = trim(header.fields[i]);
        const bool known = std::find(kRequired.begin(), kRequired.end(), name) != kRequired.end() ||
                           std::find(kOptional.begin(), kOptional.end(), name) != kOptional.end();
        if (!known) {
            fail(ErrorCode::Schema, where(origin, header.line) + "unknown column '" + name + "'");
        }
        if (!col.emplace(name, i).second) {
            fail(ErrorCode::Schema, where(origin, header.line) + "column '" + name + "' appears twice");
        }
    }
    for (auto name : kRequired) {
        if (!col.count(std::string(name))) {
            fail(ErrorCode::Schema, where(origin, header.line) + "missing column '" + std::string(name) + "'");
        }
    }

    std::vector<ClipRecord> clips;
    std::map<std::string, std::size_t> clip_line;
    std::vector<std::pair<VqaTriplet, std::size_t>> triplets;
    std::set<std::tuple<std::string, std::string, std::string>> seen;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto at = where(origin, row.line);
        if (row.fields.size() != header.fields.size()) {
            fail(ErrorCode::Schema, at + "expected " + std::to_string(header.fields.size()) + " fields, found " +
                                        std::to_string(row.fields.size()));
        }
        auto get = [&](std::string_view name) -> std::string {
            const auto it = col.find(std::string(name));
            return it == col.end() ? std::string() : row.fields[it->second];
        };
        const auto clip_id = trim(get("clip_id"));
        if (clip_id.empty()) {
            fail(ErrorCode::Schema, at + "empty clip_id");
        }
        const auto media = trim(get("media"));
        const auto foul_frame = trim(get("foul_frame"));
        const auto foul_type = trim(get("foul_type"));
        const auto severity = trim(get("severity"));
        const auto split = trim(get("split"));
        if (!media.empty()) {
            if (clip_line.count(clip_id)) {
                fail(ErrorCode::DuplicateRecord, at + "clip '" + clip_id + "' already defined on line " +
                                                     std::to_string(clip_line[clip_id]));
            }
            ClipRecord c;
            c.clip_id = clip_id;
            c.media = media;
            if (foul_frame.empty()) {
                fail(ErrorCode::Schema, at + "clip '" + clip_id + "' has no foul_frame");
            }
            c.foul_frame_index = parse_nonnegative(foul_frame, "foul_frame", at);
            if (!foul_type.empty()) {
                c.gt_foul = parse_foul_type(foul_type);
                if (!c.gt_foul) {
                    fail(ErrorCode::InvalidLabel, at + "unknown foul type '" + foul_type + "'");
                }
            }
            if (!severity.empty()) {
                c.gt_severity = parse_severity(severity);
                if (!c.gt_severity) {
                    fail(ErrorCode::InvalidLabel, at + "unknown severity '" + severity + "'");
                }
            }
            const auto s = parse_split(split);
            if (!s) {
                fail(ErrorCode::Schema, at + "split must be 'train' or 'test', got '" + split + "'");
            }
            c.split = *s;
            clip_line[clip_id] = row.line;
            clips.push_back(std::move(c));
        } else if (!foul_frame.empty() || !foul_type.empty() || !severity.empty() || !split.empty()) {
            fail(ErrorCode::Schema, at + "clip columns given without media; clip '" + clip_id +
                                        "' must be defined on exactly one row");
        }

        const auto question = get("question");
        const auto answer = get("answer");
        const bool q_empty = trim(question).empty();
        const bool a_empty = trim(answer).empty();
        if (q_empty && a_empty) {
            if (media.empty()) {
                fail(ErrorCode::Schema, at + "row defines neither a clip nor a triplet");
            }
            continue;
        }
        if (q_empty) fail(ErrorCode::Schema, at + "empty question");
        if (a_empty) fail(ErrorCode::Schema, at + "empty answer");
        VqaTriplet t;
        t.clip_id = clip_id;
        t.question = question;
        t.answer = answer;
        t.annotator_id = trim(get("annotator_id"));
        if (t.annotator_id.empty()) {
            fail(ErrorCode::Schema, at + "empty annotator_id");
        }
        const auto games = trim(get("games_officiated"));
        if (!games.empty()) t.games_officiated = parse_nonnegative(games, "games_officiated", at);
        const auto lang = trim(get("language"));
        if (!lang.empty()) t.original_language = lang;
        if (!seen.emplace(t.clip_id, t.question, t.annotator_id).second) {
            fail(ErrorCode::DuplicateRecord, at + "duplicate (clip_id, question, annotator_id) for clip '" +
                                                 clip_id + "'");
        }
        triplets.emplace_back(std::move(t), row.line);
    }

    std::vector<VqaTriplet> out;
    out.reserve(triplets.size());
    for (auto& [t, line] : triplets) {
        if (!clip_line.count(t.clip_id)) {
            fail(ErrorCode::DanglingReference, where(origin, line) + "clip '" + t.clip_id + "' is never defined");
        }
        out.push_back(std::move(t));
    }
    return Dataset(std::move(clips), std::move(out), base_dir);
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::MissingFile, "missing manifest " + manifest_path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str(), manifest_path.string(), manifest_path.parent_path());
}

std::string format_manifest(const Dataset& dataset) {
    std::ostringstream out;
    csv::write_row(out, {"clip_id", "media", "foul_frame", "foul_type", "severity", "split", "question", "answer",
                         "annotator_id", "games_officiated", "language"});
    std::map<std::string, std::vector<const VqaTriplet*>> by_clip;
    for (const auto& t : dataset.triplets()) by_clip[t.clip_id].push_back(&t);
    for (const auto& c : dataset.clips()) {
        std::vector<std::string> clip_cols = {
            c.clip_id,
            c.media,
            std::to_string(c.foul_frame_index),
            c.gt_foul ? std::string(display_name(*c.gt_foul)) : "",
            c.gt_severity ? std::string(display_name(*c.gt_severity)) : "",
            std::string(split_name(c.split)),
        };
        const auto& ts = by_clip[c.clip_id];
        if (ts.empty()) {
            auto row = clip_cols;
            row.insert(row.end(), {"", "", "", "", ""});
            csv::write_row(out, row);
            continue;
        }
        bool first = true;
        for (const auto* t : ts) {
            std::vector<std::string> row =
                first ? clip_cols : std::vector<std::string>{c.clip_id, "", "", "", "", ""};
            row.insert(row.end(), {t->question, t->answer, t->annotator_id,
                                   t->games_officiated ? std::to_string(*t->games_officiated) : "",
                                   t->original_language.value_or("")});
            csv::write_row(out, row);
            first = false;
        }
    }
    return out.str();
}

void save_dataset(const std::filesystem::path& manifest_path, const Dataset& dataset) {
    if (manifest_path.has_parent_path()) {
        std::filesystem::create_directories(manifest_path.parent_path());
    }
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot write " + manifest_path.string());
    }
    out << format_manifest(dataset);
}

}  // namespace xvars::data
