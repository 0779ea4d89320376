#include "xvars/evaluation/study.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "xvars/common/csv.hpp"
#include "xvars/common/error.hpp"
#include "xvars/common/ini.hpp"
#include "xvars/common/random.hpp"

namespace xvars::eval {

std::string_view source_name(Source s) { return s == Source::Human ? "human" : "model"; }

Source parse_source(std::string_view text) {
    if (text == "human") return Source::Human;
    if (text == "model") return Source::Model;
    fail(ErrorCode::InvalidArgument, "unknown explanation source '" + std::string(text) + "'");
}

std::vector<StudySession> create_study(const std::vector<StudyItem>& items, const std::vector<std::string>& raters,
                                       int items_per_rater, std::uint64_t seed) {
    require(items_per_rater >= 1, ErrorCode::InvalidArgument, "study: items_per_rater must be at least 1");
    require(!raters.empty(), ErrorCode::InvalidArgument, "study: no raters");
    std::set<std::string> rater_ids;
    for (const auto& r : raters) {
        require(!r.empty() && rater_ids.insert(r).second, ErrorCode::InvalidArgument,
                "study: rater ids must be non-empty and unique ('" + r + "')");
    }
    std::set<std::string> clips;
    for (const auto& it : items) clips.insert(it.clip_id);
    if (clips.size() < static_cast<std::size_t>(items_per_rater)) {
        fail(ErrorCode::InsufficientItems, "study: " + std::to_string(clips.size()) + " distinct clips, need " +
                                               std::to_string(items_per_rater) + " per rater");
    }

    Rng rng(seed);
    std::vector<int> usage(items.size(), 0);
    std::vector<StudySession> sessions;
    for (const auto& rater : raters) {
        std::vector<std::uint64_t> key(items.size());
        for (auto& k : key) k = rng.next();
        std::vector<std::size_t> order(items.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::tie(usage[a], key[a], a) < std::tie(usage[b], key[b], b);
        });
        std::vector<std::size_t> picked;
        std::set<std::string> taken;
        for (const auto i : order) {
            if (picked.size() == static_cast<std::size_t>(items_per_rater)) break;
            if (taken.insert(items[i].clip_id).second) picked.push_back(i);
        }
        rng.shuffle(picked);
        StudySession s{rater, {}};
        for (std::size_t k = 0; k < picked.size(); ++k) {
            const auto& it = items[picked[k]];
            ++usage[picked[k]];
            s.items.push_back({static_cast<int>(k), picked[k], it.clip_id, it.explanation, it.source});
        }
        sessions.push_back(std::move(s));
    }
    return sessions;
}

nlohmann::json rater_view(const StudySession& session, std::string_view media_prefix) {
    auto items = nlohmann::json::array();
    for (const auto& it : session.items) {
        items.push_back({{"item_index", it.item_index},
                         {"clip_url", std::string(media_prefix) + it.clip_id},
                         {"explanation", it.explanation}});
    }
    return {{"rater_id", session.rater_id}, {"items", items}};
}

nlohmann::json session_to_json(const StudySession& session) {
    auto items = nlohmann::json::array();
    for (const auto& it : session.items) {
        items.push_back({{"item_index", it.item_index},
                         {"pool_index", it.pool_index},
                         {"clip_id", it.clip_id},
                         {"explanation", it.explanation},
                         {"source", std::string(source_name(it.source))}});
    }
    return {{"rater_id", session.rater_id}, {"items", items}};
}

StudySession session_from_json(const nlohmann::json& j) {
    try {
        StudySession s;
        s.rater_id = j.at("rater_id").get<std::string>();
        for (const auto& it : j.at("items")) {
            s.items.push_back({it.at("item_index").get<int>(), it.at("pool_index").get<std::size_t>(),
                               it.at("clip_id").get<std::string>(), it.at("explanation").get<std::string>(),
                               parse_source(it.at("source").get<std::string>())});
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Schema, std::string("study session: ") + e.what());
    }
}

RatingLog::RatingLog(std::filesystem::path path) : path_(std::move(path)) {}

void RatingLog::append(const RatingRecord& r) const {
    const bool fresh = !std::filesystem::exists(path_) || std::filesystem::file_size(path_) == 0;
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) {
        fail(ErrorCode::Io, "cannot open rating log " + path_.string());
    }
    if (fresh) csv::write_row(out, {"rater_id", "item_index", "score", "timestamp"});
    csv::write_row(out, {r.rater_id, std::to_string(r.item_index), std::to_string(r.score), r.timestamp});
    out.flush();
    if (!out) {
        fail(ErrorCode::Io, "cannot append to rating log " + path_.string());
    }
}

std::vector<RatingRecord> RatingLog::load() const {
    std::vector<RatingRecord> out;
    if (!std::filesystem::exists(path_)) return out;
    std::ifstream in(path_, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto rows = csv::parse(buf.str());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        if (f.size() != 4) {
            fail(ErrorCode::Schema, path_.string() + ":" + std::to_string(rows[i].line) + ": expected 4 fields");
        }
        out.push_back({f[0], static_cast<int>(parse_int(f[1], "item_index")), static_cast<int>(parse_int(f[2], "score")),
                       f[3]});
    }
    return out;
}

std::array<int, 5> largest_remainder_percentages(const std::array<long long, 5>& counts) {
    const long long n = std::accumulate(counts.begin(), counts.end(), 0LL);
    std::array<int, 5> pct{};
    if (n == 0) return pct;
    std::array<long long, 5> remainder{};
    int assigned = 0;
    for (std::size_t k = 0; k < 5; ++k) {
        pct[k] = static_cast<int>(counts[k] * 100 / n);
        remainder[k] = counts[k] * 100 % n;
        assigned += pct[k];
    }
    std::array<std::size_t, 5> order{0, 1, 2, 3, 4};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < 100; ++k, ++assigned) ++pct[order[k]];
    return pct;
}

StudyReport study_summary(const std::vector<RatingRecord>& records, const std::vector<StudySession>& sessions) {
    std::map<std::string, const StudySession*> by_rater;
    for (const auto& s : sessions) by_rater[s.rater_id] = &s;

    StudyReport report;
    report.sources[0].source = Source::Human;
    report.sources[1].source = Source::Model;
    std::array<long long, 2> sums{};
    std::set<std::pair<std::string, int>> rated;
    // clip -> per-source (sum, count)
    std::map<std::string, std::array<std::pair<long long, long long>, 2>> per_clip;
    for (const auto& r : records) {
        const auto it = by_rater.find(r.rater_id);
        if (it == by_rater.end() || r.item_index < 0 ||
            r.item_index >= static_cast<int>(it->second->items.size())) {
            fail(ErrorCode::OrphanRecord, "study: rating for unknown item " + r.rater_id + "/" +
                                              std::to_string(r.item_index));
        }
        if (r.score < 1 || r.score > 5) {
            fail(ErrorCode::InvalidArgument, "study: score " + std::to_string(r.score) + " outside 1..5");
        }
        if (!rated.emplace(r.rater_id, r.item_index).second) {
            fail(ErrorCode::DuplicateRecord, "study: item " + r.rater_id + "/" + std::to_string(r.item_index) +
                                                 " rated twice");
        }
        const auto& item = it->second->items[static_cast<std::size_t>(r.item_index)];
        const auto s = static_cast<std::size_t>(item.source);
        auto& summary = report.sources[s];
        ++summary.n;
        ++summary.counts[static_cast<std::size_t>(r.score - 1)];
        sums[s] += r.score;
        auto& cell = per_clip[item.clip_id][s];
        cell.first += r.score;
        ++cell.second;
    }
    for (std::size_t s = 0; s < 2; ++s) {
        auto& summary = report.sources[s];
        if (summary.n > 0) summary.mean = static_cast<double>(sums[s]) / static_cast<double>(summary.n);
        summary.percent = largest_remainder_percentages(summary.counts);
    }
    for (const auto& [clip, cells] : per_clip) {
        if (cells[0].second == 0 || cells[1].second == 0) continue;
        ++report.paired.n_pairs;
        // Compare means without division: model_sum/model_n > human_sum/human_n.
        if (cells[1].first * cells[0].second > cells[0].first * cells[1].second) ++report.paired.n_model_higher;
    }
    if (report.paired.n_pairs > 0) {
        report.paired.fraction =
            static_cast<double>(report.paired.n_model_higher) / static_cast<double>(report.paired.n_pairs);
    }
    return report;
}

}  // namespace xvars::eval
