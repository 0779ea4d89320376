#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace xvars::eval {

enum class Source { Human, Model };
std::string_view source_name(Source s);
/// "human" or "model"; InvalidArgument otherwise.
Source parse_source(std::string_view text);

struct StudyItem {
    std::string clip_id;
    std::string explanation;
    Source source = Source::Human;
};

/// One item as assigned to a rater. item_index is the presentation position.
struct AssignedItem {
    int item_index = 0;
    std::size_t pool_index = 0;
    std::string clip_id;
    std::string explanation;
    Source source = Source::Human;
};

struct StudySession {
    std::string rater_id;
    std::vector<AssignedItem> items;
};

/// Gives every rater exactly items_per_rater items with distinct clips.
/// Items are drawn least-used first (ties broken by a seeded shuffle) so the
/// pool is covered evenly; presentation order is shuffled per rater.
/// InsufficientItems when the pool has fewer distinct clips than
/// items_per_rater; InvalidArgument for empty or repeated rater ids.
std::vector<StudySession> create_study(const std::vector<StudyItem>& items, const std::vector<std::string>& raters,
                                       int items_per_rater = 20, std::uint64_t seed = 0);

/// What a rater's client receives: rater_id and items with item_index,
/// clip_url and explanation. The source never appears.
nlohmann::json rater_view(const StudySession& session, std::string_view media_prefix = "/v1/media/");
/// Server-side form, including sources; used for persistence.
nlohmann::json session_to_json(const StudySession& session);
StudySession session_from_json(const nlohmann::json& j);

struct RatingRecord {
    std::string rater_id;
    int item_index = 0;
    int score = 0;  // 1..5
    std::string timestamp;
};

/// Append-only CSV of ratings: rater_id,item_index,score,timestamp.
class RatingLog {
public:
    explicit RatingLog(std::filesystem::path path);
    void append(const RatingRecord& record) const;
    std::vector<RatingRecord> load() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct SourceSummary {
    Source source = Source::Human;
    long long n = 0;
    std::optional<double> mean;
    std::array<long long, 5> counts{};
    std::array<int, 5> percent{};  // sums to 100 when n > 0
};

/// Clips that were rated under both sources, and on how many of them the
/// model's explanation got the higher mean score.
struct PairedComparison {
    long long n_pairs = 0;
    long long n_model_higher = 0;
    std::optional<double> fraction;
};

struct StudyReport {
    std::array<SourceSummary, 2> sources;  // human, model
    PairedComparison paired;
};

/// Integer percentages that sum to 100: floors first, then the remaining
/// points go to the largest remainders (lower score first on ties).
std::array<int, 5> largest_remainder_percentages(const std::array<long long, 5>& counts);

/// OrphanRecord when a record names an unknown rater or item;
/// DuplicateRecord when an item is rated twice; InvalidArgument for scores
/// outside 1..5.
StudyReport study_summary(const std::vector<RatingRecord>& records, const std::vector<StudySession>& sessions);

}  // namespace xvars::eval
