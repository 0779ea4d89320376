#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xvars/evaluation/study.hpp"

namespace xvars::service {

/// Study pool CSV with header clip_id,source,explanation.
std::vector<eval::StudyItem> load_study_pool(const std::filesystem::path& path);
void save_study_pool(const std::filesystem::path& path, const std::vector<eval::StudyItem>& items);

/// The blind study as the service runs it: assignments in
/// `<dir>/study.json` (replaced atomically), ratings appended to
/// `<dir>/ratings.csv` as they arrive. Reopening the directory restores both.
class StudyStore {
public:
    explicit StudyStore(std::filesystem::path dir);

    bool active() const;
    /// Conflict when a study already exists.
    void create(const std::vector<eval::StudyItem>& items, const std::vector<std::string>& raters,
                int items_per_rater, std::uint64_t seed);

    /// First unrated item in presentation order, or nullopt when done.
    /// NotFound for unknown raters.
    std::optional<eval::AssignedItem> next(const std::string& rater_id) const;
    /// (rated, assigned) for a rater.
    std::pair<int, int> progress(const std::string& rater_id) const;

    /// NotFound for unknown raters or items, InvalidArgument for scores
    /// outside 1..5, Conflict when the item was already rated.
    void rate(const std::string& rater_id, int item_index, int score, const std::string& timestamp);

    eval::StudyReport summary() const;
    std::vector<eval::StudySession> sessions() const;
    std::vector<eval::RatingRecord> ratings() const;

private:
    const eval::StudySession& session_locked(const std::string& rater_id) const;

    std::filesystem::path dir_;
    eval::RatingLog log_;
    mutable std::mutex mutex_;
    std::vector<eval::StudySession> sessions_;
    std::vector<eval::RatingRecord> ratings_;
    std::set<std::pair<std::string, int>> rated_;
};

}  // namespace xvars::service
