#include "xvars/service/study_store.hpp"

#include <fstream>
#include <sstream>

#include "xvars/common/csv.hpp"
#include "xvars/common/error.hpp"

namespace xvars::service {
namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::MissingFile, "cannot read " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        out.flush();
        if (!out) {
            fail(ErrorCode::Io, "cannot write " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

std::vector<eval::StudyItem> load_study_pool(const std::filesystem::path& path) {
    const auto rows = csv::parse(read_file(path));
    if (rows.empty() || rows[0].fields != std::vector<std::string>{"clip_id", "source", "explanation"}) {
        fail(ErrorCode::Schema, path.string() + ":1: expected header clip_id,source,explanation");
    }
    std::vector<eval::StudyItem> items;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        const auto where = path.string() + ":" + std::to_string(rows[i].line) + ": ";
        if (f.size() != 3) {
            fail(ErrorCode::Schema, where + "expected 3 fields");
        }
        try {
            items.push_back({f[0], f[2], eval::parse_source(f[1])});
        } catch (const Error& e) {
            fail(ErrorCode::Schema, where + e.what());
        }
    }
    return items;
}

void save_study_pool(const std::filesystem::path& path, const std::vector<eval::StudyItem>& items) {
    std::ostringstream out;
    csv::write_row(out, {"clip_id", "source", "explanation"});
    for (const auto& it : items) {
        csv::write_row(out, {it.clip_id, std::string(eval::source_name(it.source)), it.explanation});
    }
    write_atomically(path, out.str());
}

StudyStore::StudyStore(std::filesystem::path dir) : dir_(std::move(dir)), log_(dir_ / "ratings.csv") {
    std::filesystem::create_directories(dir_);
    const auto study_path = dir_ / "study.json";
    if (!std::filesystem::exists(study_path)) return;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(study_path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Schema, study_path.string() + ": " + e.what());
    }
    if (!j.contains("sessions") || !j["sessions"].is_array()) {
        fail(ErrorCode::Schema, study_path.string() + ": missing 'sessions'");
    }
    for (const auto& s : j["sessions"]) sessions_.push_back(eval::session_from_json(s));
    ratings_ = log_.load();
    // Rejects orphan and duplicate records left in the log.
    eval::study_summary(ratings_, sessions_);
    for (const auto& r : ratings_) rated_.emplace(r.rater_id, r.item_index);
}

bool StudyStore::active() const {
    std::lock_guard lock(mutex_);
    return !sessions_.empty();
}

void StudyStore::create(const std::vector<eval::StudyItem>& items, const std::vector<std::string>& raters,
                        int items_per_rater, std::uint64_t seed) {
    std::lock_guard lock(mutex_);
    if (!sessions_.empty()) {
        fail(ErrorCode::Conflict, "a study already exists in " + dir_.string());
    }
    auto sessions = eval::create_study(items, raters, items_per_rater, seed);
    nlohmann::json j;
    j["sessions"] = nlohmann::json::array();
    for (const auto& s : sessions) j["sessions"].push_back(eval::session_to_json(s));
    write_atomically(dir_ / "study.json", j.dump(2) + "\n");
    sessions_ = std::move(sessions);
}

const eval::StudySession& StudyStore::session_locked(const std::string& rater_id) const {
    for (const auto& s : sessions_) {
        if (s.rater_id == rater_id) return s;
    }
    fail(ErrorCode::NotFound, "unknown rater '" + rater_id + "'");
}

std::optional<eval::AssignedItem> StudyStore::next(const std::string& rater_id) const {
    std::lock_guard lock(mutex_);
    for (const auto& it : session_locked(rater_id).items) {
        if (!rated_.count({rater_id, it.item_index})) return it;
    }
    return std::nullopt;
}

std::pair<int, int> StudyStore::progress(const std::string& rater_id) const {
    std::lock_guard lock(mutex_);
    const auto& s = session_locked(rater_id);
    int done = 0;
    for (const auto& it : s.items) done += rated_.count({rater_id, it.item_index}) ? 1 : 0;
    return {done, static_cast<int>(s.items.size())};
}

void StudyStore::rate(const std::string& rater_id, int item_index, int score, const std::string& timestamp) {
    std::lock_guard lock(mutex_);
    const auto& s = session_locked(rater_id);
    if (item_index < 0 || item_index >= static_cast<int>(s.items.size())) {
        fail(ErrorCode::NotFound, "rater '" + rater_id + "' has no item " + std::to_string(item_index));
    }
    if (score < 1 || score > 5) {
        fail(ErrorCode::InvalidArgument, "score must be in 1..5, got " + std::to_string(score));
    }
    if (rated_.count({rater_id, item_index})) {
        fail(ErrorCode::Conflict, "item " + std::to_string(item_index) + " was already rated");
    }
    const eval::RatingRecord record{rater_id, item_index, score, timestamp};
    log_.append(record);
    ratings_.push_back(record);
    rated_.emplace(rater_id, item_index);
}

eval::StudyReport StudyStore::summary() const {
    std::lock_guard lock(mutex_);
    if (sessions_.empty()) {
        fail(ErrorCode::NotFound, "no study has been created");
    }
    return eval::study_summary(ratings_, sessions_);
}

std::vector<eval::StudySession> StudyStore::sessions() const {
    std::lock_guard lock(mutex_);
    return sessions_;
}

std::vector<eval::RatingRecord> StudyStore::ratings() const {
    std::lock_guard lock(mutex_);
    return ratings_;
}

}  // namespace xvars::service
