#include "xvars/service/chat.hpp"

#include <ctime>
#include <random>
#include <iomanip>
#include <sstream>

#include "xvars/common/error.hpp"

namespace xvars::service {

std::string utc_timestamp() {
    const auto t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string chat_turn(const XVarsModel& model, ChatSession& session, const std::string& message,
                      const InferenceOptions& options) {
    require(!message.empty(), ErrorCode::EmptyInput, "message is empty");
    auto prompt = session.last_prompt
                      ? continue_conversation(*session.last_prompt, session.history.back().text, message,
                                              model.tokenizer())
                      : model.build_prompt(session.prepared, message);
    auto reply = model.generate(prompt, options);
    session.history.push_back({"user", message});
    session.history.push_back({"assistant", reply});
    session.last_prompt = std::move(prompt);
    return reply;
}

ChatStore::ChatStore(std::chrono::duration<double> idle_timeout, Clock clock)
    : idle_timeout_(idle_timeout), clock_(std::move(clock)), salt_(std::random_device{}()) {}

std::shared_ptr<ChatSession> ChatStore::open(const std::string& clip_id, PreparedClip prepared) {
    auto s = std::make_shared<ChatSession>();
    s->clip_id = clip_id;
    s->prepared = std::move(prepared);
    s->created_at = utc_timestamp();
    std::lock_guard lock(mutex_);
    expire_locked();
    std::ostringstream id;
    id << "s" << std::hex << std::setw(8) << std::setfill('0') << (salt_ & 0xffffffffULL) << "-" << std::dec
       << ++counter_;
    s->session_id = id.str();
    s->last_used = clock_();
    sessions_[s->session_id] = s;
    return s;
}

std::shared_ptr<ChatSession> ChatStore::get(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    expire_locked();
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        fail(ErrorCode::NotFound, "unknown or expired session '" + session_id + "'");
    }
    it->second->last_used = clock_();
    return it->second;
}

void ChatStore::touch(ChatSession& session) {
    std::lock_guard lock(mutex_);
    session.last_used = clock_();
}

std::size_t ChatStore::size() {
    std::lock_guard lock(mutex_);
    expire_locked();
    return sessions_.size();
}

void ChatStore::expire_locked() {
    const auto now = clock_();
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        if (now - it->second->last_used > idle_timeout_) {
            it = sessions_.erase(it);
        } else {
            ++it;
        }
    }
}

}  // namespace xvars::service
