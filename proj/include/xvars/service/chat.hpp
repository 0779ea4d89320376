#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "xvars/model/xvars_model.hpp"

namespace xvars::service {

using Clock = std::function<std::chrono::steady_clock::time_point()>;

/// Current UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

struct ChatTurn {
    std::string role;  // "user" or "assistant"
    std::string text;
};

/// One conversation about one clip. The clip is encoded once, when the
/// session is opened; every turn reuses the cached visual tokens and
/// predictions.
struct ChatSession {
    std::string session_id;
    std::string clip_id;
    PreparedClip prepared;
    std::vector<ChatTurn> history;
    std::string created_at;  // UTC, ISO 8601
    std::optional<PromptSequence> last_prompt;  // prompt of the latest assistant turn

    std::chrono::steady_clock::time_point last_used;
    std::mutex busy;
};

/// Appends one user/assistant exchange. The first turn uses the model's own
/// prompt (question, predicted labels, visual tokens); later turns continue
/// the previous prompt. History is only touched when generation succeeds.
std::string chat_turn(const XVarsModel& model, ChatSession& session, const std::string& message,
                      const InferenceOptions& options);

/// In-memory sessions with an idle timeout. Expired sessions are dropped the
/// next time the store is touched.
class ChatStore {
public:
    ChatStore(std::chrono::duration<double> idle_timeout, Clock clock = std::chrono::steady_clock::now);

    std::shared_ptr<ChatSession> open(const std::string& clip_id, PreparedClip prepared);
    /// NotFound for unknown or expired ids.
    std::shared_ptr<ChatSession> get(const std::string& session_id);
    void touch(ChatSession& session);
    std::size_t size();

private:
    void expire_locked();

    std::chrono::duration<double> idle_timeout_;
    Clock clock_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<ChatSession>> sessions_;
    unsigned long long counter_ = 0;
    std::uint64_t salt_;
};

}  // namespace xvars::service
