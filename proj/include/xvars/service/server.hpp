#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "xvars/common/error.hpp"
#include "xvars/dataset/media.hpp"
#include "xvars/dataset/records.hpp"
#include "xvars/model/xvars_model.hpp"
#include "xvars/service/chat.hpp"
#include "xvars/service/config.hpp"
#include "xvars/service/study_store.hpp"

namespace httplib {
class Server;
}

namespace xvars::service {

/// HTTP status for a library error category.
int http_status(ErrorCode code);

/// The /v1 HTTP API. The model may be null (or lack a language model); the
/// endpoints that need it then answer 409.
///
///   GET  /v1/health                      liveness and model state
///   GET  /v1/config                      effective settings, without secrets
///   GET  /v1/clips                       servable clip ids
///   GET  /v1/media/{clip_id}             clip media bytes (Range supported)
///   POST /v1/infer                       {clip_id, question}
///   POST /v1/chat/sessions               {clip_id} -> new session
///   GET  /v1/chat/sessions/{id}          history
///   POST /v1/chat                        {session_id, message}
///   POST /v1/study                       admin: {raters, items?, items_per_rater?, seed?}
///   GET  /v1/study/{rater}/next          {item_index, clip_url, explanation} or 204
///   POST /v1/study/{rater}/rating        {item_index, score}
///   GET  /v1/study/summary               admin
///   GET  /v1/stats                       admin: counters
///
/// Admin requests carry the token as "Authorization: Bearer <token>" or
/// "X-Admin-Token: <token>". With no token configured they are always 403.
class Service {
public:
    Service(ServiceConfig config, std::shared_ptr<const XVarsModel> model,
            std::shared_ptr<const data::Dataset> dataset,
            std::shared_ptr<const data::MediaReader> reader = std::make_shared<data::FileMediaReader>(),
            Clock clock = std::chrono::steady_clock::now);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds host:port (port 0 picks a free one) and serves on a background
    /// thread. Returns the bound port.
    int start();
    /// Serves on the calling thread until stop().
    void run();
    void stop();

    /// Number of clip encodings performed (one per /infer, one per chat session).
    long long encoder_calls() const { return encoder_calls_.load(); }
    ChatStore& chats() { return chats_; }
    StudyStore& study() { return study_; }
    const ServiceConfig& config() const { return config_; }

private:
    void install_routes();
    PreparedClip prepare(const std::string& clip_id);
    const XVarsModel& generative_model() const;

    ServiceConfig config_;
    std::shared_ptr<const XVarsModel> model_;
    std::shared_ptr<const data::Dataset> dataset_;
    std::shared_ptr<const data::MediaReader> reader_;
    ChatStore chats_;
    StudyStore study_;
    std::atomic<long long> encoder_calls_{0};
    std::unique_ptr<httplib::Server> http_;
    std::thread thread_;
};

}  // namespace xvars::service
