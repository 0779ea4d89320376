#include "xvars/service/server.hpp"

#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "xvars/dataset/sampling.hpp"
#include "xvars/evaluation/extraction.hpp"
#include "xvars/evaluation/report.hpp"

namespace xvars::service {
namespace {

using nlohmann::json;
using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
        try {
            h(req, res);
        } catch (const Error& e) {
            std::string message = e.what();
            if (e.code() == ErrorCode::ContextOverflow) {
                message += "; start a new chat session to continue";
            }
            send_error(res, http_status(e.code()), error_code_name(e.code()), message);
        } catch (const json::parse_error& e) {
            send_error(res, 400, "BadRequest", std::string("malformed JSON: ") + e.what());
        } catch (const json::exception& e) {
            send_error(res, 422, "Schema", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "Internal", e.what());
        }
    };
}

json parse_body(const httplib::Request& req) {
    auto j = json::parse(req.body);
    if (!j.is_object()) {
        fail(ErrorCode::Schema, "request body must be a JSON object");
    }
    return j;
}

std::string string_field(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
        fail(ErrorCode::Schema, std::string("'") + key + "' must be a string");
    }
    return j[key].get<std::string>();
}

int int_field(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        fail(ErrorCode::Schema, std::string("'") + key + "' must be an integer");
    }
    return j[key].get<int>();
}

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

json history_json(const ChatSession& s) {
    json h = json::array();
    for (const auto& t : s.history) h.push_back({{"role", t.role}, {"text", t.text}});
    return h;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound:
        case ErrorCode::DanglingReference:
            return 404;
        case ErrorCode::Conflict:
        case ErrorCode::DuplicateRecord:
            return 409;
        case ErrorCode::ContextOverflow:
            return 413;
        case ErrorCode::InvalidArgument:
        case ErrorCode::EmptyInput:
        case ErrorCode::Schema:
        case ErrorCode::InvalidLabel:
        case ErrorCode::InsufficientItems:
        case ErrorCode::OutOfBounds:
            return 422;
        case ErrorCode::Transport:
            return 502;
        default:
            return 500;
    }
}

Service::Service(ServiceConfig config, std::shared_ptr<const XVarsModel> model,
                 std::shared_ptr<const data::Dataset> dataset, std::shared_ptr<const data::MediaReader> reader,
                 Clock clock)
    : config_(std::move(config)),
      model_(std::move(model)),
      dataset_(std::move(dataset)),
      reader_(std::move(reader)),
      chats_(std::chrono::duration<double>(config_.session_idle_timeout_s), std::move(clock)),
      study_(config_.state_dir),
      http_(std::make_unique<httplib::Server>()) {
    config_.validate();
    require(config_.frames_per_clip > 0, ErrorCode::Config, "serve: frames_per_clip is not resolved");
    require(dataset_ != nullptr, ErrorCode::Config, "serve: no dataset");
    const int threads = config_.threads;
    http_->new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
    http_->set_payload_max_length(1 << 20);
    install_routes();
}

Service::~Service() { stop(); }

int Service::start() {
    const int port = config_.port == 0 ? http_->bind_to_any_port(config_.host)
                                       : (http_->bind_to_port(config_.host, config_.port) ? config_.port : -1);
    if (port < 0) {
        fail(ErrorCode::Io, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
    thread_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
    return port;
}

void Service::run() {
    if (!http_->listen(config_.host, config_.port)) {
        fail(ErrorCode::Io, "cannot listen on " + config_.host + ":" + std::to_string(config_.port));
    }
}

void Service::stop() {
    if (http_) http_->stop();
    if (thread_.joinable()) thread_.join();
}

const XVarsModel& Service::generative_model() const {
    if (!model_ || !model_->has_language_model()) {
        fail(ErrorCode::Conflict, "no generative model is loaded");
    }
    return *model_;
}

PreparedClip Service::prepare(const std::string& clip_id) {
    const auto& model = generative_model();
    const auto& record = dataset_->clip(clip_id);
    const auto clip = data::sample_frames(*dataset_, record, config_.frames_per_clip, *reader_);
    ++encoder_calls_;
    return model.prepare(clip);
}

void Service::install_routes() {
    auto& http = *http_;
    const auto authorized = [this](const httplib::Request& req) {
        std::string token = req.get_header_value("X-Admin-Token");
        const auto auth = req.get_header_value("Authorization");
        if (token.empty() && auth.rfind("Bearer ", 0) == 0) token = auth.substr(7);
        return !config_.admin_token.empty() && token == config_.admin_token;
    };
    const auto admin_guard = [authorized](Handler h) -> Handler {
        return guarded([authorized, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req)) {
                send_error(res, 403, "Forbidden", "a valid admin token is required");
                return;
            }
            h(req, res);
        });
    };

    http.Get("/v1/health", guarded([this](const httplib::Request&, httplib::Response& res) {
                 send_json(res, 200,
                           {{"status", "ok"},
                            {"model_loaded", model_ != nullptr},
                            {"generative", model_ && model_->has_language_model()}});
             }));

    http.Get("/v1/config", guarded([this](const httplib::Request&, httplib::Response& res) {
                 json j = json::object();
                 for (const auto& [k, v] : describe(config_)) j[k] = v;
                 send_json(res, 200, j);
             }));

    http.Get("/v1/clips", guarded([this](const httplib::Request&, httplib::Response& res) {
                 json clips = json::array();
                 for (const auto& c : dataset_->clips()) {
                     clips.push_back({{"clip_id", c.clip_id}, {"clip_url", "/v1/media/" + c.clip_id}});
                 }
                 send_json(res, 200, {{"clips", clips}});
             }));

    http.Get(R"(/v1/media/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto path = dataset_->media_path(dataset_->clip(req.matches[1].str()));
                 if (!std::filesystem::is_regular_file(path)) {
                     fail(ErrorCode::NotFound, "media for this clip is not a single file");
                 }
                 std::ifstream in(path, std::ios::binary);
                 std::stringstream buf;
                 buf << in.rdbuf();
                 res.set_content(buf.str(), "application/octet-stream");
             }));

    http.Post("/v1/infer", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto body = parse_body(req);
                  const auto clip_id = string_field(body, "clip_id");
                  const auto question = trimmed(string_field(body, "question"));
                  require(!question.empty(), ErrorCode::EmptyInput, "question is empty");
                  const auto& model = generative_model();
                  dataset_->clip(clip_id);
                  const auto prepared = prepare(clip_id);
                  InferenceOptions opts;
                  opts.max_new_tokens = config_.max_new_tokens;
                  const auto answer = model.answer(prepared, question, opts);
                  std::optional<Severity> extracted;
                  if (!trimmed(answer).empty()) extracted = eval::extract_labels(answer).severity;
                  send_json(res, 200,
                            {{"clip_id", clip_id},
                             {"answer", answer},
                             {"predicted_foul", display_name(prepared.classification.predicted_foul)},
                             {"predicted_severity", display_name(prepared.classification.predicted_severity)},
                             {"extracted_severity", extracted ? json(display_name(*extracted)) : json(nullptr)}});
              }));

    http.Post("/v1/chat/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto body = parse_body(req);
                  const auto clip_id = string_field(body, "clip_id");
                  generative_model();
                  dataset_->clip(clip_id);
                  auto session = chats_.open(clip_id, prepare(clip_id));
                  send_json(res, 201,
                            {{"session_id", session->session_id},
                             {"clip_id", clip_id},
                             {"created_at", session->created_at},
                             {"predicted_foul", display_name(session->prepared.classification.predicted_foul)},
                             {"predicted_severity",
                              display_name(session->prepared.classification.predicted_severity)}});
              }));

    http.Get(R"(/v1/chat/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto session = chats_.get(req.matches[1].str());
                 std::unique_lock lock(session->busy);
                 send_json(res, 200,
                           {{"session_id", session->session_id},
                            {"clip_id", session->clip_id},
                            {"created_at", session->created_at},
                            {"history", history_json(*session)}});
             }));

    http.Post("/v1/chat", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto body = parse_body(req);
                  const auto session_id = string_field(body, "session_id");
                  const auto message = trimmed(string_field(body, "message"));
                  require(!message.empty(), ErrorCode::EmptyInput, "message is empty");
                  const auto& model = generative_model();
                  auto session = chats_.get(session_id);
                  std::unique_lock lock(session->busy, std::defer_lock);
                  if (config_.busy_policy == BusyPolicy::Queue) {
                      lock.lock();
                  } else if (!lock.try_lock()) {
                      send_error(res, 429, "Busy", "a reply is already being generated for this session");
                      return;
                  }
                  InferenceOptions opts;
                  opts.max_new_tokens = config_.max_new_tokens;
                  const auto answer = chat_turn(model, *session, message, opts);
                  chats_.touch(*session);
                  send_json(res, 200,
                            {{"session_id", session_id},
                             {"answer", answer},
                             {"turns", session->history.size() / 2}});
              }));

    http.Post("/v1/study", admin_guard([this](const httplib::Request& req, httplib::Response& res) {
                  const auto body = parse_body(req);
                  if (!body.contains("raters") || !body["raters"].is_array()) {
                      fail(ErrorCode::Schema, "'raters' must be an array of strings");
                  }
                  const auto raters = body["raters"].get<std::vector<std::string>>();
                  const int per_rater =
                      body.contains("items_per_rater") ? int_field(body, "items_per_rater") : config_.items_per_rater;
                  const auto seed = body.contains("seed") ? body["seed"].get<std::uint64_t>() : config_.study_seed;
                  std::vector<eval::StudyItem> items;
                  if (body.contains("items")) {
                      for (const auto& it : body["items"]) {
                          items.push_back({string_field(it, "clip_id"), string_field(it, "explanation"),
                                           eval::parse_source(string_field(it, "source"))});
                      }
                  } else if (!config_.study_pool.empty()) {
                      items = load_study_pool(config_.study_pool);
                  } else {
                      fail(ErrorCode::Schema, "no 'items' given and no study_pool configured");
                  }
                  study_.create(items, raters, per_rater, seed);
                  send_json(res, 201, {{"raters", raters}, {"items_per_rater", per_rater}});
              }));

    // Registered before the per-rater routes so "summary" is never taken for a rater id.
    http.Get("/v1/study/summary", admin_guard([this](const httplib::Request&, httplib::Response& res) {
                 const auto report = study_.summary();
                 json sources = json::array();
                 for (const auto& s : report.sources) {
                     sources.push_back({{"source", eval::source_name(s.source)},
                                        {"n", s.n},
                                        {"mean", optional_number(s.mean)},
                                        {"counts", s.counts},
                                        {"percent", s.percent}});
                 }
                 send_json(res, 200,
                           {{"sources", sources},
                            {"paired",
                             {{"n_pairs", report.paired.n_pairs},
                              {"n_model_higher", report.paired.n_model_higher},
                              {"fraction", optional_number(report.paired.fraction)}}},
                            {"table", eval::render_study_table(eval::study_rows(report), eval::study_footer(report))}});
             }));

    http.Get(R"(/v1/study/([^/]+)/next)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto rater = req.matches[1].str();
                 const auto item = study_.next(rater);
                 const auto [done, total] = study_.progress(rater);
                 res.set_header("X-Study-Progress", std::to_string(done) + "/" + std::to_string(total));
                 if (!item) {
                     res.status = 204;
                     return;
                 }
                 send_json(res, 200,
                           {{"item_index", item->item_index},
                            {"clip_url", "/v1/media/" + item->clip_id},
                            {"explanation", item->explanation}});
             }));

    http.Post(R"(/v1/study/([^/]+)/rating)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto rater = req.matches[1].str();
                  const auto body = parse_body(req);
                  study_.rate(rater, int_field(body, "item_index"), int_field(body, "score"), utc_timestamp());
                  const auto [done, total] = study_.progress(rater);
                  send_json(res, 201, {{"rated", done}, {"total", total}});
              }));

    http.Get("/v1/stats", admin_guard([this](const httplib::Request&, httplib::Response& res) {
                 send_json(res, 200,
                           {{"encoder_calls", encoder_calls_.load()},
                            {"chat_sessions", chats_.size()},
                            {"ratings", study_.ratings().size()}});
             }));
}

}  // namespace xvars::service
