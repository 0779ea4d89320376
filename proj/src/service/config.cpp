#include "xvars/service/config.hpp"

#include <cstdlib>

#include "xvars/common/error.hpp"

namespace xvars::service {
namespace {

int to_int(const std::string& key, const std::string& value) {
    const auto v = parse_int(value, key);
    if (v < -2147483647LL || v > 2147483647LL) {
        fail(ErrorCode::Config, key + ": value out of range");
    }
    return static_cast<int>(v);
}

}  // namespace

void ServiceConfig::validate() const {
    require(port >= 0 && port <= 65535, ErrorCode::Config, "serve: port must be in 0..65535");
    require(session_idle_timeout_s > 0, ErrorCode::Config, "serve: session_idle_timeout_s must be positive");
    require(frames_per_clip >= 0 && frames_per_clip % 2 == 0, ErrorCode::Config,
            "serve: frames_per_clip must be 0 or a positive even number");
    require(max_new_tokens > 0, ErrorCode::Config, "serve: max_new_tokens must be positive");
    require(items_per_rater > 0, ErrorCode::Config, "serve: items_per_rater must be positive");
    require(threads > 0, ErrorCode::Config, "serve: threads must be positive");
}

void set_option(ServiceConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "host") cfg.host = value;
    else if (key == "port") cfg.port = to_int(key, value);
    else if (key == "manifest") cfg.manifest = value;
    else if (key == "dataset") cfg.dataset = value;
    else if (key == "state_dir") cfg.state_dir = value;
    else if (key == "study_pool") cfg.study_pool = value;
    else if (key == "admin_token") cfg.admin_token = value;
    else if (key == "session_idle_timeout_s") cfg.session_idle_timeout_s = parse_double(value, key);
    else if (key == "busy_policy") {
        if (value == "reject") cfg.busy_policy = BusyPolicy::Reject;
        else if (value == "queue") cfg.busy_policy = BusyPolicy::Queue;
        else fail(ErrorCode::Config, key + ": expected 'reject' or 'queue', got '" + value + "'");
    } else if (key == "frames_per_clip") cfg.frames_per_clip = to_int(key, value);
    else if (key == "max_new_tokens") cfg.max_new_tokens = to_int(key, value);
    else if (key == "items_per_rater") cfg.items_per_rater = to_int(key, value);
    else if (key == "study_seed") {
        const auto v = parse_int(value, key);
        require(v >= 0, ErrorCode::Config, key + ": seed must be non-negative");
        cfg.study_seed = static_cast<std::uint64_t>(v);
    } else if (key == "threads") cfg.threads = to_int(key, value);
    else fail(ErrorCode::Config, "unknown option '" + key + "'");
}

void apply_section(const IniDocument& doc, const std::string& section, ServiceConfig& cfg) {
    for (const auto& e : doc.entries(section)) {
        try {
            set_option(cfg, e.key, e.value);
        } catch (const Error& err) {
            fail(ErrorCode::Config, "line " + std::to_string(e.line) + " [" + section + "]: " + err.what());
        }
    }
}

train::KeyValues describe(const ServiceConfig& cfg) {
    // admin_token is deliberately left out of snapshots.
    return {
        {"host", cfg.host},
        {"port", std::to_string(cfg.port)},
        {"manifest", cfg.manifest.string()},
        {"dataset", cfg.dataset.string()},
        {"state_dir", cfg.state_dir.string()},
        {"study_pool", cfg.study_pool.string()},
        {"session_idle_timeout_s", format_double(cfg.session_idle_timeout_s)},
        {"busy_policy", cfg.busy_policy == BusyPolicy::Reject ? "reject" : "queue"},
        {"frames_per_clip", std::to_string(cfg.frames_per_clip)},
        {"max_new_tokens", std::to_string(cfg.max_new_tokens)},
        {"items_per_rater", std::to_string(cfg.items_per_rater)},
        {"study_seed", std::to_string(cfg.study_seed)},
        {"threads", std::to_string(cfg.threads)},
    };
}

std::optional<std::string> process_env(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
}

void apply_env_overrides(ServiceConfig& cfg, const EnvLookup& env) {
    if (const auto v = env("XVARS_PORT")) {
        try {
            cfg.port = to_int("XVARS_PORT", *v);
        } catch (const Error& e) {
            fail(ErrorCode::Config, std::string("environment: ") + e.what());
        }
    }
    if (const auto v = env("XVARS_MANIFEST")) cfg.manifest = *v;
    if (const auto v = env("XVARS_ADMIN_TOKEN")) cfg.admin_token = *v;
}

}  // namespace xvars::service
