#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "xvars/common/ini.hpp"
#include "xvars/training/config.hpp"

namespace xvars::service {

/// What a chat request does while another generation runs on the same session.
enum class BusyPolicy { Reject, Queue };

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path manifest;  // checkpoint manifest
    std::filesystem::path dataset;   // dataset manifest with the servable clips
    std::filesystem::path state_dir = "xvars_state";
    std::filesystem::path study_pool;  // CSV clip_id,source,explanation
    std::string admin_token;
    double session_idle_timeout_s = 1800.0;
    BusyPolicy busy_policy = BusyPolicy::Reject;
    int frames_per_clip = 0;  // 0: take it from the checkpoint
    int max_new_tokens = 24;
    int items_per_rater = 20;
    std::uint64_t study_seed = 0;
    int threads = 4;

    void validate() const;
};

void set_option(ServiceConfig& cfg, const std::string& key, const std::string& value);
void apply_section(const IniDocument& doc, const std::string& section, ServiceConfig& cfg);
train::KeyValues describe(const ServiceConfig& cfg);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
/// std::getenv, as an EnvLookup.
std::optional<std::string> process_env(const std::string& name);

/// XVARS_PORT, XVARS_MANIFEST and XVARS_ADMIN_TOKEN override the file values.
void apply_env_overrides(ServiceConfig& cfg, const EnvLookup& env = process_env);

}  // namespace xvars::service
