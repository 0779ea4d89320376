#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "xvars/common/ini.hpp"
#include "xvars/dataset/synthetic.hpp"
#include "xvars/service/config.hpp"

namespace xvars::cli {

/// Flags shared by the subcommands plus the few command-specific ones.
/// Unset flags fall back to the config file, then to built-in defaults.
struct Options {
    std::string command;
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out;
    std::filesystem::path manifest;  // checkpoint
    std::filesystem::path dataset;   // dataset manifest
    std::string device = "cpu";
    std::optional<int> epochs;
    std::optional<std::string> split;
    std::optional<std::string> question;
    std::optional<std::string> extractor_url;
    std::optional<std::string> clip;
    std::optional<int> top_k;
    std::filesystem::path generations;
    std::filesystem::path state_dir;
    std::optional<int> port;
};

struct Context {
    Options options;
    IniDocument config;
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

/// Settings of the evaluation commands, section [eval].
struct EvalConfig {
    std::string split = "test";
    std::string question = data::kCardQuestion;
    int frames_per_clip = 0;  // 0: the checkpoint's stage-1 value
    int max_new_tokens = 24;
    std::string extractor = "rule";  // rule | external
    std::string extractor_url;
    std::string feature_extractor = "Toy encoder";
    std::string pooling = "Mean";
};

void set_option(data::SyntheticConfig& cfg, const std::string& key, const std::string& value);
void set_option(EvalConfig& cfg, const std::string& key, const std::string& value);

/// [serve] from the file, then XVARS_* environment variables, then flags.
service::ServiceConfig resolve_service_config(const Context& ctx, const service::EnvLookup& env);

void run_synth(Context& ctx);
void run_train_stage1(Context& ctx);
void run_train_stage2(Context& ctx);
void run_eval_classify(Context& ctx);
void run_eval_generate(Context& ctx);
void run_agreement(Context& ctx);
void run_stats(Context& ctx);
void run_chat(Context& ctx);
void run_serve(Context& ctx);
void run_study_export(Context& ctx);

}  // namespace xvars::cli
