#include "xvars/cli/app.hpp"

#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "xvars/cli/commands.hpp"

namespace xvars::cli {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Config:
        case ErrorCode::InvalidArgument:
            return kExitUsage;
        case ErrorCode::MissingFile:
        case ErrorCode::NotFound:
        case ErrorCode::UnreadableMedia:
            return kExitMissingInput;
        case ErrorCode::DimensionMismatch:
        case ErrorCode::EmptyInput:
        case ErrorCode::InvalidLabel:
        case ErrorCode::MissingLabel:
        case ErrorCode::ContextOverflow:
        case ErrorCode::DecodeFailure:
        case ErrorCode::Schema:
        case ErrorCode::DanglingReference:
        case ErrorCode::DuplicateRecord:
        case ErrorCode::EmptyMask:
        case ErrorCode::DegenerateSplit:
        case ErrorCode::InsufficientItems:
        case ErrorCode::OrphanRecord:
        case ErrorCode::AlignmentMismatch:
        case ErrorCode::OutOfBounds:
            return kExitInvalidData;
        case ErrorCode::DigestMismatch:
        case ErrorCode::FrozenViolation:
            return kExitIntegrity;
        case ErrorCode::Divergence:
        case ErrorCode::NonFinite:
            return kExitTraining;
        case ErrorCode::Io:
            return kExitIo;
        case ErrorCode::Transport:
        case ErrorCode::Conflict:
            return kExitUnavailable;
    }
    return kExitInternal;
}

namespace {

struct Raw {
    std::string config, out, manifest, dataset, device = "cpu", split, question, extractor_url, clip, generations,
        state_dir;
    std::uint64_t seed = 0;
    int epochs = 0, top_k = 0, port = 0;
};

using Runner = std::function<void(Context&)>;

struct Command {
    const char* name;
    const char* help;
    Runner run;
};

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app("Explainable foul classification toolkit", "xvars");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    Raw raw;
    const std::vector<Command> commands = {
        {"synth", "Generate a synthetic dataset", run_synth},
        {"train-stage1", "Train the video encoder and classification heads", run_train_stage1},
        {"train-stage2", "Train the projection and language-model adapters", run_train_stage2},
        {"eval-classify", "Score the classification heads", run_eval_classify},
        {"eval-generate", "Generate explanations and score the extracted labels", run_eval_generate},
        {"agreement", "Agreement between generated text and injected predictions", run_agreement},
        {"stats", "Corpus statistics of the explanations", run_stats},
        {"chat", "Interactive multi-turn chat about one clip", run_chat},
        {"serve", "Run the HTTP service", run_serve},
        {"study-export", "Build the study pool and tabulate collected ratings", run_study_export},
    };
    std::map<std::string, CLI::App*> subs;
    std::map<std::string, CLI::Option*> opts;
    auto flag = [&](CLI::App* sub, const std::string& cmd, const std::string& name, auto& target,
                    const std::string& help) { opts[cmd + name] = sub->add_option(name, target, help); };

    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        const std::string n = c.name;
        subs[n] = sub;
        flag(sub, n, "--config", raw.config, "INI config file");
        flag(sub, n, "--seed", raw.seed, "Random seed");
        flag(sub, n, "--out", raw.out, "Output directory");
        flag(sub, n, "--manifest", raw.manifest, "Model checkpoint (directory or checkpoint.manifest)");
        flag(sub, n, "--dataset", raw.dataset, "Dataset manifest.csv");
        flag(sub, n, "--device", raw.device, "Compute device (cpu only)");
        if (n == "train-stage1" || n == "train-stage2") {
            flag(sub, n, "--epochs", raw.epochs, "Override the configured epoch count");
        }
        if (n == "eval-classify" || n == "eval-generate" || n == "chat") {
            flag(sub, n, "--split", raw.split, "train or test");
        }
        if (n == "eval-generate" || n == "chat" || n == "study-export") {
            flag(sub, n, "--question", raw.question, "Question asked about each clip");
        }
        if (n == "eval-generate") flag(sub, n, "--extractor-url", raw.extractor_url, "External label extractor URL");
        if (n == "chat") flag(sub, n, "--clip", raw.clip, "Clip id");
        if (n == "stats") flag(sub, n, "--top-k", raw.top_k, "Most frequent words to list");
        if (n == "agreement" || n == "study-export") {
            flag(sub, n, "--generations", raw.generations, "generations.csv from eval-generate");
        }
        if (n == "serve" || n == "study-export") flag(sub, n, "--state-dir", raw.state_dir, "Service state directory");
        if (n == "serve") flag(sub, n, "--port", raw.port, "Listen port (0 picks a free one)");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, r;
        const int code = app.exit(e, o, r);
        out << o.str();
        err << r.str();
        return code == 0 ? kExitOk : kExitUsage;
    }

    const Command* chosen = nullptr;
    for (const auto& c : commands) {
        if (subs[c.name]->parsed()) chosen = &c;
    }
    const std::string n = chosen->name;
    auto given = [&](const std::string& name) {
        const auto it = opts.find(n + name);
        return it != opts.end() && it->second->count() > 0;
    };

    Options o;
    o.command = n;
    o.config = raw.config;
    if (given("--seed")) o.seed = raw.seed;
    o.out = raw.out;
    o.manifest = raw.manifest;
    o.dataset = raw.dataset;
    o.device = raw.device;
    if (given("--epochs")) o.epochs = raw.epochs;
    if (given("--split")) o.split = raw.split;
    if (given("--question")) o.question = raw.question;
    if (given("--extractor-url")) o.extractor_url = raw.extractor_url;
    if (given("--clip")) o.clip = raw.clip;
    if (given("--top-k")) o.top_k = raw.top_k;
    o.generations = raw.generations;
    o.state_dir = raw.state_dir;
    if (given("--port")) o.port = raw.port;

    try {
        if (o.device != "cpu") {
            fail(ErrorCode::Config, "device '" + o.device + "' is not available; only 'cpu' is supported");
        }
        IniDocument doc;
        if (!o.config.empty()) {
            if (!std::filesystem::exists(o.config)) {
                fail(ErrorCode::MissingFile, "missing config file " + o.config.string());
            }
            try {
                doc = IniDocument::load(o.config);
            } catch (const Error& e) {
                fail(ErrorCode::Config, o.config.string() + ": " + e.what());
            }
        }
        Context ctx{o, std::move(doc), in, out, err};
        chosen->run(ctx);
        return kExitOk;
    } catch (const Error& e) {
        err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error [Internal]: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace xvars::cli
