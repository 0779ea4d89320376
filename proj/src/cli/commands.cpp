#include "xvars/cli/commands.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "xvars/cli/http_extractor.hpp"
#include "xvars/cli/run_report.hpp"
#include "xvars/common/csv.hpp"
#include "xvars/common/error.hpp"
#include "xvars/dataset/manifest.hpp"
#include "xvars/dataset/sampling.hpp"
#include "xvars/dataset/stats.hpp"
#include "xvars/evaluation/agreement.hpp"
#include "xvars/evaluation/evaluate.hpp"
#include "xvars/evaluation/report.hpp"
#include "xvars/service/chat.hpp"
#include "xvars/service/server.hpp"
#include "xvars/service/study_store.hpp"
#include "xvars/training/checkpoint.hpp"
#include "xvars/training/stage1.hpp"
#include "xvars/training/stage2.hpp"

namespace xvars::cli {
namespace {

const std::vector<std::string> kGenerationsHeader = {
    "clip_id",        "gt_foul", "gt_severity", "injected_foul", "injected_severity", "extracted_severity",
    "extracted_foul", "method",  "evidence",    "error",         "answer"};

int to_int(const std::string& key, const std::string& value) {
    const auto v = parse_int(value, key);
    if (v < -2147483647LL || v > 2147483647LL) {
        fail(ErrorCode::Config, key + ": value out of range");
    }
    return static_cast<int>(v);
}

template <class Cfg>
void apply(const IniDocument& doc, const std::string& section, Cfg& cfg) {
    for (const auto& e : doc.entries(section)) {
        try {
            set_option(cfg, e.key, e.value);
        } catch (const Error& err) {
            fail(ErrorCode::Config, "line " + std::to_string(e.line) + " [" + section + "]: " + err.what());
        }
    }
}

// A flag wins over the [paths] entry of the config file.
std::filesystem::path path_setting(const Context& ctx, const std::filesystem::path& flag, const std::string& key) {
    if (!flag.empty()) return flag;
    if (const auto v = ctx.config.get("paths", key)) return *v;
    return {};
}

std::filesystem::path required_path(const Context& ctx, const std::filesystem::path& flag, const std::string& key,
                                    const std::string& flag_name) {
    auto p = path_setting(ctx, flag, key);
    if (p.empty()) {
        fail(ErrorCode::Config, "no " + key + " given; pass " + flag_name + " or set " + key + " in [paths]");
    }
    return p;
}

std::filesystem::path output_dir(const Context& ctx) {
    const auto dir = required_path(ctx, ctx.options.out, "out", "--out");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto probe = dir / ".xvars_write_probe";
    {
        std::ofstream out(probe);
        if (ec || !out) {
            fail(ErrorCode::Io, "output directory " + dir.string() + " is not writable");
        }
    }
    std::filesystem::remove(probe);
    return dir;
}

data::Dataset dataset_of(const Context& ctx) {
    return data::load_dataset(required_path(ctx, ctx.options.dataset, "dataset", "--dataset"));
}

std::filesystem::path checkpoint_of(const Context& ctx) {
    return required_path(ctx, ctx.options.manifest, "manifest", "--manifest");
}

data::Split split_of(const std::string& name) {
    const auto s = data::parse_split(name);
    if (!s) {
        fail(ErrorCode::Config, "split must be 'train' or 'test', got '" + name + "'");
    }
    return *s;
}

EvalConfig eval_config(const Context& ctx) {
    EvalConfig cfg;
    apply(ctx.config, "eval", cfg);
    if (ctx.options.split) cfg.split = *ctx.options.split;
    if (ctx.options.question) cfg.question = *ctx.options.question;
    if (ctx.options.extractor_url) {
        cfg.extractor = "external";
        cfg.extractor_url = *ctx.options.extractor_url;
    }
    split_of(cfg.split);
    require(cfg.extractor == "rule" || cfg.extractor == "external", ErrorCode::Config,
            "extractor must be 'rule' or 'external'");
    require(cfg.extractor == "rule" || !cfg.extractor_url.empty(), ErrorCode::Config,
            "external extraction needs extractor_url");
    require(cfg.max_new_tokens > 0, ErrorCode::Config, "max_new_tokens must be positive");
    return cfg;
}

train::KeyValues describe(const EvalConfig& cfg) {
    return {{"split", cfg.split},
            {"question", cfg.question},
            {"frames_per_clip", std::to_string(cfg.frames_per_clip)},
            {"max_new_tokens", std::to_string(cfg.max_new_tokens)},
            {"extractor", cfg.extractor},
            {"extractor_url", cfg.extractor_url},
            {"feature_extractor", cfg.feature_extractor},
            {"pooling", cfg.pooling}};
}

train::KeyValues describe(const data::SyntheticConfig& cfg) {
    return {{"clips_per_combination", std::to_string(cfg.clips_per_combination)},
            {"media_frames", std::to_string(cfg.media_frames)},
            {"height", std::to_string(cfg.height)},
            {"width", std::to_string(cfg.width)},
            {"cell", std::to_string(cfg.cell)},
            {"background_level", format_double(cfg.background_level)},
            {"marker_noise", format_double(cfg.marker_noise)},
            {"train_fraction", format_double(cfg.train_fraction)},
            {"second_answer_every", std::to_string(cfg.second_answer_every)},
            {"seed", std::to_string(cfg.seed)}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        fail(ErrorCode::Io, "cannot write " + path.string());
    }
}

std::string optional_name(const std::optional<FoulType>& v) { return v ? std::string(display_name(*v)) : ""; }
std::string optional_name(const std::optional<Severity>& v) { return v ? std::string(display_name(*v)) : ""; }

void add_losses(RunReport& report, const std::string& prefix, const std::vector<double>& losses) {
    for (std::size_t i = 0; i < losses.size(); ++i) {
        report.set_metric(prefix + "." + std::to_string(i + 1), format_double(losses[i]));
    }
}

void add_entries(RunReport& report, const eval::ReportEntries& entries) {
    for (const auto& [k, v] : entries) report.set_metric(k, v);
}

int frames_for(const EvalConfig& cfg, const train::LoadedCheckpoint& ckpt) {
    return cfg.frames_per_clip > 0 ? cfg.frames_per_clip : ckpt.stage1.frames_per_clip;
}

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

void set_option(data::SyntheticConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "clips_per_combination") cfg.clips_per_combination = to_int(key, value);
    else if (key == "media_frames") cfg.media_frames = to_int(key, value);
    else if (key == "height") cfg.height = to_int(key, value);
    else if (key == "width") cfg.width = to_int(key, value);
    else if (key == "cell") cfg.cell = to_int(key, value);
    else if (key == "background_level") cfg.background_level = parse_double(value, key);
    else if (key == "marker_noise") cfg.marker_noise = parse_double(value, key);
    else if (key == "train_fraction") cfg.train_fraction = parse_double(value, key);
    else if (key == "second_answer_every") cfg.second_answer_every = to_int(key, value);
    else if (key == "seed") {
        const auto v = parse_int(value, key);
        require(v >= 0, ErrorCode::Config, key + ": seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(v);
    } else fail(ErrorCode::Config, "unknown option '" + key + "'");
}

void set_option(EvalConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "split") cfg.split = value;
    else if (key == "question") cfg.question = value;
    else if (key == "frames_per_clip") cfg.frames_per_clip = to_int(key, value);
    else if (key == "max_new_tokens") cfg.max_new_tokens = to_int(key, value);
    else if (key == "extractor") cfg.extractor = value;
    else if (key == "extractor_url") cfg.extractor_url = value;
    else if (key == "feature_extractor") cfg.feature_extractor = value;
    else if (key == "pooling") cfg.pooling = value;
    else fail(ErrorCode::Config, "unknown option '" + key + "'");
}

void run_synth(Context& ctx) {
    data::SyntheticConfig cfg;
    apply(ctx.config, "synth", cfg);
    if (ctx.options.seed) cfg.seed = *ctx.options.seed;
    cfg.validate();
    const auto out = output_dir(ctx);
    const auto ds = data::generate_synthetic(cfg, out);

    RunReport report("synth", cfg.seed, ctx.options.device);
    report.set_config("synth", describe(cfg));
    report.set_metric("clips", std::to_string(ds.clips().size()));
    report.set_metric("train_clips", std::to_string(ds.clips_in(data::Split::Train).size()));
    report.set_metric("test_clips", std::to_string(ds.clips_in(data::Split::Test).size()));
    report.set_metric("triplets", std::to_string(ds.triplets().size()));
    report.add_artifact(out, "manifest.csv");
    report.write(out);
    ctx.out << "wrote " << ds.clips().size() << " clips to " << (out / "manifest.csv").string() << "\n";
}

void run_train_stage1(Context& ctx) {
    train::Stage1Config cfg;
    train::apply_section(ctx.config, "stage1", cfg);
    if (ctx.options.seed) cfg.seed = *ctx.options.seed;
    if (ctx.options.epochs) cfg.epochs = *ctx.options.epochs;
    cfg.validate();
    const auto dataset_path = required_path(ctx, ctx.options.dataset, "dataset", "--dataset");
    const auto ds = data::load_dataset(dataset_path);
    const auto out = output_dir(ctx);

    const auto clips = train::load_labeled_clips(ds, data::Split::Train, cfg.frames_per_clip);
    const auto result = train::train_stage1(clips, cfg);
    const auto manifest = train::save_stage1_checkpoint(out, *result.encoder, *result.heads, cfg);

    RunReport report("train-stage1", cfg.seed, ctx.options.device);
    report.set_config("stage1", train::describe(cfg));
    report.add_input("dataset", dataset_path);
    report.set_metric("train_clips", std::to_string(clips.size()));
    report.set_metric("steps", std::to_string(result.steps));
    add_losses(report, "loss.epoch", result.epoch_losses);
    for (const auto& [name, ref] : manifest.artifacts) report.set("checkpoint", name, ref.digest);
    report.add_artifact(out, std::string(train::kManifestFileName));
    report.write(out);
    ctx.out << "stage 1: " << result.steps << " steps";
    if (!result.epoch_losses.empty()) ctx.out << ", final epoch loss " << result.epoch_losses.back();
    ctx.out << "\ncheckpoint: " << manifest.path.string() << "\n";
}

void run_train_stage2(Context& ctx) {
    train::Stage2Config cfg;
    train::apply_section(ctx.config, "stage2", cfg);
    if (ctx.options.seed) cfg.seed = *ctx.options.seed;
    if (ctx.options.epochs) cfg.epochs = *ctx.options.epochs;
    cfg.validate();
    const auto dataset_path = required_path(ctx, ctx.options.dataset, "dataset", "--dataset");
    const auto checkpoint_path = checkpoint_of(ctx);
    const auto ds = data::load_dataset(dataset_path);
    const auto stage1 = train::load_checkpoint(checkpoint_path);
    require(stage1.manifest.stage == 1, ErrorCode::InvalidArgument,
            "train-stage2 starts from a stage-1 checkpoint; " + checkpoint_path.string() + " is stage " +
                std::to_string(stage1.manifest.stage));
    const auto out = output_dir(ctx);

    const auto samples =
        train::build_stage2_samples(ds, data::Split::Train, *stage1.encoder, stage1.stage1.frames_per_clip);
    const auto result = train::train_stage2(samples, *stage1.encoder, *stage1.heads, cfg);
    const auto manifest = train::save_stage2_checkpoint(out, stage1.manifest, result, cfg);

    RunReport report("train-stage2", cfg.seed, ctx.options.device);
    report.set_config("stage2", train::describe(cfg));
    report.add_input("dataset", dataset_path);
    report.add_input("stage1_checkpoint", checkpoint_path);
    report.set_metric("samples", std::to_string(samples.size()));
    add_losses(report, "loss.pretrain_epoch", std::vector<double>(result.pretrain_losses));
    add_losses(report, "loss.epoch", result.epoch_losses);
    const auto& fr = result.freeze;
    report.set("freeze", "frozen_intact", fr.frozen_intact() ? "true" : "false");
    for (const auto& g : fr.groups) {
        report.set("freeze", g.name + ".before", g.digest_before);
        report.set("freeze", g.name + ".after", g.digest_after);
    }
    std::string layers;
    for (const int l : fr.adapted_layers) layers += (layers.empty() ? "" : ",") + std::to_string(l);
    report.set("freeze", "adapted_layers", layers);
    report.set("freeze", "lm_layers", std::to_string(fr.lm_layers));
    report.set("freeze", "adapter_parameters", std::to_string(fr.adapter_count));
    report.set("freeze", "projection_parameters", std::to_string(fr.projection_count));
    report.set("freeze", "trainable_lm_parameters", std::to_string(fr.trainable_count));
    report.set("freeze", "lm_parameters", std::to_string(fr.total_count));
    report.set("freeze", "configured_fraction", format_double(fr.configured_fraction));
    report.set("freeze", "adapter_to_lm_parameter_ratio",
               format_double(fr.total_count ? static_cast<double>(fr.adapter_count) / fr.total_count : 0.0));
    for (const auto& [name, ref] : manifest.artifacts) report.set("checkpoint", name, ref.digest);
    report.add_artifact(out, std::string(train::kManifestFileName));
    report.write(out);
    ctx.out << "stage 2: " << samples.size() << " samples, adapters on layers " << layers << "\ncheckpoint: "
            << manifest.path.string() << "\n";
}

void run_eval_classify(Context& ctx) {
    const auto cfg = eval_config(ctx);
    const auto dataset_path = required_path(ctx, ctx.options.dataset, "dataset", "--dataset");
    const auto checkpoint_path = checkpoint_of(ctx);
    const auto ds = data::load_dataset(dataset_path);
    const auto ckpt = train::load_checkpoint(checkpoint_path);
    const auto out = output_dir(ctx);
    const int frames = frames_for(cfg, ckpt);

    const auto ev = eval::evaluate_classifier(ckpt.model(), ds, split_of(cfg.split), frames);

    std::ofstream preds(out / "predictions.csv", std::ios::binary | std::ios::trunc);
    csv::write_row(preds, {"clip_id", "gt_foul", "gt_severity", "predicted_foul", "predicted_severity", "error"});
    for (const auto& o : ev.outcomes) {
        csv::write_row(preds, {o.clip_id, std::string(display_name(o.gt_foul)), std::string(display_name(o.gt_severity)),
                               optional_name(o.predicted_foul), optional_name(o.predicted_severity), o.error});
    }
    preds.close();
    const std::vector<eval::ClassificationRow> rows = {
        eval::classification_row(cfg.feature_extractor, cfg.pooling, ev)};
    write_text(out / "classification_table.txt", eval::render_classification_table(rows));
    write_text(out / "classification.tsv", eval::classification_tsv(rows));

    RunReport report("eval-classify", ctx.options.seed.value_or(0), ctx.options.device);
    auto described = describe(cfg);
    described.emplace_back("resolved_frames_per_clip", std::to_string(frames));
    report.set_config("eval", described);
    report.add_input("dataset", dataset_path);
    report.add_input("checkpoint", checkpoint_path);
    add_entries(report, eval::metrics_entries(ev.foul, "foul."));
    add_entries(report, eval::metrics_entries(ev.severity, "severity."));
    for (const auto* name : {"predictions.csv", "classification_table.txt", "classification.tsv"}) {
        report.add_artifact(out, name);
    }
    report.write(out);
    ctx.out << eval::render_classification_table(rows);
}

void run_eval_generate(Context& ctx) {
    const auto cfg = eval_config(ctx);
    const auto dataset_path = required_path(ctx, ctx.options.dataset, "dataset", "--dataset");
    const auto checkpoint_path = checkpoint_of(ctx);
    const auto ds = data::load_dataset(dataset_path);
    const auto ckpt = train::load_checkpoint(checkpoint_path);
    require(ckpt.manifest.stage == 2, ErrorCode::InvalidArgument,
            "eval-generate needs a stage-2 checkpoint; " + checkpoint_path.string() + " is stage 1");
    const auto out = output_dir(ctx);
    const int frames = frames_for(cfg, ckpt);

    std::unique_ptr<eval::LabelExtractor> extractor;
    if (cfg.extractor == "external") {
        extractor = std::make_unique<eval::ExternalExtractor>(std::make_shared<HttpExtractorClient>(cfg.extractor_url));
    } else {
        extractor = std::make_unique<eval::RuleBasedExtractor>();
    }
    InferenceOptions opts;
    opts.max_new_tokens = cfg.max_new_tokens;
    if (ctx.options.seed) opts.decoding = Decoding::sampled(*ctx.options.seed);
    const auto ev =
        eval::evaluate_generative(ckpt.model(), ds, split_of(cfg.split), cfg.question, frames, *extractor, opts);
    const auto agreement = eval::agreement_rate(ev);

    std::ofstream gens(out / "generations.csv", std::ios::binary | std::ios::trunc);
    csv::write_row(gens, kGenerationsHeader);
    for (const auto& o : ev.outcomes) {
        const auto& x = o.extraction;
        csv::write_row(gens, {o.clip_id, optional_name(o.gt_foul), std::string(display_name(o.gt_severity)),
                              optional_name(o.injected_foul), optional_name(o.injected_severity),
                              x ? optional_name(x->severity) : "", x ? optional_name(x->foul_type) : "",
                              x ? std::string(eval::method_name(x->method)) : "", x ? x->matched_evidence : "",
                              o.error, o.answer});
    }
    gens.close();
    const std::vector<eval::ClassificationRow> rows = {
        eval::classification_row(cfg.feature_extractor, cfg.pooling, ev)};
    write_text(out / "classification_table.txt", eval::render_classification_table(rows));
    write_text(out / "classification.tsv", eval::classification_tsv(rows));

    RunReport report("eval-generate", ctx.options.seed.value_or(0), ctx.options.device);
    auto described = describe(cfg);
    described.emplace_back("resolved_frames_per_clip", std::to_string(frames));
    described.emplace_back("decoding", ctx.options.seed ? "sampled" : "greedy");
    report.set_config("eval", described);
    report.add_input("dataset", dataset_path);
    report.add_input("checkpoint", checkpoint_path);
    add_entries(report, eval::metrics_entries(ev.severity, "severity."));
    report.set_metric("foul_type.extracted", std::to_string(ev.foul_type_extracted));
    report.set_metric("foul_type.coverage", format_double(ev.foul_type_coverage));
    add_entries(report, eval::agreement_entries(agreement, "agreement."));
    for (const auto* name : {"generations.csv", "classification_table.txt", "classification.tsv"}) {
        report.add_artifact(out, name);
    }
    report.write(out);
    ctx.out << eval::render_classification_table(rows) << "agreement with injected severity: "
            << eval::format_metric(agreement.rate) << " over " << agreement.n_compared << " of "
            << agreement.n_total << " clips\n";
}

void run_agreement(Context& ctx) {
    auto path = ctx.options.generations;
    if (path.empty()) {
        if (const auto v = ctx.config.get("paths", "generations")) path = *v;
    }
    require(!path.empty(), ErrorCode::Config, "no generations file given; pass --generations");
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::MissingFile, "missing generations file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const auto rows = csv::parse(buf.str());
    if (rows.empty() || rows[0].fields != kGenerationsHeader) {
        fail(ErrorCode::Schema, path.string() + ":1: not a generations file");
    }
    std::vector<eval::ExtractedAnswer> answers;
    std::vector<eval::InjectedPrediction> injected;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        const auto where = path.string() + ":" + std::to_string(rows[i].line) + ": ";
        require(f.size() == kGenerationsHeader.size(), ErrorCode::Schema, where + "wrong number of fields");
        if (!f[9].empty() || f[4].empty()) continue;  // generation failed
        const auto inj = parse_severity(f[4]);
        require(inj.has_value(), ErrorCode::Schema, where + "unknown severity '" + f[4] + "'");
        std::optional<Severity> ext;
        if (!f[5].empty()) {
            ext = parse_severity(f[5]);
            require(ext.has_value(), ErrorCode::Schema, where + "unknown severity '" + f[5] + "'");
        }
        answers.push_back({f[0], ext, f[10]});
        injected.push_back({f[0], *inj});
    }
    const auto report_data = eval::agreement_rate(answers, injected);
    const auto out = output_dir(ctx);

    std::ofstream dis(out / "disagreements.csv", std::ios::binary | std::ios::trunc);
    csv::write_row(dis, {"clip_id", "extracted_severity", "injected_severity", "answer"});
    for (const auto& d : report_data.disagreements) {
        csv::write_row(dis, {d.clip_id, std::string(display_name(d.extracted)), std::string(display_name(d.injected)),
                             d.text});
    }
    dis.close();

    RunReport report("agreement", ctx.options.seed.value_or(0), ctx.options.device);
    report.add_input("generations", path);
    add_entries(report, eval::agreement_entries(report_data, "agreement."));
    report.add_artifact(out, "disagreements.csv");
    report.write(out);
    ctx.out << "agreement " << eval::format_metric(report_data.rate) << " (" << report_data.n_agree << "/"
            << report_data.n_compared << " extractable, " << report_data.n_total << " total)\n";
}

void run_stats(Context& ctx) {
    const auto dataset_path = required_path(ctx, ctx.options.dataset, "dataset", "--dataset");
    const auto ds = data::load_dataset(dataset_path);
    int top_k = 20;
    if (const auto v = ctx.config.get("stats", "top_k")) top_k = to_int("top_k", *v);
    if (ctx.options.top_k) top_k = *ctx.options.top_k;
    require(top_k > 0, ErrorCode::Config, "top_k must be positive");
    const auto out = output_dir(ctx);
    const auto stats = data::corpus_statistics(ds.triplets());
    data::export_stats(out / "stats.tsv", stats, static_cast<std::size_t>(top_k));

    RunReport report("stats", ctx.options.seed.value_or(0), ctx.options.device);
    report.set_config("stats", {{"top_k", std::to_string(top_k)}});
    report.add_input("dataset", dataset_path);
    report.set_metric("clips", std::to_string(ds.clips().size()));
    report.set_metric("answers", std::to_string(stats.total_answers));
    report.set_metric("words", std::to_string(stats.total_words));
    report.set_metric("mean_words_per_answer", format_double(stats.mean_words_per_answer));
    report.set_metric("min_words", std::to_string(stats.min_words));
    report.set_metric("max_words", std::to_string(stats.max_words));
    report.set_metric("answers_per_action", format_double(stats.answers_per_action));
    report.set_metric("vocabulary", std::to_string(stats.word_frequency.size()));
    report.add_artifact(out, "stats.tsv");
    report.write(out);
    ctx.out << data::format_stats_table(stats, static_cast<std::size_t>(top_k));
}

void run_chat(Context& ctx) {
    const auto cfg = eval_config(ctx);
    const auto ds = dataset_of(ctx);
    const auto ckpt = train::load_checkpoint(checkpoint_of(ctx));
    require(ckpt.manifest.stage == 2, ErrorCode::InvalidArgument, "chat needs a stage-2 checkpoint");
    require(ctx.options.clip.has_value(), ErrorCode::Config, "chat needs --clip");
    const auto model = ckpt.model();
    const auto& record = ds.clip(*ctx.options.clip);

    service::ChatSession session;
    session.clip_id = record.clip_id;
    session.prepared = model.prepare(data::sample_frames(ds, record, frames_for(cfg, ckpt)));
    const auto& pred = session.prepared.classification;
    ctx.out << "clip " << record.clip_id << ": predicted " << display_name(pred.predicted_foul) << " / "
            << display_name(pred.predicted_severity) << "\n";
    InferenceOptions opts;
    opts.max_new_tokens = cfg.max_new_tokens;
    std::string line;
    while ((ctx.out << "> " << std::flush) && std::getline(ctx.in, line)) {
        line = trimmed(line);
        if (line.empty()) continue;
        if (line == "/quit") break;
        try {
            ctx.out << service::chat_turn(model, session, line, opts) << "\n";
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ContextOverflow) throw;
            ctx.err << "context window is full; start a new session to continue\n";
            break;
        }
    }
    ctx.out << "\n";

    if (!ctx.options.out.empty() || ctx.config.get("paths", "out")) {
        const auto out = output_dir(ctx);
        std::ostringstream transcript;
        for (const auto& t : session.history) transcript << t.role << ": " << t.text << "\n";
        write_text(out / "transcript.txt", transcript.str());
        RunReport report("chat", ctx.options.seed.value_or(0), ctx.options.device);
        report.set_config("eval", describe(cfg));
        report.set("chat", "clip_id", record.clip_id);
        report.set_metric("turns", std::to_string(session.history.size() / 2));
        report.add_artifact(out, "transcript.txt");
        report.write(out);
    }
}

service::ServiceConfig resolve_service_config(const Context& ctx, const service::EnvLookup& env) {
    service::ServiceConfig cfg;
    if (const auto v = ctx.config.get("paths", "manifest")) cfg.manifest = *v;
    if (const auto v = ctx.config.get("paths", "dataset")) cfg.dataset = *v;
    service::apply_section(ctx.config, "serve", cfg);
    service::apply_env_overrides(cfg, env);
    if (!ctx.options.manifest.empty()) cfg.manifest = ctx.options.manifest;
    if (!ctx.options.dataset.empty()) cfg.dataset = ctx.options.dataset;
    if (!ctx.options.state_dir.empty()) cfg.state_dir = ctx.options.state_dir;
    if (ctx.options.port) cfg.port = *ctx.options.port;
    if (ctx.options.seed) cfg.study_seed = *ctx.options.seed;
    cfg.validate();
    return cfg;
}

void run_serve(Context& ctx) {
    auto cfg = resolve_service_config(ctx, service::process_env);
    require(!cfg.dataset.empty(), ErrorCode::Config, "serve needs a dataset; pass --dataset or set [paths] dataset");
    auto ds = std::make_shared<data::Dataset>(data::load_dataset(cfg.dataset));
    std::shared_ptr<const XVarsModel> model;
    if (!cfg.manifest.empty()) {
        const auto ckpt = train::load_checkpoint(cfg.manifest);
        if (cfg.frames_per_clip == 0) cfg.frames_per_clip = ckpt.stage1.frames_per_clip;
        model = std::make_shared<XVarsModel>(ckpt.model());
    } else {
        ctx.err << "no model manifest configured; inference endpoints will answer 409\n";
    }
    if (cfg.frames_per_clip == 0) cfg.frames_per_clip = train::Stage1Config{}.frames_per_clip;
    service::Service server(cfg, model, ds);
    ctx.err << "serving /v1 on " << cfg.host << ":" << cfg.port << "\n";
    server.run();
}

void run_study_export(Context& ctx) {
    const auto dataset_path = required_path(ctx, ctx.options.dataset, "dataset", "--dataset");
    const auto ds = data::load_dataset(dataset_path);
    std::string question = data::kCardQuestion;
    if (const auto v = ctx.config.get("study", "question")) question = *v;
    if (ctx.options.question) question = *ctx.options.question;
    auto gen_path = ctx.options.generations;
    if (gen_path.empty()) {
        if (const auto v = ctx.config.get("paths", "generations")) gen_path = *v;
    }
    require(!gen_path.empty(), ErrorCode::Config, "no generations file given; pass --generations");
    std::ifstream in(gen_path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::MissingFile, "missing generations file " + gen_path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const auto rows = csv::parse(buf.str());
    if (rows.empty() || rows[0].fields != kGenerationsHeader) {
        fail(ErrorCode::Schema, gen_path.string() + ":1: not a generations file");
    }

    std::map<std::string, std::string> human;
    for (const auto& t : ds.triplets()) {
        if (t.question == question) human.emplace(t.clip_id, t.answer);
    }
    std::vector<eval::StudyItem> pool;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        require(f.size() == kGenerationsHeader.size(), ErrorCode::Schema,
                gen_path.string() + ":" + std::to_string(rows[i].line) + ": wrong number of fields");
        const auto h = human.find(f[0]);
        if (!f[9].empty() || trimmed(f[10]).empty() || h == human.end()) continue;
        pool.push_back({f[0], h->second, eval::Source::Human});
        pool.push_back({f[0], f[10], eval::Source::Model});
    }
    const auto out = output_dir(ctx);
    service::save_study_pool(out / "study_pool.csv", pool);

    RunReport report("study-export", ctx.options.seed.value_or(0), ctx.options.device);
    report.set_config("study", {{"question", question}});
    report.add_input("dataset", dataset_path);
    report.add_input("generations", gen_path);
    report.set_metric("pool_items", std::to_string(pool.size()));
    report.set_metric("pool_clips", std::to_string(pool.size() / 2));
    report.add_artifact(out, "study_pool.csv");

    auto state = ctx.options.state_dir;
    if (state.empty()) {
        if (const auto v = ctx.config.get("serve", "state_dir")) state = *v;
    }
    if (!state.empty() && std::filesystem::exists(state / "study.json")) {
        const service::StudyStore store(state);
        const auto summary = store.summary();
        const auto rows_out = eval::study_rows(summary);
        write_text(out / "study_table.txt", eval::render_study_table(rows_out, eval::study_footer(summary)));
        write_text(out / "study.tsv", eval::study_tsv(rows_out));
        for (const auto& s : summary.sources) {
            const std::string p = "study." + std::string(eval::source_name(s.source)) + ".";
            report.set_metric(p + "n", std::to_string(s.n));
            report.set_metric(p + "mean", s.mean ? format_double(*s.mean) : "");
            for (std::size_t k = 0; k < 5; ++k) {
                report.set_metric(p + "percent." + std::to_string(k + 1), std::to_string(s.percent[k]));
            }
        }
        report.set_metric("study.paired.n_pairs", std::to_string(summary.paired.n_pairs));
        report.set_metric("study.paired.n_model_higher", std::to_string(summary.paired.n_model_higher));
        report.add_artifact(out, "study_table.txt");
        report.add_artifact(out, "study.tsv");
        ctx.out << eval::render_study_table(rows_out, eval::study_footer(summary));
    }
    report.write(out);
    ctx.out << "study pool: " << pool.size() << " explanations over " << pool.size() / 2 << " clips\n";
}

}  // namespace xvars::cli
