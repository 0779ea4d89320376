// Runs the acceptance criteria end to end and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "xvars/cli/app.hpp"
#include "xvars/common/digest.hpp"
#include "xvars/common/ini.hpp"
#include "xvars/common/random.hpp"
#include "xvars/dataset/sampling.hpp"
#include "xvars/dataset/synthetic.hpp"
#include "xvars/evaluation/evaluate.hpp"
#include "xvars/evaluation/extraction.hpp"
#include "xvars/evaluation/metrics.hpp"
#include "xvars/evaluation/report.hpp"
#include "xvars/evaluation/study.hpp"
#include "xvars/model/language_model.hpp"
#include "xvars/model/pooling.hpp"
#include "xvars/model/projection.hpp"
#include "xvars/model/prompt.hpp"
#include "xvars/model/xvars_model.hpp"
#include "xvars/nn/serialize.hpp"
#include "xvars/service/server.hpp"
#include "xvars/training/loss.hpp"
#include "xvars/training/stage1.hpp"
#include "xvars/training/stage2.hpp"

// After Eigen: <resolv.h> defines a _res macro that breaks Eigen's headers.
#include "httplib.h"

using namespace xvars;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

// Collects failed expectations; the first few are shown in the FAIL line.
struct Checks {
    int failed = 0;
    std::vector<std::string> messages;
    std::vector<std::string> notes;

    void expect(bool ok, const std::string& what) {
        if (ok) return;
        ++failed;
        if (messages.size() < 3) messages.push_back(what);
    }
    void note(const std::string& n) { notes.push_back(n); }
};

std::string fmt(double v, int precision = 3) {
    std::ostringstream o;
    o << std::setprecision(precision) << v;
    return o.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("xvars_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::MissingFile, "missing " + p.string());
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path data_dir() { return XVARS_TEST_DATA_DIR; }
fs::path source_dir() { return XVARS_SOURCE_DIR; }

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) return out;
        start = tab + 1;
    }
}

double loop_ce(const RowVector& logits, int target) {
    double m = logits(0);
    for (Eigen::Index i = 1; i < logits.size(); ++i) m = std::max(m, logits(i));
    double z = 0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) z += std::exp(logits(i) - m);
    return -(logits(target) - m - std::log(z));
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string label_suffix(FoulType f, Severity s) {
    return " " + std::string(display_name(f)) + " " + std::string(display_name(s)) + " ";
}

// ---------------------------------------------------------------- fixtures

constexpr int kToyFrames = 4;

struct ToyWorld {
    fs::path dir;
    std::shared_ptr<data::Dataset> dataset;
    train::Stage1Config s1cfg;
    train::Stage1Result stage1;
    std::vector<train::Stage1StepLog> stage1_steps;
    double stage1_seconds = 0;
};

data::SyntheticConfig toy_synth() {
    data::SyntheticConfig sc;
    sc.clips_per_combination = 8;
    sc.seed = 7;
    return sc;
}

ToyWorld& toy_world() {
    static ToyWorld w = [] {
        ToyWorld t;
        t.dir = scratch("toy");
        t.dataset = std::make_shared<data::Dataset>(data::generate_synthetic(toy_synth(), t.dir));
        t.s1cfg.learning_rate = 2e-3;
        t.s1cfg.epochs = 40;
        t.s1cfg.batch_size = 8;
        t.s1cfg.frames_per_clip = kToyFrames;
        t.s1cfg.seed = 1;
        const auto start = Clock::now();
        const auto clips = train::load_labeled_clips(*t.dataset, data::Split::Train, kToyFrames);
        t.stage1 = train::train_stage1(clips, t.s1cfg, [&](const train::Stage1StepLog& log) {
            t.stage1_steps.push_back(log);
        });
        t.stage1_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        return t;
    }();
    return w;
}

struct Stage2World {
    train::Stage2Config cfg;
    std::vector<train::Stage2Sample> samples;
    train::Stage2Result result;
    std::string frozen_before;
    std::string frozen_after;
    long long captured = 0;
    std::set<long long> captured_steps;
    long long label_mismatches = 0;
    std::string first_mismatch;
};

std::string frozen_digest(const train::Stage1Result& s1) {
    const auto& enc = std::as_const(*s1.encoder);
    const auto& heads = std::as_const(*s1.heads);
    return nn::parameter_digest(enc.parameters()) + "|" + nn::parameter_digest(heads.parameters());
}

Stage2World& stage2_world() {
    static Stage2World w = [] {
        Stage2World s;
        auto& toy = toy_world();
        s.cfg.learning_rate = 3e-3;
        s.cfg.epochs = 15;
        s.cfg.batch_size = 16;
        s.cfg.lm_pretrain_epochs = 10;
        s.cfg.adapter_rank = 8;
        s.cfg.trainable_fraction = 0.01;
        s.cfg.seed = 2;
        s.samples = train::build_stage2_samples(*toy.dataset, data::Split::Train, *toy.stage1.encoder, kToyFrames);
        s.frozen_before = frozen_digest(toy.stage1);
        s.result = train::train_stage2(s.samples, *toy.stage1.encoder, *toy.stage1.heads, s.cfg,
                                       [&](const train::CapturedPrompt& c) {
                                           ++s.captured;
                                           s.captured_steps.insert(c.step);
                                           const auto& clip = toy.dataset->clip(c.clip_id);
                                           const bool injected_gt = clip.gt_foul == c.injected_foul &&
                                                                    clip.gt_severity == c.injected_severity;
                                           const auto& head = c.prompt->segments.front().text;
                                           const bool in_text = ends_with(
                                               head, label_suffix(*clip.gt_foul, *clip.gt_severity));
                                           if (!injected_gt || !in_text) {
                                               if (s.label_mismatches++ == 0) s.first_mismatch = head;
                                           }
                                       });
        s.frozen_after = frozen_digest(toy.stage1);
        return s;
    }();
    return w;
}

// ---------------------------------------------------------------- criteria

void criterion_pooling(Checks& c) {
    Rng rng(101);
    double worst = 0;
    auto track = [&](double err, double tol, const std::string& what) {
        worst = std::max(worst, err);
        c.expect(err <= tol, what + " error " + fmt(err));
    };
    for (int inst = 0; inst < 200; ++inst) {
        const int T = 1 + static_cast<int>(rng.below(8));
        const int S = 1 + static_cast<int>(rng.below(16));
        const int D = 1 + static_cast<int>(rng.below(32));
        const int E = 1 + static_cast<int>(rng.below(16));
        auto random_states = [&] {
            HiddenStates h;
            for (int t = 0; t < T; ++t) {
                Matrix m(S, D);
                for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
                h.push_back(m);
            }
            return h;
        };
        const auto h = random_states();
        const Matrix temporal = pool_temporal(h);
        const Matrix spatial = pool_spatial(h);
        const auto z = build_spatiotemporal(h);
        c.expect(temporal.rows() == S && temporal.cols() == D, "temporal shape");
        c.expect(spatial.rows() == T && spatial.cols() == D, "spatial shape");
        c.expect(z.combined.rows() == S + T && z.combined.cols() == D, "combined shape");
        if (c.failed) return;

        double err = 0;
        for (int j = 0; j < S; ++j) {
            for (int d = 0; d < D; ++d) {
                double sum = 0;
                for (int t = 0; t < T; ++t) sum += h[t](j, d);
                err = std::max(err, std::abs(temporal(j, d) - sum / T));
                err = std::max(err, std::abs(z.combined(j, d) - sum / T));
            }
        }
        for (int t = 0; t < T; ++t) {
            for (int d = 0; d < D; ++d) {
                double sum = 0;
                for (int j = 0; j < S; ++j) sum += h[t](j, d);
                err = std::max(err, std::abs(spatial(t, d) - sum / S));
                err = std::max(err, std::abs(z.combined(S + t, d) - sum / S));
            }
        }
        track(err, 1e-6, "pooling/concatenation");

        Projection proj(D, E, 1000 + static_cast<std::uint64_t>(inst));
        const Matrix projected = proj.apply(z.combined);
        const auto& W = proj.linear().weight().value;
        const auto& b = proj.linear().bias().value;
        err = 0;
        for (int r = 0; r < S + T; ++r) {
            for (int e = 0; e < E; ++e) {
                double acc = b(0, e);
                for (int d = 0; d < D; ++d) acc += z.combined(r, d) * W(d, e);
                err = std::max(err, std::abs(projected(r, e) - acc));
            }
        }
        track(err, 1e-6, "projection");

        // Frame permutation: temporal pool unchanged, spatial rows follow the frames.
        std::vector<int> frames(static_cast<std::size_t>(T));
        std::iota(frames.begin(), frames.end(), 0);
        rng.shuffle(frames);
        HiddenStates by_frame;
        for (const int t : frames) by_frame.push_back(h[static_cast<std::size_t>(t)]);
        err = (pool_temporal(by_frame) - temporal).cwiseAbs().maxCoeff();
        const Matrix sp = pool_spatial(by_frame);
        for (int t = 0; t < T; ++t) {
            err = std::max(err, (sp.row(t) - spatial.row(frames[static_cast<std::size_t>(t)])).cwiseAbs().maxCoeff());
        }
        // Token permutation: spatial pool unchanged, temporal rows follow the tokens.
        std::vector<int> tokens(static_cast<std::size_t>(S));
        std::iota(tokens.begin(), tokens.end(), 0);
        rng.shuffle(tokens);
        HiddenStates by_token;
        for (const auto& m : h) {
            Matrix p(S, D);
            for (int j = 0; j < S; ++j) p.row(j) = m.row(tokens[static_cast<std::size_t>(j)]);
            by_token.push_back(p);
        }
        err = std::max(err, (pool_spatial(by_token) - spatial).cwiseAbs().maxCoeff());
        const Matrix tp = pool_temporal(by_token);
        for (int j = 0; j < S; ++j) {
            err = std::max(err, (tp.row(j) - temporal.row(tokens[static_cast<std::size_t>(j)])).cwiseAbs().maxCoeff());
        }
        track(err, 1e-6, "permutation");

        // Linearity of both pools; the projection is affine.
        const auto g = random_states();
        const double a = rng.normal(), bb = rng.normal();
        HiddenStates mix;
        for (int t = 0; t < T; ++t) mix.push_back(a * h[t] + bb * g[t]);
        err = (pool_temporal(mix) - (a * temporal + bb * pool_temporal(g))).cwiseAbs().maxCoeff();
        err = std::max(err, (pool_spatial(mix) - (a * spatial + bb * pool_spatial(g))).cwiseAbs().maxCoeff());
        const Matrix zg = build_spatiotemporal(g).combined;
        const double l = rng.uniform();
        err = std::max(err, (proj.apply(l * z.combined + (1 - l) * zg) -
                             (l * proj.apply(z.combined) + (1 - l) * proj.apply(zg)))
                                .cwiseAbs()
                                .maxCoeff());
        track(err, 1e-6, "linearity");
    }
    c.note("200 instances, max abs error " + fmt(worst));
}

void criterion_prompts(Checks& c) {
    std::istringstream in(read_text(data_dir() / "golden/prompt_fixtures.tsv"));
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> corpus;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(split_tabs(line));
        c.expect(rows.back().size() == 5, "fixture with " + std::to_string(rows.back().size()) + " fields");
        corpus.push_back(rows.back()[0]);
        if (rows.back().size() > 3 && rows.back()[3] != "-") corpus.push_back(rows.back()[3]);
    }
    if (c.failed) return;
    const auto tok = Tokenizer::build(corpus);
    std::set<FoulType> fouls;
    std::set<Severity> sevs;
    Rng rng(5);
    for (const auto& r : rows) {
        const auto foul = parse_foul_type(r[1]);
        const auto sev = parse_severity(r[2]);
        c.expect(foul && sev, "unknown label in fixture: " + r[1] + " / " + r[2]);
        if (!foul || !sev) continue;
        fouls.insert(*foul);
        sevs.insert(*sev);
        const int n_visual = 1 + static_cast<int>(rng.below(6));
        Matrix tokens(n_visual, 8);
        for (Eigen::Index i = 0; i < tokens.size(); ++i) tokens.data()[i] = rng.normal();
        const VisualTokens w{tokens, "fixture"};
        const bool has_answer = r[3] != "-";
        const auto p = has_answer ? assemble_prompt(r[0], *foul, *sev, w, tok, std::string_view(r[3]))
                                  : assemble_prompt(r[0], *foul, *sev, w, tok);
        c.expect(p.rendered_text() == r[4], "rendering of '" + r[4] + "' was '" + p.rendered_text() + "'");

        // Layout: user text with labels, visual tokens, assistant marker, answer.
        const std::string user = "USER: " + r[0] + " " + r[1] + " " + r[2] + " ";
        const std::size_t n_segments = has_answer ? 4 : 3;
        c.expect(p.segments.size() == n_segments, "segment count");
        if (p.segments.size() != n_segments) continue;
        c.expect(p.segments[0].kind == SegmentKind::Text && p.segments[0].text == user, "user segment");
        c.expect(p.segments[1].kind == SegmentKind::Visual && p.segments[1].visual.count() == n_visual,
                 "visual segment");
        c.expect(p.segments[2].kind == SegmentKind::Text && p.segments[2].text == " Assistant:", "assistant marker");
        std::vector<int> expected = tok.encode(user);
        expected.insert(expected.end(), static_cast<std::size_t>(n_visual), -1);
        const auto marker = tok.encode(" Assistant:");
        expected.insert(expected.end(), marker.begin(), marker.end());
        std::size_t answer_len = 0;
        if (has_answer) {
            c.expect(p.segments[3].kind == SegmentKind::Text && p.segments[3].text == r[3], "answer segment");
            const auto answer = tok.encode(r[3]);
            answer_len = answer.size();
            expected.insert(expected.end(), answer.begin(), answer.end());
        }
        c.expect(p.flat_token_ids() == expected, "token ids of '" + r[4] + "'");
        c.expect(p.answer_mask.size() == expected.size(), "answer mask length");
        for (std::size_t i = 0; i < p.answer_mask.size(); ++i) {
            c.expect(p.answer_mask[i] == (i + answer_len >= expected.size()), "answer mask at " + std::to_string(i));
        }
    }
    c.expect(rows.size() == 10, "expected 10 fixtures, found " + std::to_string(rows.size()));
    c.expect(fouls.size() == 8, "fixtures cover " + std::to_string(fouls.size()) + " foul types");
    c.expect(sevs.size() == 4, "fixtures cover " + std::to_string(sevs.size()) + " severities");
    c.note(std::to_string(rows.size()) + " fixtures, " + std::to_string(fouls.size()) + " foul types, " +
           std::to_string(sevs.size()) + " severities");
}

void criterion_stage1(Checks& c) {
    auto& toy = toy_world();
    c.expect(toy.dataset->clips().size() == 256, "dataset has " + std::to_string(toy.dataset->clips().size()));
    double worst = 0;
    for (const auto& log : toy.stage1_steps) {
        const auto B = log.foul_labels.size();
        double sum = 0;
        for (std::size_t i = 0; i < B; ++i) {
            sum += loop_ce(log.foul_logits.row(static_cast<Eigen::Index>(i)), index_of(log.foul_labels[i])) +
                   loop_ce(log.severity_logits.row(static_cast<Eigen::Index>(i)), index_of(log.severity_labels[i]));
        }
        worst = std::max(worst, std::abs(log.loss - sum / static_cast<double>(B)));
    }
    c.expect(!toy.stage1_steps.empty(), "no steps logged");
    c.expect(static_cast<long long>(toy.stage1_steps.size()) == toy.stage1.steps, "not every step was logged");
    c.expect(worst <= 1e-6, "loss differs from the cross-entropy oracle by " + fmt(worst));

    const XVarsModel model(toy.stage1.encoder, toy.stage1.heads);
    const auto ev = eval::evaluate_classifier(model, *toy.dataset, data::Split::Test, kToyFrames);
    const double foul = ev.foul.accuracy.value_or(0), sev = ev.severity.accuracy.value_or(0);
    c.expect(foul >= 0.90, "foul accuracy " + fmt(foul));
    c.expect(sev >= 0.90, "severity accuracy " + fmt(sev));
    c.expect(toy.stage1_seconds < 300, "training took " + fmt(toy.stage1_seconds) + " s");
    c.note("held-out foul acc " + fmt(foul) + ", severity acc " + fmt(sev) + " (chance 0.125/0.25) over " +
           std::to_string(ev.foul.n_evaluated) + " clips; " + std::to_string(toy.stage1_steps.size()) +
           " steps, max loss error " + fmt(worst) + "; train " + fmt(toy.stage1_seconds) + " s");
}

void criterion_freeze(Checks& c) {
    auto& s2 = stage2_world();
    const auto& fr = s2.result.freeze;
    c.expect(s2.frozen_before == s2.frozen_after, "encoder/head digests changed during stage 2");
    c.expect(fr.frozen_intact(), "freeze report flags a change");
    const int L = s2.cfg.language_model.layers;
    const auto expected = static_cast<std::size_t>(std::ceil(s2.cfg.trainable_fraction * L));
    c.expect(s2.result.language_model->adapted_layers().size() == expected,
             "adapted " + std::to_string(s2.result.language_model->adapted_layers().size()) + " layers, expected " +
                 std::to_string(expected));
    for (int layers = 1; layers <= 12; ++layers) {
        for (const double f : {0.01, 0.1, 0.25, 0.3, 0.5, 0.75, 0.99, 1.0}) {
            const auto spec = train::select_trainable_parameters(layers, f, 4);
            const auto want = static_cast<std::size_t>(std::ceil(f * layers));
            c.expect(spec.layers.size() == want, "L=" + std::to_string(layers) + " fraction " + fmt(f));
            // the selected blocks are the last ones
            for (std::size_t k = 0; k < spec.layers.size(); ++k) {
                c.expect(spec.layers[k] == layers - static_cast<int>(spec.layers.size()) + static_cast<int>(k),
                         "selected layers are not the last blocks");
            }
        }
    }

    // Zero-initialised adapters on a fresh base model are an exact no-op.
    LanguageModelConfig lmc;
    lmc.vocab_size = s2.result.tokenizer->size();
    lmc.width = s2.cfg.language_model.width;
    lmc.layers = L;
    lmc.mlp_hidden = s2.cfg.language_model.mlp_hidden;
    lmc.context_window = s2.cfg.language_model.context_window;
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        ToyLanguageModel lm(lmc, 50 + seed);
        const auto& sample = s2.samples[static_cast<std::size_t>(seed) * 7 % s2.samples.size()];
        const VisualTokens w{s2.result.projection->apply(sample.features), sample.clip_id};
        const auto prompt = assemble_prompt(sample.question, sample.gt_foul, sample.gt_severity, w,
                                            *s2.result.tokenizer, std::string_view(sample.answer));
        const Matrix before = lm.logits(prompt);
        lm.attach_adapters(train::select_trainable_parameters(L, 1.0, s2.cfg.adapter_rank, 16.0, seed));
        worst = std::max(worst, (lm.logits(prompt) - before).cwiseAbs().maxCoeff());
    }
    c.expect(worst <= 1e-6, "fresh adapters moved logits by " + fmt(worst));
    c.note("digests identical, " + std::to_string(expected) + " of " + std::to_string(L) +
           " blocks adapted, " + std::to_string(fr.adapter_count) + " adapter parameters against " +
           std::to_string(fr.total_count) + " frozen LM parameters, zero-init logit change " + fmt(worst));
}

void criterion_injection(Checks& c) {
    auto& toy = toy_world();
    auto& s2 = stage2_world();
    c.expect(s2.captured > 0, "no prompts captured");
    c.expect(static_cast<std::size_t>(s2.captured) >= s2.samples.size(), "fewer prompts than samples");
    c.expect(s2.captured_steps.size() == s2.result.step_losses.size(),
             "prompts captured on " + std::to_string(s2.captured_steps.size()) + " of " +
                 std::to_string(s2.result.step_losses.size()) + " steps");
    c.expect(s2.label_mismatches == 0, "training prompt without ground truth: " + s2.first_mismatch);

    // Inference: once with the trained heads, once with untrained heads so
    // that predictions and ground truth disagree and the check discriminates.
    const auto untrained = train::initialize_stage1(train::Stage1Config{});
    std::vector<std::pair<std::string, std::shared_ptr<const ClassificationHeads>>> variants = {
        {"trained", toy.stage1.heads}, {"untrained", untrained.heads}};
    InferenceOptions opts;
    opts.max_new_tokens = 2;
    long long prompts = 0, differing = 0;
    for (const auto& [name, heads] : variants) {
        const XVarsModel model(toy.stage1.encoder, heads, s2.result.projection, s2.result.language_model,
                               s2.result.tokenizer);
        for (const auto* clip : toy.dataset->clips_in(data::Split::Test)) {
            const auto prepared = model.prepare(data::sample_frames(*toy.dataset, *clip, kToyFrames));
            const auto& pred = prepared.classification;
            int seen = 0;
            model.answer(prepared, data::kCardQuestion, opts, [&](const PromptSequence& p, FoulType f, Severity s) {
                ++seen;
                const auto& head = p.segments.front().text;
                c.expect(f == pred.predicted_foul && s == pred.predicted_severity,
                         name + ": injected labels are not the predictions for " + clip->clip_id);
                c.expect(ends_with(head, label_suffix(pred.predicted_foul, pred.predicted_severity)),
                         name + ": prompt lacks predicted labels: " + head);
                if (pred.predicted_foul != *clip->gt_foul || pred.predicted_severity != *clip->gt_severity) {
                    ++differing;
                    c.expect(!ends_with(head, label_suffix(*clip->gt_foul, *clip->gt_severity)),
                             name + ": prompt carries ground truth: " + head);
                }
            });
            c.expect(seen >= 1, "no prompt observed for " + clip->clip_id);
            prompts += seen;
        }
    }
    c.expect(differing > 0, "untrained heads never disagreed with ground truth; check cannot discriminate");
    c.note(std::to_string(s2.captured) + " training prompts over " + std::to_string(s2.captured_steps.size()) +
           " steps carry ground truth; " + std::to_string(prompts) + " inference prompts carry predictions (" +
           std::to_string(differing) + " differ from ground truth)");
}

// CLI pipeline with the shipped toy config. Returns the wall time in seconds.
double run_pipeline(const fs::path& root, Checks& c) {
    const auto start = Clock::now();
    const auto cfg = (source_dir() / "configs/toy.ini").string();
    const auto ds = (root / "data/manifest.csv").string();
    const std::vector<std::vector<std::string>> steps = {
        {"synth", "--config", cfg, "--out", (root / "data").string()},
        {"train-stage1", "--config", cfg, "--dataset", ds, "--out", (root / "stage1").string()},
        {"train-stage2", "--config", cfg, "--dataset", ds, "--manifest", (root / "stage1").string(), "--out",
         (root / "stage2").string()},
        {"eval-classify", "--config", cfg, "--dataset", ds, "--manifest", (root / "stage2").string(), "--out",
         (root / "eval_classify").string()},
        {"eval-generate", "--config", cfg, "--dataset", ds, "--manifest", (root / "stage2").string(), "--out",
         (root / "eval_generate").string()},
    };
    for (const auto& args : steps) {
        std::istringstream in;
        std::ostringstream out, err;
        const int code = cli::run(args, in, out, err);
        c.expect(code == 0, args.front() + " exited with " + std::to_string(code) + ": " + err.str());
        if (code != 0) break;
    }
    return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path pipeline_root() {
    static const fs::path root = scratch("pipeline");
    return root;
}

void criterion_end_to_end(Checks& c) {
    const double seconds = run_pipeline(pipeline_root(), c);
    if (c.failed) return;
    IniDocument report = IniDocument::load(pipeline_root() / "eval_generate/run_report.txt");
    auto metric = [&](const std::string& key) {
        const auto v = report.get("metrics", key);
        c.expect(v.has_value(), "report lacks " + key);
        return v.value_or("");
    };
    const auto correct = parse_int(metric("severity.n_correct"), "n_correct");
    const auto evaluated = parse_int(metric("severity.n_evaluated"), "n_evaluated");
    const auto attempted = parse_int(metric("severity.n_attempted"), "n_attempted");
    const auto rate = metric("agreement.rate");
    const auto compared = parse_int(metric("agreement.n_compared"), "n_compared");
    // Clips whose answer yields no severity count as wrong here.
    const double acc = attempted ? static_cast<double>(correct) / static_cast<double>(attempted) : 0.0;
    c.expect(acc >= 0.80, "extracted severity accuracy " + fmt(acc));
    c.expect(compared > 0 && rate != "/", "agreement not computable");
    c.expect(seconds < 900, "pipeline took " + fmt(seconds) + " s");
    c.note("extracted-severity accuracy " + fmt(acc) + " (" + std::to_string(correct) + "/" +
           std::to_string(attempted) + ", " + std::to_string(evaluated) + " extractable), agreement " + rate +
           " over " + std::to_string(compared) + " clips; pipeline " + fmt(seconds) + " s");
}

void criterion_metrics(Checks& c) {
    Rng rng(17);
    int with_empty = 0;
    for (int i = 0; i < 500; ++i) {
        const int k = 2 + static_cast<int>(rng.below(7));
        std::vector<std::string> names;
        for (int n = 0; n < k; ++n) names.push_back("c" + std::to_string(n));
        eval::ConfusionMatrix cm(names);
        const int skip = i % 3 == 0 ? static_cast<int>(rng.below(static_cast<std::size_t>(k))) : -1;
        with_empty += skip >= 0;
        for (int g = 0; g < k; ++g) {
            if (g == skip) continue;
            for (int p = 0; p < k; ++p) cm.add(g, p, static_cast<long long>(rng.below(7)));
            if (cm.row_total(g) == 0) cm.add(g, g);
        }
        // Oracle: expand to samples and count.
        std::vector<std::pair<int, int>> samples;
        for (int g = 0; g < k; ++g) {
            for (int p = 0; p < k; ++p) {
                for (long long n = 0; n < cm.at(g, p); ++n) samples.emplace_back(g, p);
            }
        }
        long long correct = 0;
        std::vector<long long> support(static_cast<std::size_t>(k), 0), hits(support);
        for (const auto& [g, p] : samples) {
            correct += g == p;
            ++support[static_cast<std::size_t>(g)];
            hits[static_cast<std::size_t>(g)] += g == p;
        }
        double recall_sum = 0;
        int present = 0;
        for (std::size_t n = 0; n < support.size(); ++n) {
            if (support[n] == 0) continue;
            recall_sum += static_cast<double>(hits[n]) / static_cast<double>(support[n]);
            ++present;
        }
        const double acc = static_cast<double>(correct) / static_cast<double>(samples.size());
        c.expect(eval::accuracy(cm) == acc, "accuracy mismatch on matrix " + std::to_string(i));
        c.expect(eval::balanced_accuracy(cm) == recall_sum / present, "balanced accuracy mismatch on " +
                                                                          std::to_string(i));
    }
    const std::vector<eval::ClassificationRow> rows = {
        {"CLIP-L/14", "Single-view", 0.51, 0.39, 0.52, 0.35},
        {"X-VARS", "Single-view", std::nullopt, std::nullopt, 0.62, 0.35},
    };
    c.expect(eval::render_classification_table(rows) == read_text(data_dir() / "golden/classification_table.txt"),
             "classification table differs from golden file");
    c.note("500 matrices (" + std::to_string(with_empty) + " with an empty ground-truth row) match exactly; golden "
           "table verbatim");
}

void criterion_extraction(Checks& c) {
    std::istringstream in(read_text(data_dir() / "golden/extraction_corpus.tsv"));
    std::string line;
    std::getline(in, line);
    int labeled = 0, labeled_ok = 0, blank = 0, false_matches = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        c.expect(f.size() == 3, "corpus line with " + std::to_string(f.size()) + " fields");
        if (f.size() != 3) continue;
        const auto r = eval::extract_labels(f[0]);
        if (f[1] == "-" && f[2] == "-") {
            ++blank;
            const bool clean = !r.severity && !r.foul_type;
            false_matches += !clean;
            c.expect(clean, "false match on: " + f[0]);
            continue;
        }
        ++labeled;
        const auto sev = f[1] == "-" ? std::nullopt : parse_severity(f[1]);
        const auto foul = f[2] == "-" ? std::nullopt : parse_foul_type(f[2]);
        const bool ok = r.severity == sev && r.foul_type == foul;
        labeled_ok += ok;
        c.expect(ok, "wrong labels for: " + f[0]);
    }
    c.expect(labeled >= 30, "only " + std::to_string(labeled) + " labelled strings");
    c.expect(blank >= 10, "only " + std::to_string(blank) + " no-evidence strings");
    c.note(std::to_string(labeled_ok) + "/" + std::to_string(labeled) + " labelled strings correct, " +
           std::to_string(false_matches) + " false matches on " + std::to_string(blank) + " no-evidence strings");
}

// True when no key or string value reveals the source of an explanation.
bool blind(const json& j) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            if (k.find("source") != std::string::npos || !blind(v)) return false;
        }
    } else if (j.is_array()) {
        for (const auto& v : j) {
            if (!blind(v)) return false;
        }
    } else if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "human" || s == "model" || s.find("source") != std::string::npos) return false;
    }
    return true;
}

void criterion_study(Checks& c) {
    auto& toy = toy_world();
    std::vector<eval::StudyItem> pool;
    const auto& clips = toy.dataset->clips();
    for (int n = 0; n < 20; ++n) {
        const auto& id = clips[static_cast<std::size_t>(n) * 5].clip_id;
        pool.push_back({id, "Referee explanation " + std::to_string(n) + ".", eval::Source::Human});
        pool.push_back({id, "Generated explanation " + std::to_string(n) + ".", eval::Source::Model});
    }
    std::vector<std::string> raters;
    for (int r = 0; r < 20; ++r) raters.push_back("rater" + std::to_string(r));

    // Live service: every rater walks its 20 items over HTTP.
    service::ServiceConfig cfg;
    cfg.port = 0;
    cfg.admin_token = "acceptance";
    cfg.state_dir = scratch("study_state");
    cfg.threads = 2;
    cfg.frames_per_clip = kToyFrames;
    service::Service server(cfg, nullptr, toy.dataset);
    httplib::Client client("127.0.0.1", server.start());
    const httplib::Headers admin = {{"X-Admin-Token", "acceptance"}};
    json items = json::array();
    for (const auto& it : pool) {
        items.push_back({{"clip_id", it.clip_id}, {"explanation", it.explanation},
                         {"source", eval::source_name(it.source)}});
    }
    const json create = {{"raters", raters}, {"items", items}, {"items_per_rater", 20}, {"seed", 11}};
    const auto created = client.Post("/v1/study", admin, create.dump(), "application/json");
    c.expect(created && created->status == 201, "study creation failed");
    if (c.failed) return;

    // Scores from a seeded generator; the oracle looks up each item's source
    // from the pool by explanation text, independently of the engine.
    std::map<std::string, eval::Source> source_of;
    for (const auto& it : pool) source_of[it.explanation] = it.source;
    Rng rng(31);
    std::array<std::array<long long, 5>, 2> counts{};
    std::array<long long, 2> sums{};
    long long payloads = 0, leaks = 0;
    for (const auto& rater : raters) {
        for (;;) {
            const auto next = client.Get("/v1/study/" + rater + "/next");
            c.expect(next && (next->status == 200 || next->status == 204), "bad /next answer");
            if (!next || next->status != 200) break;
            ++payloads;
            const auto body = json::parse(next->body);
            leaks += !blind(body) || next->body.find("source") != std::string::npos;
            const auto src = source_of.at(body["explanation"].get<std::string>());
            int score = 1 + static_cast<int>(rng.below(5));
            if (src == eval::Source::Model && rng.below(3) == 0) score = std::max(1, score - 1);
            const json rating = {{"item_index", body["item_index"]}, {"score", score}};
            const auto rated =
                client.Post("/v1/study/" + rater + "/rating", rating.dump(), "application/json");
            c.expect(rated && rated->status == 201, "rating rejected");
            if (rated) {
                ++payloads;
                leaks += !blind(json::parse(rated->body));
            }
            ++counts[static_cast<std::size_t>(src)][static_cast<std::size_t>(score - 1)];
            sums[static_cast<std::size_t>(src)] += score;
        }
    }
    const auto summary_res = client.Get("/v1/study/summary", admin);
    c.expect(summary_res && summary_res->status == 200, "summary unavailable");
    if (!summary_res || summary_res->status != 200) return;
    const auto summary = json::parse(summary_res->body);
    long long total = 0;
    for (std::size_t s = 0; s < 2; ++s) {
        const auto& got = summary["sources"][s];
        long long n = 0;
        for (const auto v : counts[s]) n += v;
        total += n;
        c.expect(got["n"].get<long long>() == n, "rating count of source " + std::to_string(s));
        for (std::size_t k = 0; k < 5; ++k) {
            c.expect(got["counts"][k].get<long long>() == counts[s][k], "bucket count mismatch");
        }
        const double mean = static_cast<double>(sums[s]) / static_cast<double>(n);
        c.expect(got["mean"].get<double>() == mean, "mean mismatch for source " + std::to_string(s));
        c.expect(got["percent"].get<std::array<int, 5>>() == eval::largest_remainder_percentages(counts[s]),
                 "percentages mismatch");
    }
    c.expect(total == 400, "expected 400 ratings, got " + std::to_string(total));

    // Rater views straight from the engine.
    for (const auto& session : eval::create_study(pool, raters, 20, 11)) {
        ++payloads;
        leaks += !blind(eval::rater_view(session));
    }
    c.expect(leaks == 0, std::to_string(leaks) + " payloads reveal the source");

    const std::vector<eval::StudyRow> golden_rows = {
        {"Referees", 4.0, {3, 10, 8, 46, 33}},
        {"X-VARS", 3.8, {3, 17, 4, 46, 30}},
    };
    c.expect(eval::render_study_table(golden_rows) == read_text(data_dir() / "golden/study_table.txt"),
             "study table differs from golden file");
    server.stop();
    c.note("20 raters x 20 items, " + std::to_string(total) + " ratings match the counting oracle; " +
           std::to_string(payloads) + " rater payloads scanned, " + std::to_string(leaks) +
           " leaks; golden table verbatim");
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = sha256_file(e.path());
    }
    return out;
}

void criterion_determinism(Checks& c) {
    const auto root = pipeline_root();
    c.expect(fs::exists(root / "eval_generate/run_report.txt"), "first pipeline run missing");
    if (c.failed) return;
    const auto first = snapshot(root);
    std::map<std::string, std::string> first_reports;
    for (const auto& [rel, digest] : first) {
        if (ends_with(rel, "run_report.txt")) first_reports[rel] = read_text(root / rel);
    }
    run_pipeline(root, c);
    if (c.failed) return;
    const auto second = snapshot(root);
    c.expect(first.size() == second.size(), "file sets differ");
    int differing = 0;
    for (const auto& [rel, digest] : first) {
        const auto it = second.find(rel);
        const bool same = it != second.end() && it->second == digest;
        differing += !same;
        c.expect(same, rel + " changed between runs");
    }
    for (const auto& [rel, text] : first_reports) c.expect(read_text(root / rel) == text, rel + " text changed");
    const auto manifest = [&](const std::string& stage) { return read_text(root / stage / "checkpoint.manifest"); };
    c.note(std::to_string(first.size()) + " files compared, " + std::to_string(differing) + " differ; stage-2 " +
           "manifest digest " + sha256_digest(manifest("stage2")).substr(0, 19) + "...");
}

struct Criterion {
    int number;
    const char* title;
    double budget_s;  // runtime limit, 0 when none applies
    std::function<void(Checks&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "pooling, concatenation and projection oracles", 10, criterion_pooling},
        {2, "prompt golden fixtures and answer mask", 1, criterion_prompts},
        {3, "stage-1 toy training", 300, criterion_stage1},
        {4, "stage-2 freeze and adapter budget", 0, criterion_freeze},
        {5, "label injection: ground truth in training, predictions at inference", 0, criterion_injection},
        {6, "toy end-to-end generation", 900, criterion_end_to_end},
        {7, "accuracy and balanced accuracy oracles, table layout", 0, criterion_metrics},
        {8, "rule-based extraction corpus", 0, criterion_extraction},
        {9, "study engine, summary oracle and blindness", 0, criterion_study},
        {10, "determinism of training and evaluation", 0, criterion_determinism},
    };
    int failures = 0;
    for (const auto& cr : criteria) {
        Checks checks;
        const auto start = Clock::now();
        try {
            cr.run(checks);
        } catch (const std::exception& e) {
            checks.expect(false, std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
        if (cr.budget_s > 0) {
            checks.expect(seconds < cr.budget_s, "took " + fmt(seconds) + " s, limit " + fmt(cr.budget_s) + " s");
        }
        const bool pass = checks.failed == 0;
        failures += !pass;
        std::cout << "criterion " << std::setw(2) << cr.number << ": " << (pass ? "PASS" : "FAIL") << "  "
                  << cr.title << " [" << std::fixed << std::setprecision(2) << seconds << " s]"
                  << std::defaultfloat << "\n";
        for (const auto& n : checks.notes) std::cout << "    " << n << "\n";
        for (const auto& m : checks.messages) std::cout << "    failed: " << m << "\n";
        if (checks.failed > static_cast<int>(checks.messages.size())) {
            std::cout << "    ... " << checks.failed - static_cast<int>(checks.messages.size()) << " more\n";
        }
        std::cout.flush();
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures;
}
