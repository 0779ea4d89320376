#include "doctest.h"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "xvars/common/error.hpp"
#include "xvars/common/random.hpp"
#include "xvars/dataset/sampling.hpp"
#include "xvars/dataset/synthetic.hpp"
#include "xvars/evaluation/agreement.hpp"
#include "xvars/evaluation/evaluate.hpp"
#include "xvars/evaluation/extraction.hpp"
#include "xvars/evaluation/metrics.hpp"
#include "xvars/evaluation/report.hpp"
#include "xvars/evaluation/study.hpp"
#include "xvars/training/stage1.hpp"
#include "xvars/training/stage2.hpp"
#include "test_support.hpp"

using namespace xvars;
using namespace xvars::eval;
using xvars::testing::error_code;
using xvars::testing::scratch_dir;

namespace {

std::string read_text(const std::string& rel) {
    std::ifstream in(std::string(XVARS_TEST_DATA_DIR) + "/" + rel, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CorpusEntry {
    std::string text;
    std::optional<Severity> severity;
    std::optional<FoulType> foul;
};

std::vector<CorpusEntry> load_corpus() {
    std::vector<CorpusEntry> out;
    std::istringstream in(read_text("golden/extraction_corpus.tsv"));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto t1 = line.find('\t');
        const auto t2 = line.find('\t', t1 + 1);
        REQUIRE(t2 != std::string::npos);
        CorpusEntry e{line.substr(0, t1), std::nullopt, std::nullopt};
        const auto sev = line.substr(t1 + 1, t2 - t1 - 1);
        const auto foul = line.substr(t2 + 1);
        if (sev != "-") {
            e.severity = parse_severity(sev);
            REQUIRE(e.severity.has_value());
        }
        if (foul != "-") {
            e.foul = parse_foul_type(foul);
            REQUIRE(e.foul.has_value());
        }
        out.push_back(std::move(e));
    }
    return out;
}

ConfusionMatrix random_matrix(Rng& rng, int k, bool empty_row) {
    std::vector<std::string> names;
    for (int i = 0; i < k; ++i) names.push_back("c" + std::to_string(i));
    ConfusionMatrix cm(names);
    const int skip = empty_row ? static_cast<int>(rng.below(static_cast<std::size_t>(k))) : -1;
    for (int g = 0; g < k; ++g) {
        if (g == skip) continue;
        for (int p = 0; p < k; ++p) cm.add(g, p, static_cast<long long>(rng.below(7)));
        if (cm.row_total(g) == 0) cm.add(g, g);
    }
    return cm;
}

// Expands the matrix into (gt, pred) samples and counts from scratch.
std::pair<double, double> brute_force_metrics(const ConfusionMatrix& cm) {
    std::vector<std::pair<int, int>> samples;
    for (int g = 0; g < cm.size(); ++g) {
        for (int p = 0; p < cm.size(); ++p) {
            for (long long n = 0; n < cm.at(g, p); ++n) samples.emplace_back(g, p);
        }
    }
    long long correct = 0;
    std::vector<long long> per_class(static_cast<std::size_t>(cm.size()), 0), hits(per_class);
    for (const auto& [g, p] : samples) {
        correct += g == p;
        ++per_class[static_cast<std::size_t>(g)];
        hits[static_cast<std::size_t>(g)] += g == p;
    }
    double recall_sum = 0;
    int classes = 0;
    for (std::size_t k = 0; k < per_class.size(); ++k) {
        if (per_class[k] == 0) continue;
        recall_sum += static_cast<double>(hits[k]) / static_cast<double>(per_class[k]);
        ++classes;
    }
    return {static_cast<double>(correct) / static_cast<double>(samples.size()), recall_sum / classes};
}

class FakeClient final : public ExtractorClient {
public:
    std::map<std::string, std::string> replies;
    mutable std::vector<std::string> requests;
    bool down = false;

    std::string complete(const std::string& request) const override {
        if (down) fail(ErrorCode::Transport, "extractor backend unreachable");
        requests.push_back(request);
        const auto field = request.substr(7, request.find('\n') - 7);
        return replies.at(field);
    }
};

GenerationOutcome outcome(const std::string& id, Severity gt, const std::string& answer) {
    GenerationOutcome o;
    o.clip_id = id;
    o.gt_severity = gt;
    o.answer = answer;
    o.extraction = extract_labels(answer);
    return o;
}

}  // namespace

TEST_CASE("accuracy and balanced accuracy on hand-computed matrices") {
    ConfusionMatrix diag({"a", "b"});
    diag.add(0, 0, 5);
    diag.add(1, 1, 5);
    CHECK(accuracy(diag) == 1.0);
    CHECK(balanced_accuracy(diag) == 1.0);

    ConfusionMatrix cm({"a", "b"});
    cm.add(0, 0, 3);
    cm.add(0, 1, 1);
    cm.add(1, 0, 2);
    cm.add(1, 1, 2);
    CHECK(accuracy(cm) == 0.625);
    CHECK(balanced_accuracy(cm) == 0.625);

    ConfusionMatrix skewed({"a", "b", "c"});
    skewed.add(0, 0, 9);
    skewed.add(0, 1, 1);
    skewed.add(2, 0, 2);
    skewed.add(2, 2, 2);
    CHECK(accuracy(skewed) == doctest::Approx(11.0 / 14.0));
    CHECK(balanced_accuracy(skewed) == doctest::Approx((0.9 + 0.5) / 2.0));

    const ConfusionMatrix empty({"a", "b"});
    CHECK(error_code([&] { accuracy(empty); }) == ErrorCode::EmptyInput);
    CHECK(error_code([&] { balanced_accuracy(empty); }) == ErrorCode::EmptyInput);
    CHECK(error_code([&] { cm.add(2, 0); }) == ErrorCode::OutOfBounds);
    CHECK(error_code([&] { cm.add(0, -1); }) == ErrorCode::OutOfBounds);
    CHECK(error_code([] { ConfusionMatrix({}); }) == ErrorCode::InvalidArgument);
    CHECK(format_metric(0.625) == "0.62");
    CHECK(format_metric(0.6251) == "0.63");
    CHECK(format_metric(std::nullopt) == "/");
}

TEST_CASE("metrics match a brute-force oracle on random matrices") {
    Rng rng(17);
    for (int i = 0; i < 500; ++i) {
        const int k = 2 + static_cast<int>(rng.below(7));
        const auto cm = random_matrix(rng, k, i % 3 == 0);
        const auto [acc, ba] = brute_force_metrics(cm);
        CHECK(accuracy(cm) == acc);
        CHECK(balanced_accuracy(cm) == ba);
    }
}

TEST_CASE("balanced accuracy equals accuracy when every class has the same support") {
    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
        const int k = 2 + static_cast<int>(rng.below(6));
        const long long per_row = 1 + static_cast<long long>(rng.below(20));
        std::vector<std::string> names(static_cast<std::size_t>(k), "x");
        ConfusionMatrix cm(names);
        for (int g = 0; g < k; ++g) {
            long long left = per_row;
            for (int p = 0; p + 1 < k && left > 0; ++p) {
                const auto n = static_cast<long long>(rng.below(static_cast<std::size_t>(left + 1)));
                cm.add(g, p, n);
                left -= n;
            }
            cm.add(g, k - 1, left);
        }
        CHECK(std::abs(balanced_accuracy(cm) - accuracy(cm)) < 1e-12);
    }
}

TEST_CASE("rule-based extraction reproduces the curated corpus") {
    const auto corpus = load_corpus();
    int labeled = 0, blank = 0;
    for (const auto& e : corpus) {
        CAPTURE(e.text);
        const auto r = extract_labels(e.text);
        CHECK(r.method == ExtractionMethod::RuleBased);
        CHECK(r.raw_text == e.text);
        CHECK(r.severity == e.severity);
        CHECK(r.foul_type == e.foul);
        if (r.severity) CHECK(e.text.find(r.matched_evidence) != std::string::npos);
        if (r.foul_type) CHECK(e.text.find(r.foul_evidence) != std::string::npos);
        (e.severity ? labeled : blank) += 1;
    }
    CHECK(labeled >= 30);
    CHECK(blank >= 10);

    const auto r = extract_labels("This is a clear red card, serious foul play.");
    CHECK(r.matched_evidence == "red card");
    CHECK(extract_labels("NO FOUL.").severity == Severity::NoOffence);
    CHECK(error_code([] { extract_labels("  \n"); }) == ErrorCode::EmptyInput);
}

TEST_CASE("rule-based extraction is pure and trailing unrelated text keeps matches") {
    const auto corpus = load_corpus();
    std::vector<std::string> unrelated;
    for (const auto& e : corpus) {
        if (!e.severity && !e.foul) unrelated.push_back(e.text);
    }
    for (const auto& e : corpus) {
        const auto a = extract_labels(e.text);
        const auto b = extract_labels(e.text);
        CHECK(a.severity == b.severity);
        CHECK(a.matched_evidence == b.matched_evidence);
        if (!a.severity && !a.foul_type) continue;
        for (const auto& tail : unrelated) {
            const auto extended = extract_labels(e.text + " " + tail);
            CHECK(extended.severity == a.severity);
            CHECK(extended.foul_type == a.foul_type);
        }
    }
}

TEST_CASE("external extractor speaks the label protocol") {
    auto client = std::make_shared<FakeClient>();
    client->replies = {{"severity", "label: Offence + Yellow card\n"}, {"foul_type", "label: none"}};
    const ExternalExtractor ext(client);
    const auto r = ext.extract("Booking.\nFor the shirt pull.");
    CHECK(r.method == ExtractionMethod::External);
    CHECK(r.severity == Severity::OffenceYellowCard);
    CHECK_FALSE(r.foul_type.has_value());
    REQUIRE(client->requests.size() == 2);
    CHECK(client->requests[0] == "field: severity\ntext: Booking. For the shirt pull.\n");
    CHECK(client->requests[1] == "field: foul_type\ntext: Booking. For the shirt pull.\n");

    client->replies["severity"] = "Offence + Yellow card";
    CHECK(error_code([&] { ext.extract("x"); }) == ErrorCode::DecodeFailure);
    client->replies["severity"] = "label: Orange card";
    CHECK(error_code([&] { ext.extract("x"); }) == ErrorCode::DecodeFailure);
    client->replies["severity"] = "label: No offence\nlabel: Offence + Red card";
    CHECK(error_code([&] { ext.extract("x"); }) == ErrorCode::DecodeFailure);
    client->down = true;
    CHECK(error_code([&] { ext.extract("x"); }) == ErrorCode::Transport);

    CHECK(parse_external_response("label: none") == std::nullopt);
    CHECK(parse_external_response("label: High leg\r\n") == std::optional<std::string>("High leg"));
}

TEST_CASE("classifier scoring: perfect, constant and failing predictors") {
    std::vector<ClassifierOutcome> perfect, constant;
    for (int i = 0; i < 40; ++i) {
        const auto f = foul_type_from_index(i % kFoulTypeCount);
        const auto s = severity_from_index(i % kSeverityCount);
        perfect.push_back({"c" + std::to_string(i), f, s, f, s, {}});
        constant.push_back({"c" + std::to_string(i), f, s, FoulType::Tackling, Severity::NoOffence, {}});
    }
    const auto p = score_classifier(perfect);
    CHECK(p.foul.accuracy == 1.0);
    CHECK(p.foul.balanced_accuracy == 1.0);
    CHECK(p.severity.accuracy == 1.0);
    CHECK(p.severity.balanced_accuracy == 1.0);

    const auto c = score_classifier(constant);
    CHECK(c.severity.accuracy == 0.25);
    CHECK(c.severity.balanced_accuracy == 0.25);
    CHECK(c.foul.accuracy == 0.125);
    CHECK(c.foul.balanced_accuracy == 0.125);

    constant[0].error = "boom";
    constant[1].predicted_severity.reset();
    const auto e = score_classifier(constant);
    CHECK(e.severity.n_attempted == 40);
    CHECK(e.severity.n_evaluated == 38);
    CHECK(e.severity.n_inference_errors == 2);
    CHECK(e.severity.n_evaluated + e.severity.n_extraction_failures + e.severity.n_inference_errors ==
          e.severity.n_attempted);
}

TEST_CASE("generative scoring keeps extraction failures out of the denominator") {
    std::vector<GenerationOutcome> all_no_foul;
    for (int i = 0; i < 12; ++i) all_no_foul.push_back(outcome("c" + std::to_string(i), Severity::NoOffence, "No foul."));
    const auto ok = score_generative(all_no_foul);
    CHECK(ok.severity.accuracy == 1.0);
    CHECK(ok.severity.n_extraction_failures == 0);
    CHECK(ok.severity.n_evaluated == 12);

    std::vector<GenerationOutcome> garbage;
    for (int i = 0; i < 7; ++i) garbage.push_back(outcome("g" + std::to_string(i), Severity::OffenceRedCard, "blah"));
    const auto bad = score_generative(garbage);
    CHECK(bad.severity.n_extraction_failures == 7);
    CHECK(bad.severity.n_evaluated == 0);
    CHECK_FALSE(bad.severity.accuracy.has_value());
    CHECK(format_metric(bad.severity.accuracy) == "/");

    auto mixed = all_no_foul;
    mixed.push_back(outcome("x", Severity::OffenceRedCard, "Yellow card. He pushed the attacker."));
    mixed.push_back(outcome("y", Severity::OffenceRedCard, "The players simply collided."));
    GenerationOutcome failed;
    failed.clip_id = "z";
    failed.error = "context overflow";
    mixed.push_back(failed);
    const auto m = score_generative(mixed);
    CHECK(m.severity.n_attempted == 15);
    CHECK(m.severity.n_evaluated == 13);
    CHECK(m.severity.n_extraction_failures == 1);
    CHECK(m.severity.n_inference_errors == 1);
    CHECK(*m.severity.accuracy == doctest::Approx(12.0 / 13.0));
    CHECK(m.foul_type_extracted == 1);
}

TEST_CASE("agreement rate against injected predictions") {
    std::vector<ExtractedAnswer> answers;
    std::vector<InjectedPrediction> injected;
    for (int i = 0; i < 10; ++i) {
        const auto s = severity_from_index(i % 4);
        answers.push_back({"c" + std::to_string(i), s, "t"});
        injected.push_back({"c" + std::to_string(9 - i), severity_from_index((9 - i) % 4)});
    }
    const auto same = agreement_rate(answers, injected);
    CHECK(same.rate == 1.0);
    CHECK(same.n_compared == 10);

    for (auto& p : injected) p.severity = severity_from_index((index_of(p.severity) + 1) % 4);
    const auto none = agreement_rate(answers, injected);
    CHECK(none.rate == 0.0);
    CHECK(none.disagreements.size() == 10);

    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ExtractedAnswer> a;
        std::vector<InjectedPrediction> p;
        long long agree = 0, compared = 0;
        const int n = 1 + static_cast<int>(rng.below(40));
        for (int i = 0; i < n; ++i) {
            const auto id = "k" + std::to_string(i);
            const auto inj = severity_from_index(static_cast<int>(rng.below(4)));
            std::optional<Severity> ext;
            if (rng.below(5) != 0) ext = severity_from_index(static_cast<int>(rng.below(4)));
            a.push_back({id, ext, "t"});
            p.push_back({id, inj});
            if (ext) {
                ++compared;
                agree += *ext == inj;
            }
        }
        const auto r = agreement_rate(a, p);
        CHECK(r.n_total == n);
        CHECK(r.n_compared == compared);
        CHECK(r.n_agree == agree);
        CHECK(r.n_unextractable == n - compared);
        if (compared > 0) {
            CHECK(*r.rate == static_cast<double>(agree) / static_cast<double>(compared));
            const double scaled = *r.rate * static_cast<double>(compared);
            CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
        } else {
            CHECK_FALSE(r.rate.has_value());
        }
    }

    injected.pop_back();
    CHECK(error_code([&] { agreement_rate(answers, injected); }) == ErrorCode::AlignmentMismatch);
    injected.push_back({"other", Severity::NoOffence});
    CHECK(error_code([&] { agreement_rate(answers, injected); }) == ErrorCode::AlignmentMismatch);
    injected.back().clip_id = injected.front().clip_id;
    CHECK(error_code([&] { agreement_rate(answers, injected); }) == ErrorCode::AlignmentMismatch);
}

TEST_CASE("study assignment gives each rater distinct clips deterministically") {
    std::vector<StudyItem> items;
    for (int c = 0; c < 20; ++c) {
        items.push_back({"clip" + std::to_string(c), "Referee says " + std::to_string(c), Source::Human});
        items.push_back({"clip" + std::to_string(c), "Model says " + std::to_string(c), Source::Model});
    }
    const std::vector<std::string> raters = {"r1", "r2"};
    const auto sessions = create_study(items, raters, 20, 3);
    REQUIRE(sessions.size() == 2);
    std::vector<int> usage(items.size(), 0);
    for (const auto& s : sessions) {
        CHECK(s.items.size() == 20);
        std::set<std::string> clips;
        for (std::size_t k = 0; k < s.items.size(); ++k) {
            CHECK(s.items[k].item_index == static_cast<int>(k));
            clips.insert(s.items[k].clip_id);
            ++usage[s.items[k].pool_index];
        }
        CHECK(clips.size() == 20);
    }
    // Two raters over 40 items: every item used exactly once.
    for (const auto u : usage) CHECK(u == 1);

    const auto again = create_study(items, raters, 20, 3);
    for (std::size_t r = 0; r < 2; ++r) CHECK(session_to_json(again[r]) == session_to_json(sessions[r]));
    CHECK(session_to_json(create_study(items, raters, 20, 4)[0]) != session_to_json(sessions[0]));

    for (const auto& s : sessions) {
        const auto view = rater_view(s);
        const auto text = view.dump();
        CHECK(text.find("source") == std::string::npos);
        CHECK(text.find("\"human\"") == std::string::npos);
        CHECK(text.find("\"model\"") == std::string::npos);
        for (const auto& item : view["items"]) {
            CHECK(item.size() == 3);
            CHECK(item.contains("item_index"));
            CHECK(item.contains("clip_url"));
            CHECK(item.contains("explanation"));
        }
        CHECK(session_from_json(session_to_json(s)).items.size() == s.items.size());
    }

    CHECK(error_code([&] { create_study(items, raters, 21, 3); }) == ErrorCode::InsufficientItems);
    CHECK(error_code([&] { create_study(items, {"a", "a"}, 5, 3); }) == ErrorCode::InvalidArgument);
    CHECK(error_code([&] { create_study(items, {}, 5, 3); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("study summary matches a counting oracle for simulated raters") {
    std::vector<StudyItem> items;
    for (int c = 0; c < 20; ++c) {
        items.push_back({"clip" + std::to_string(c), "human " + std::to_string(c), Source::Human});
        items.push_back({"clip" + std::to_string(c), "model " + std::to_string(c), Source::Model});
    }
    std::vector<std::string> raters;
    for (int r = 0; r < 20; ++r) raters.push_back("rater" + std::to_string(r));
    const auto sessions = create_study(items, raters, 20, 9);

    Rng rng(31);
    std::vector<RatingRecord> records;
    std::array<std::array<long long, 5>, 2> counts{};
    std::array<long long, 2> sums{};
    std::map<std::string, std::array<std::pair<long long, long long>, 2>> clip_scores;
    for (const auto& s : sessions) {
        for (const auto& it : s.items) {
            // Known generator: models skew lower by one point a third of the time.
            int score = 1 + static_cast<int>(rng.below(5));
            if (it.source == Source::Model && rng.below(3) == 0) score = std::max(1, score - 1);
            records.push_back({s.rater_id, it.item_index, score, "t"});
            const auto src = static_cast<std::size_t>(it.source);
            ++counts[src][static_cast<std::size_t>(score - 1)];
            sums[src] += score;
            clip_scores[it.clip_id][src].first += score;
            ++clip_scores[it.clip_id][src].second;
        }
    }
    const auto report = study_summary(records, sessions);
    long long pairs = 0, model_higher = 0;
    for (const auto& [clip, cells] : clip_scores) {
        if (!cells[0].second || !cells[1].second) continue;
        ++pairs;
        const double h = static_cast<double>(cells[0].first) / static_cast<double>(cells[0].second);
        const double m = static_cast<double>(cells[1].first) / static_cast<double>(cells[1].second);
        model_higher += m > h;
    }
    for (std::size_t s = 0; s < 2; ++s) {
        const auto& summary = report.sources[s];
        long long n = 0;
        for (const auto c : counts[s]) n += c;
        CHECK(summary.n == n);
        CHECK(summary.counts == counts[s]);
        CHECK(*summary.mean == static_cast<double>(sums[s]) / static_cast<double>(n));
        int total = 0;
        for (std::size_t k = 0; k < 5; ++k) {
            total += summary.percent[k];
            const double exact = 100.0 * static_cast<double>(counts[s][k]) / static_cast<double>(n);
            CHECK(std::abs(summary.percent[k] - exact) < 1.0);
        }
        CHECK(total == 100);
    }
    CHECK(report.sources[0].n + report.sources[1].n == 400);
    CHECK(report.paired.n_pairs == pairs);
    CHECK(report.paired.n_model_higher == model_higher);

    std::vector<RatingRecord> fives;
    for (const auto& s : sessions) {
        for (const auto& it : s.items) {
            if (it.source == Source::Human) fives.push_back({s.rater_id, it.item_index, 5, "t"});
        }
    }
    const auto all5 = study_summary(fives, sessions);
    CHECK(all5.sources[0].mean == 5.0);
    CHECK(all5.sources[0].percent == std::array<int, 5>{0, 0, 0, 0, 100});
    CHECK_FALSE(all5.sources[1].mean.has_value());
    CHECK_FALSE(all5.paired.fraction.has_value());

    auto orphan = records;
    orphan.push_back({"nobody", 0, 3, "t"});
    CHECK(error_code([&] { study_summary(orphan, sessions); }) == ErrorCode::OrphanRecord);
    orphan.back() = {"rater0", 20, 3, "t"};
    CHECK(error_code([&] { study_summary(orphan, sessions); }) == ErrorCode::OrphanRecord);
    auto dup = records;
    dup.push_back(records.front());
    CHECK(error_code([&] { study_summary(dup, sessions); }) == ErrorCode::DuplicateRecord);
    auto bad = records;
    bad.front().score = 6;
    CHECK(error_code([&] { study_summary(bad, sessions); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("largest-remainder percentages sum to 100") {
    CHECK(largest_remainder_percentages({1, 1, 1, 0, 0}) == std::array<int, 5>{34, 33, 33, 0, 0});
    CHECK(largest_remainder_percentages({0, 0, 0, 0, 0}) == std::array<int, 5>{0, 0, 0, 0, 0});
    CHECK(largest_remainder_percentages({3, 10, 8, 46, 33}) == std::array<int, 5>{3, 10, 8, 46, 33});
    Rng rng(2);
    for (int i = 0; i < 300; ++i) {
        std::array<long long, 5> c{};
        for (auto& v : c) v = static_cast<long long>(rng.below(50));
        if (c[0] + c[1] + c[2] + c[3] + c[4] == 0) continue;
        const auto p = largest_remainder_percentages(c);
        CHECK(p[0] + p[1] + p[2] + p[3] + p[4] == 100);
    }
}

TEST_CASE("rating log appends and reloads") {
    const auto dir = scratch_dir("ratings");
    const RatingLog log(dir / "ratings.csv");
    CHECK(log.load().empty());
    log.append({"r1", 0, 4, "2026-01-01T10:00:00Z"});
    log.append({"r,2", 3, 1, "2026-01-01T10:00:05Z"});
    const auto back = log.load();
    REQUIRE(back.size() == 2);
    CHECK(back[1].rater_id == "r,2");
    CHECK(back[1].item_index == 3);
    CHECK(back[1].score == 1);
    std::ifstream in(dir / "ratings.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 3);
}

TEST_CASE("report tables match their golden layouts") {
    const std::vector<ClassificationRow> rows = {
        {"CLIP-L/14", "Single-view", 0.51, 0.39, 0.52, 0.35},
        {"X-VARS", "Single-view", std::nullopt, std::nullopt, 0.62, 0.35},
    };
    CHECK(render_classification_table(rows) == read_text("golden/classification_table.txt"));
    CHECK(classification_tsv(rows) ==
          "feature_extractor\tpooling\tfoul_acc\tfoul_ba\tseverity_acc\tseverity_ba\n"
          "CLIP-L/14\tSingle-view\t0.51\t0.39\t0.52\t0.35\n"
          "X-VARS\tSingle-view\t/\t/\t0.62\t0.35\n");

    const std::vector<StudyRow> study = {
        {"Referees", 4.0, {3, 10, 8, 46, 33}},
        {"X-VARS", 3.8, {3, 17, 4, 46, 30}},
    };
    CHECK(render_study_table(study) == read_text("golden/study_table.txt"));
    CHECK(study_tsv(study) ==
          "source\tmean\tpct_1\tpct_2\tpct_3\tpct_4\tpct_5\nReferees\t4.0\t3\t10\t8\t46\t33\n"
          "X-VARS\t3.8\t3\t17\t4\t46\t30\n");
}

TEST_CASE("model-driven evaluation records injected predictions") {
    data::SyntheticConfig sc;
    sc.clips_per_combination = 1;
    const auto ds = data::generate_synthetic(sc, scratch_dir("eval_model"));
    train::Stage1Config s1cfg;
    s1cfg.frames_per_clip = 2;
    s1cfg.seed = 4;
    const auto s1 = train::initialize_stage1(s1cfg);

    const XVarsModel classifier(s1.encoder, s1.heads);
    const auto ce = evaluate_classifier(classifier, ds, data::Split::Test, 2);
    CHECK(ce.severity.n_attempted == static_cast<long long>(ds.clips_in(data::Split::Test).size()));
    CHECK(ce.severity.n_evaluated == ce.severity.n_attempted);
    CHECK(*ce.severity.accuracy >= 0.0);
    CHECK(*ce.severity.accuracy <= 1.0);

    train::Stage2Config s2cfg;
    s2cfg.epochs = 1;
    s2cfg.language_model.width = 16;
    s2cfg.language_model.mlp_hidden = 32;
    const auto samples = train::build_stage2_samples(ds, data::Split::Train, *s1.encoder, 2);
    const auto s2 = train::train_stage2(samples, *s1.encoder, *s1.heads, s2cfg);
    const XVarsModel full(s1.encoder, s1.heads, s2.projection, s2.language_model, s2.tokenizer);
    InferenceOptions opts;
    opts.max_new_tokens = 6;
    const auto ge = evaluate_generative(full, ds, data::Split::Test, data::kCardQuestion, 2, RuleBasedExtractor(), opts);
    REQUIRE(ge.outcomes.size() == ds.clips_in(data::Split::Test).size());
    for (const auto& o : ge.outcomes) {
        const auto pred = full.classify_clip(data::sample_frames(ds, ds.clip(o.clip_id), 2));
        CHECK(o.injected_foul == pred.predicted_foul);
        CHECK(o.injected_severity == pred.predicted_severity);
    }
    const auto& r = ge.severity;
    CHECK(r.n_evaluated + r.n_extraction_failures + r.n_inference_errors == r.n_attempted);
    const auto agreement = agreement_rate(ge);
    CHECK(agreement.n_total == r.n_attempted - r.n_inference_errors);
}
