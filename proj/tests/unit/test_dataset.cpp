#include "doctest.h"

#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <set>

#include "xvars/common/error.hpp"
#include "xvars/dataset/manifest.hpp"
#include "xvars/dataset/media.hpp"
#include "xvars/dataset/sampling.hpp"
#include "xvars/dataset/split.hpp"
#include "xvars/dataset/stats.hpp"
#include "xvars/dataset/synthetic.hpp"
#include "test_support.hpp"

using namespace xvars;
using namespace xvars::data;
using xvars::testing::error_code;
using xvars::testing::scratch_dir;

namespace {

const char* kHeader = "clip_id,media,foul_frame,foul_type,severity,split,question,answer,annotator_id\n";

// Media whose frame t is filled with the byte value t, so window contents can
// be read back as frame indices.
MediaFrames counting_media(int frames) {
    MediaFrames m;
    m.frames = frames;
    m.height = 2;
    m.width = 2;
    m.pixels.resize(static_cast<std::size_t>(frames) * 12);
    for (int t = 0; t < frames; ++t)
        for (int k = 0; k < 12; ++k) m.pixels[static_cast<std::size_t>(t) * 12 + k] = static_cast<std::uint8_t>(t);
    return m;
}

std::vector<int> frames_of(const VideoClip& clip) {
    std::vector<int> out;
    for (int t = 0; t < clip.frames(); ++t) out.push_back(static_cast<int>(std::lround(clip.at(t, 0, 0, 0) * 255)));
    return out;
}

VqaTriplet triplet(const std::string& clip, const std::string& answer, const std::string& q = "Why?",
                   const std::string& who = "a") {
    return {clip, q, answer, who, std::nullopt, std::nullopt};
}

// Independent counting oracle: a second, single-pass implementation.
std::map<std::string, long long> oracle_counts(const std::vector<VqaTriplet>& ts, long long& total) {
    std::map<std::string, long long> counts;
    total = 0;
    for (const auto& t : ts) {
        std::string word;
        auto flush = [&] {
            std::size_t b = 0, e = word.size();
            while (b < e && std::ispunct(static_cast<unsigned char>(word[b]))) ++b;
            while (e > b && std::ispunct(static_cast<unsigned char>(word[e - 1]))) --e;
            if (e > b) {
                std::string w;
                for (std::size_t i = b; i < e; ++i) w += static_cast<char>(std::tolower(static_cast<unsigned char>(word[i])));
                ++counts[w];
                ++total;
            }
            word.clear();
        };
        for (char c : t.answer + " ") {
            if (std::isspace(static_cast<unsigned char>(c))) flush();
            else word += c;
        }
    }
    return counts;
}

}  // namespace

TEST_CASE("three-row manifest gives three triplets over two clips") {
    const std::string text = std::string(kHeader) +
                             "c1,media/c1.xvc,5,Holding,Offence + Yellow card,train,What card would you give? "
                             "Why?,\"Yellow card, he held him.\",r1\n"
                             "c1,,,,,,Is it a foul or not? Why?,It is a foul.,r1\n"
                             "c2,media/c2.xvc,3,,,test,Why?,\"He said \"\"no\"\".\",r2\n";
    const auto ds = parse_manifest(text, "toy.csv", "/data");
    CHECK(ds.triplets().size() == 3);
    CHECK(ds.clips().size() == 2);
    const auto& c1 = ds.clip("c1");
    CHECK(c1.foul_frame_index == 5);
    CHECK(c1.gt_foul == FoulType::Holding);
    CHECK(c1.gt_severity == Severity::OffenceYellowCard);
    CHECK(ds.clip("c2").split == Split::Test);
    CHECK_FALSE(ds.clip("c2").gt_foul.has_value());
    CHECK(ds.triplets()[2].answer == "He said \"no\".");
    CHECK(ds.media_path(c1) == std::filesystem::path("/data/media/c1.xvc"));

    const auto again = parse_manifest(format_manifest(ds), "again.csv", "/data");
    CHECK(again.triplets().size() == 3);
    CHECK(again.clips().size() == 2);
    CHECK(again.triplets()[0].answer == ds.triplets()[0].answer);
}

TEST_CASE("manifest errors name the offending line") {
    const std::string empty_answer = std::string(kHeader) + "c1,m.xvc,1,,,train,Why?,ok,r1\nc1,,,,,,Again?,,r1\n";
    try {
        parse_manifest(empty_answer, "bad.csv");
        FAIL("expected schema error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Schema);
        CHECK(std::string(e.what()).find("bad.csv:3") != std::string::npos);
        CHECK(std::string(e.what()).find("empty answer") != std::string::npos);
    }
    CHECK(error_code([&] { parse_manifest(std::string(kHeader) + "c9,,,,,,Why?,ok,r1\n"); }) ==
          ErrorCode::DanglingReference);
    CHECK(error_code([&] {
              parse_manifest(std::string(kHeader) + "c1,m.xvc,1,,,train,Why?,ok,r1\nc1,,,,,,Why?,again,r1\n");
          }) == ErrorCode::DuplicateRecord);
    CHECK(error_code([&] {
              parse_manifest(std::string(kHeader) + "c1,m.xvc,1,,,train,Why?,ok,r1\nc1,m2.xvc,1,,,train,,,\n");
          }) == ErrorCode::DuplicateRecord);
    CHECK(error_code([&] { parse_manifest(std::string(kHeader) + "c1,m.xvc,1,Kicking,,train,Why?,ok,r1\n"); }) ==
          ErrorCode::InvalidLabel);
    CHECK(error_code([&] { parse_manifest(std::string(kHeader) + "c1,m.xvc,x,,,train,Why?,ok,r1\n"); }) ==
          ErrorCode::Schema);
    CHECK(error_code([&] { parse_manifest(std::string(kHeader) + "c1,m.xvc,1,,,valid,Why?,ok,r1\n"); }) ==
          ErrorCode::Schema);
    CHECK(error_code([&] { parse_manifest("clip_id,media\nc1,m\n"); }) == ErrorCode::Schema);
    CHECK(error_code([&] { parse_manifest(std::string(kHeader) + "c1,m.xvc,1,,,train,Why?,ok\n"); }) ==
          ErrorCode::Schema);
    CHECK(error_code([&] { load_dataset("/nonexistent/manifest.csv"); }) == ErrorCode::MissingFile);
}

TEST_CASE("same question from two annotators is allowed; clip-only rows define clips") {
    const std::string text = std::string(kHeader) + "c1,m.xvc,1,,,train,Why?,ok,r1\nc1,,,,,,Why?,fine,r2\n" +
                             "c2,m2.xvc,0,,,test,,,\n";
    const auto ds = parse_manifest(text);
    CHECK(ds.triplets().size() == 2);
    CHECK(ds.clips().size() == 2);
}

TEST_CASE("frame window arithmetic and edge padding") {
    CHECK(frame_window(25, 16, 50) == std::vector<int>{17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32});
    CHECK(frame_window(3, 16, 50) == std::vector<int>{0, 0, 0, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    CHECK(frame_window(10, 2, 50) == std::vector<int>{9, 10});
    CHECK(frame_window(48, 6, 50) == std::vector<int>{45, 46, 47, 48, 49, 49});
    CHECK(frame_window(0, 4, 1) == std::vector<int>{0, 0, 0, 0});
    CHECK(error_code([] { frame_window(50, 16, 50); }) == ErrorCode::OutOfBounds);
    CHECK(error_code([] { frame_window(-1, 16, 50); }) == ErrorCode::OutOfBounds);

    const auto media = counting_media(50);
    const auto clip = sample_frames(media, "c", 3, 16);
    CHECK(frames_of(clip) == frame_window(3, 16, 50));
    CHECK(clip.foul_frame_index() == 8);
    for (int n : {1, 2, 3, 7, 16, 60}) {
        for (int foul : {0, 10, 49}) CHECK(sample_frames(media, "c", foul, n).frames() == n);
    }
}

TEST_CASE("xvc and ppm media round trip and malformed media is rejected") {
    const auto dir = scratch_dir("media");
    const auto media = counting_media(5);
    write_xvc(dir / "a.xvc", media);
    write_ppm_directory(dir / "frames", media);
    FileMediaReader reader;
    for (const auto& path : {dir / "a.xvc", dir / "frames"}) {
        const auto back = reader.read(path);
        CHECK(back.frames == 5);
        CHECK(back.height == 2);
        CHECK(back.pixels == media.pixels);
    }
    {
        std::ofstream out(dir / "broken.xvc", std::ios::binary);
        out << "XVC1garbage";
    }
    CHECK(error_code([&] { reader.read(dir / "broken.xvc"); }) == ErrorCode::UnreadableMedia);
    CHECK(error_code([&] { reader.read(dir / "missing.xvc"); }) == ErrorCode::UnreadableMedia);
    {
        std::ofstream out(dir / "clip.mp4", std::ios::binary);
        out << "....";
    }
    CHECK(error_code([&] { reader.read(dir / "clip.mp4"); }) == ErrorCode::UnreadableMedia);
}

TEST_CASE("split is a deterministic clip-level partition") {
    std::vector<ClipRecord> clips;
    for (int i = 0; i < 10; ++i) clips.push_back({"c" + std::to_string(i), "m", 0, {}, {}, Split::Train});
    const auto a = split_dataset(clips, 0.8, 42);
    const auto b = split_dataset(clips, 0.8, 42);
    CHECK(a.train.size() == 8);
    CHECK(a.test.size() == 2);
    CHECK(a.train == b.train);
    std::set<std::string> all(a.train.begin(), a.train.end());
    for (const auto& id : a.test) CHECK(all.insert(id).second);
    CHECK(all.size() == 10);
    auto reversed = clips;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(split_dataset(reversed, 0.8, 42).train == a.train);

    CHECK(error_code([&] { split_dataset(clips, 0.99, 1); }) == ErrorCode::DegenerateSplit);
    CHECK(error_code([&] { split_dataset(clips, 1.0, 1); }) == ErrorCode::InvalidArgument);

    std::vector<VqaTriplet> ts{triplet("c0", "x", "q1"), triplet("c0", "y", "q2"), triplet("c0", "z", "q3")};
    for (int i = 1; i < 10; ++i) ts.push_back(triplet("c" + std::to_string(i), "w"));
    Dataset ds(clips, ts);
    apply_split(ds, a);
    const auto split_of_c0 = ds.clip("c0").split;
    int same = 0;
    for (const auto* t : ds.triplets_in(split_of_c0)) same += t->clip_id == "c0";
    CHECK(same == 3);
    CHECK(ds.clips_in(Split::Train).size() + ds.clips_in(Split::Test).size() == 10);
}

TEST_CASE("corpus statistics on hand-counted and random corpora") {
    const auto s = corpus_statistics({triplet("c", "a b"), triplet("c", "a", "Other?")});
    CHECK(s.total_words == 3);
    CHECK(s.mean_words_per_answer == 1.5);
    CHECK(s.word_frequency.front() == std::pair<std::string, long long>{"a", 2});
    CHECK(s.min_words == 1);
    CHECK(s.max_words == 2);
    CHECK(s.answers_per_action == 1.0);

    CHECK(answer_words("\"Yellow card!\" -- he (clearly) fouled.") ==
          std::vector<std::string>{"yellow", "card", "he", "clearly", "fouled"});
    CHECK_THROWS_AS(corpus_statistics({}), Error);

    Rng rng(5);
    const std::vector<std::string> vocab = {"Card", "card.", "foul", "(tackle)", "no", "Red", "--", "it's"};
    std::vector<VqaTriplet> ts;
    for (int i = 0; i < 200; ++i) {
        std::string answer;
        const auto n = 1 + rng.below(12);
        for (std::size_t k = 0; k < n; ++k) answer += vocab[rng.below(vocab.size())] + (rng.below(3) ? " " : "  ");
        ts.push_back(triplet("c" + std::to_string(i % 40), answer, "q" + std::to_string(i % 3),
                             "a" + std::to_string(i)));
    }
    long long total = 0;
    const auto counts = oracle_counts(ts, total);
    const auto stats = corpus_statistics(ts);
    CHECK(stats.total_words == total);
    CHECK(stats.word_frequency.size() == counts.size());
    for (const auto& [w, c] : stats.word_frequency) CHECK(counts.at(w) == c);
    CHECK(stats.min_words <= stats.mean_words_per_answer);
    CHECK(stats.mean_words_per_answer <= stats.max_words);
    CHECK(stats.answers_per_action == doctest::Approx(200.0 / 120.0));

    auto shuffled = ts;
    rng.shuffle(shuffled);
    const auto again = corpus_statistics(shuffled);
    CHECK(again.word_frequency == stats.word_frequency);
    CHECK(again.mean_words_per_answer == stats.mean_words_per_answer);
    CHECK(format_stats_table(stats, 3).find("rank\tword\tcount\n1\t") != std::string::npos);
}

TEST_CASE("synthetic dataset is balanced, labelled and readable") {
    const auto dir = scratch_dir("synthetic");
    SyntheticConfig cfg;
    cfg.clips_per_combination = 1;
    const auto ds = generate_synthetic(cfg, dir);
    CHECK(ds.clips().size() == 32);
    std::map<std::pair<int, int>, int> combos;
    for (const auto& c : ds.clips()) {
        REQUIRE(c.gt_foul.has_value());
        REQUIRE(c.gt_severity.has_value());
        ++combos[{index_of(*c.gt_foul), index_of(*c.gt_severity)}];
        const auto clip = sample_frames(ds, c, 4);
        CHECK(clip.frames() == 4);
        CHECK(clip.height() == 28);
    }
    CHECK(combos.size() == 32);
    CHECK(!ds.clips_in(Split::Train).empty());
    CHECK(!ds.clips_in(Split::Test).empty());
    CHECK(ds.triplets().size() >= 64);
    CHECK(synthetic_answer(FoulType::Holding, Severity::OffenceYellowCard, true, 0) ==
          "Yellow card. He held the shirt of the attacker.");
    CHECK(synthetic_answer(FoulType::Dive, Severity::NoOffence, false, 1) ==
          "No foul. It was simulation by the attacker.");

    // Same seed, same bytes.
    const auto dir2 = scratch_dir("synthetic2");
    generate_synthetic(cfg, dir2);
    std::ifstream a(dir / "manifest.csv"), b(dir2 / "manifest.csv");
    std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
}
