#include "xvars/dataset/stats.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "xvars/common/error.hpp"
#include "xvars/common/ini.hpp"

namespace xvars::data {

std::vector<std::pair<std::string, long long>> CorpusStats::top_words(std::size_t k) const {
    const auto n = std::min(k, word_frequency.size());
    return {word_frequency.begin(), word_frequency.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<std::string> answer_words(const std::string& answer) {
    std::vector<std::string> out;
    std::istringstream in(answer);
    std::string piece;
    while (in >> piece) {
        std::size_t b = 0, e = piece.size();
        while (b < e && std::ispunct(static_cast<unsigned char>(piece[b]))) ++b;
        while (e > b && std::ispunct(static_cast<unsigned char>(piece[e - 1]))) --e;
        if (b == e) continue;
        std::string word = piece.substr(b, e - b);
        for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(std::move(word));
    }
    return out;
}

double answers_per_action(const std::vector<VqaTriplet>& triplets) {
    if (triplets.empty()) {
        fail(ErrorCode::EmptyInput, "answers_per_action: no triplets");
    }
    std::set<std::pair<std::string, std::string>> actions;
    for (const auto& t : triplets) actions.emplace(t.clip_id, t.question);
    return static_cast<double>(triplets.size()) / static_cast<double>(actions.size());
}

CorpusStats corpus_statistics(const std::vector<VqaTriplet>& triplets) {
    if (triplets.empty()) {
        fail(ErrorCode::EmptyInput, "corpus_statistics: no triplets");
    }
    CorpusStats s;
    std::map<std::string, long long> counts;
    s.min_words = -1;
    for (const auto& t : triplets) {
        const auto words = answer_words(t.answer);
        const auto n = static_cast<long long>(words.size());
        s.total_words += n;
        s.min_words = s.min_words < 0 ? n : std::min(s.min_words, n);
        s.max_words = std::max(s.max_words, n);
        for (const auto& w : words) ++counts[w];
    }
    s.total_answers = static_cast<long long>(triplets.size());
    s.mean_words_per_answer = static_cast<double>(s.total_words) / static_cast<double>(s.total_answers);
    s.word_frequency.assign(counts.begin(), counts.end());
    std::stable_sort(s.word_frequency.begin(), s.word_frequency.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    s.answers_per_action = answers_per_action(triplets);
    return s;
}

std::string format_stats_table(const CorpusStats& stats, std::size_t top_k) {
    std::ostringstream out;
    out << "# total_answers\t" << stats.total_answers << '\n';
    out << "# total_words\t" << stats.total_words << '\n';
    out << "# mean_words_per_answer\t" << format_double(stats.mean_words_per_answer) << '\n';
    out << "# min_words\t" << stats.min_words << '\n';
    out << "# max_words\t" << stats.max_words << '\n';
    out << "# answers_per_action\t" << format_double(stats.answers_per_action) << '\n';
    out << "rank\tword\tcount\n";
    std::size_t rank = 1;
    for (const auto& [word, count] : stats.top_words(top_k)) {
        out << rank++ << '\t' << word << '\t' << count << '\n';
    }
    return out.str();
}

void export_stats(const std::filesystem::path& path, const CorpusStats& stats, std::size_t top_k) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot write " + path.string());
    }
    out << format_stats_table(stats, top_k);
}

}  // namespace xvars::data
