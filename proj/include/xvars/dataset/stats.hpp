#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "xvars/dataset/records.hpp"

namespace xvars::data {

struct CorpusStats {
    long long total_answers = 0;
    long long total_words = 0;
    double mean_words_per_answer = 0.0;
    long long min_words = 0;
    long long max_words = 0;
    /// Sorted by count descending, then word ascending.
    std::vector<std::pair<std::string, long long>> word_frequency;
    /// Mean number of answers per (clip, question) pair.
    double answers_per_action = 0.0;

    std::vector<std::pair<std::string, long long>> top_words(std::size_t k) const;
};

/// Lowercases, splits on whitespace and strips leading/trailing ASCII
/// punctuation; pieces that are empty after stripping are not words.
std::vector<std::string> answer_words(const std::string& answer);

/// EmptyInput for an empty triplet list.
CorpusStats corpus_statistics(const std::vector<VqaTriplet>& triplets);
double answers_per_action(const std::vector<VqaTriplet>& triplets);

/// Tab-separated "rank word count" table, plus a summary header block.
std::string format_stats_table(const CorpusStats& stats, std::size_t top_k);
void export_stats(const std::filesystem::path& path, const CorpusStats& stats, std::size_t top_k);

}  // namespace xvars::data
