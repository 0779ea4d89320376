#include "xvars/evaluation/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "xvars/common/ini.hpp"

namespace xvars::eval {
namespace {

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string one_decimal(std::optional<double> v) {
    if (!v) return "/";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *v);
    return buf;
}

// Trailing spaces are dropped so golden files stay clean.
std::string rstrip(std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

}  // namespace

ClassificationRow classification_row(std::string feature_extractor, std::string pooling,
                                     const ClassifierEvaluation& ev) {
    return {std::move(feature_extractor), std::move(pooling), ev.foul.accuracy, ev.foul.balanced_accuracy,
            ev.severity.accuracy, ev.severity.balanced_accuracy};
}

ClassificationRow classification_row(std::string feature_extractor, std::string pooling,
                                     const GenerativeEvaluation& ev) {
    return {std::move(feature_extractor), std::move(pooling), std::nullopt, std::nullopt, ev.severity.accuracy,
            ev.severity.balanced_accuracy};
}

std::string render_classification_table(const std::vector<ClassificationRow>& rows) {
    std::size_t w1 = std::string("Feat. extr.").size();
    std::size_t w2 = std::string("Pooling").size();
    for (const auto& r : rows) {
        w1 = std::max(w1, r.feature_extractor.size());
        w2 = std::max(w2, r.pooling.size());
    }
    w1 += 2;
    w2 += 1;
    const std::size_t m = 7;  // one metric column
    const std::string lead(w1 + w2, ' ');
    std::ostringstream out;
    out << rstrip(lead + "| " + pad("Type of Foul", 2 * m) + "| Offence Severity") << "\n";
    out << rstrip(pad("Feat. extr.", w1) + pad("Pooling", w2) + "| " + pad("Acc.", m) + pad("BA.", m) + "| " +
                  pad("Acc.", m) + "BA.")
        << "\n";
    out << std::string(w1 + w2, '-') << "+" << std::string(2 * m + 1, '-') << "+" << std::string(2 * m + 1, '-')
        << "\n";
    for (const auto& r : rows) {
        out << rstrip(pad(r.feature_extractor, w1) + pad(r.pooling, w2) + "| " + pad(format_metric(r.foul_accuracy), m) +
                      pad(format_metric(r.foul_balanced_accuracy), m) + "| " +
                      pad(format_metric(r.severity_accuracy), m) + format_metric(r.severity_balanced_accuracy))
            << "\n";
    }
    out << "Acc. = accuracy, BA. = balanced accuracy.\n";
    return out.str();
}

std::string classification_tsv(const std::vector<ClassificationRow>& rows) {
    std::ostringstream out;
    out << "feature_extractor\tpooling\tfoul_acc\tfoul_ba\tseverity_acc\tseverity_ba\n";
    for (const auto& r : rows) {
        out << r.feature_extractor << '\t' << r.pooling << '\t' << format_metric(r.foul_accuracy) << '\t'
            << format_metric(r.foul_balanced_accuracy) << '\t' << format_metric(r.severity_accuracy) << '\t'
            << format_metric(r.severity_balanced_accuracy) << '\n';
    }
    return out.str();
}

std::vector<StudyRow> study_rows(const StudyReport& report, const std::string& human_name,
                                 const std::string& model_name) {
    return {{human_name, report.sources[0].mean, report.sources[0].percent},
            {model_name, report.sources[1].mean, report.sources[1].percent}};
}

std::string render_study_table(const std::vector<StudyRow>& rows, const std::vector<std::string>& footer) {
    std::size_t w1 = std::string("Source").size();
    for (const auto& r : rows) w1 = std::max(w1, r.name.size());
    w1 += 2;
    const std::size_t wm = 6;
    const std::size_t wd = 6;
    std::ostringstream out;
    out << rstrip(std::string(w1, ' ') + "| " + std::string(wm, ' ') + "| Distribution") << "\n";
    std::string header = pad("Source", w1) + "| " + pad("Mean", wm) + "| ";
    for (int s = 1; s <= 5; ++s) header += pad(std::to_string(s), wd);
    out << rstrip(header) << "\n";
    out << std::string(w1, '-') << "+" << std::string(wm + 1, '-') << "+" << std::string(5 * wd, '-') << "\n";
    for (const auto& r : rows) {
        std::string line = pad(r.name, w1) + "| " + pad(one_decimal(r.mean), wm) + "| ";
        for (const auto p : r.percent) line += pad(std::to_string(p) + "%", wd);
        out << rstrip(line) << "\n";
    }
    out << "Scores: 5 = strongly agree, 1 = strongly disagree.\n";
    for (const auto& f : footer) out << f << "\n";
    return out.str();
}

std::string study_tsv(const std::vector<StudyRow>& rows) {
    std::ostringstream out;
    out << "source\tmean\tpct_1\tpct_2\tpct_3\tpct_4\tpct_5\n";
    for (const auto& r : rows) {
        out << r.name << '\t' << one_decimal(r.mean);
        for (const auto p : r.percent) out << '\t' << p;
        out << '\n';
    }
    return out.str();
}

std::vector<std::string> study_footer(const StudyReport& report) {
    std::vector<std::string> lines = {
        "Percentages use largest-remainder rounding; each row sums to 100."};
    const auto& p = report.paired;
    if (p.fraction) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "Paired clips: model explanation scored higher on %lld of %lld (%.0f%%).",
                      p.n_model_higher, p.n_pairs, *p.fraction * 100.0);
        lines.emplace_back(buf);
    } else {
        lines.emplace_back("Paired clips: none rated under both sources.");
    }
    return lines;
}

ReportEntries metrics_entries(const MetricsReport& r, const std::string& prefix) {
    ReportEntries e = {
        {prefix + "task", std::string(task_name(r.task))},
        {prefix + "accuracy", format_metric(r.accuracy)},
        {prefix + "balanced_accuracy", format_metric(r.balanced_accuracy)},
        {prefix + "n_attempted", std::to_string(r.n_attempted)},
        {prefix + "n_evaluated", std::to_string(r.n_evaluated)},
        {prefix + "n_correct", std::to_string(r.confusion.trace())},
        {prefix + "n_extraction_failures", std::to_string(r.n_extraction_failures)},
        {prefix + "n_inference_errors", std::to_string(r.n_inference_errors)},
    };
    for (int g = 0; g < r.confusion.size(); ++g) {
        std::string row;
        for (int p = 0; p < r.confusion.size(); ++p) row += (p ? " " : "") + std::to_string(r.confusion.at(g, p));
        e.emplace_back(prefix + "confusion." + std::to_string(g), row);
    }
    return e;
}

ReportEntries agreement_entries(const AgreementReport& r, const std::string& prefix) {
    ReportEntries e = {
        {prefix + "rate", format_metric(r.rate)},
        {prefix + "n_total", std::to_string(r.n_total)},
        {prefix + "n_compared", std::to_string(r.n_compared)},
        {prefix + "n_agree", std::to_string(r.n_agree)},
        {prefix + "n_unextractable", std::to_string(r.n_unextractable)},
        {prefix + "n_disagreements", std::to_string(r.disagreements.size())},
    };
    return e;
}

}  // namespace xvars::eval
