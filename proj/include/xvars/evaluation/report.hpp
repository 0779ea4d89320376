#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xvars/evaluation/agreement.hpp"
#include "xvars/evaluation/evaluate.hpp"
#include "xvars/evaluation/metrics.hpp"
#include "xvars/evaluation/study.hpp"

namespace xvars::eval {

/// One line of the multi-task classification table. Missing metrics print as "/".
struct ClassificationRow {
    std::string feature_extractor;
    std::string pooling;
    std::optional<double> foul_accuracy;
    std::optional<double> foul_balanced_accuracy;
    std::optional<double> severity_accuracy;
    std::optional<double> severity_balanced_accuracy;
};

ClassificationRow classification_row(std::string feature_extractor, std::string pooling,
                                     const ClassifierEvaluation& ev);
ClassificationRow classification_row(std::string feature_extractor, std::string pooling,
                                     const GenerativeEvaluation& ev);

/// Fixed-width text table: type-of-foul and severity columns, Acc. and BA. each.
std::string render_classification_table(const std::vector<ClassificationRow>& rows);
/// Tab-separated export with a header line.
std::string classification_tsv(const std::vector<ClassificationRow>& rows);

/// One line of the study table: mean score and integer percentages for scores 1..5.
struct StudyRow {
    std::string name;
    std::optional<double> mean;
    std::array<int, 5> percent{};
};

std::vector<StudyRow> study_rows(const StudyReport& report, const std::string& human_name = "Referees",
                                 const std::string& model_name = "X-VARS");
/// Means with one decimal, percentages as integers, plus `footer` lines.
std::string render_study_table(const std::vector<StudyRow>& rows, const std::vector<std::string>& footer = {});
std::string study_tsv(const std::vector<StudyRow>& rows);
/// Rounding note and the paired-clip comparison, for the table footer.
std::vector<std::string> study_footer(const StudyReport& report);

using ReportEntries = std::vector<std::pair<std::string, std::string>>;

/// Flat key/value form for run reports, keys prefixed with `prefix`.
ReportEntries metrics_entries(const MetricsReport& report, const std::string& prefix);
ReportEntries agreement_entries(const AgreementReport& report, const std::string& prefix);

}  // namespace xvars::eval
