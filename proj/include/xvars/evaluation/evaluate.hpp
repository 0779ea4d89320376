#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xvars/dataset/media.hpp"
#include "xvars/dataset/records.hpp"
#include "xvars/evaluation/extraction.hpp"
#include "xvars/evaluation/metrics.hpp"
#include "xvars/model/xvars_model.hpp"

namespace xvars::eval {

struct ClassifierOutcome {
    std::string clip_id;
    FoulType gt_foul = FoulType::Tackling;
    Severity gt_severity = Severity::NoOffence;
    std::optional<FoulType> predicted_foul;
    std::optional<Severity> predicted_severity;
    std::string error;  // set when inference failed
};

struct ClassifierEvaluation {
    MetricsReport foul;
    MetricsReport severity;
    std::vector<ClassifierOutcome> outcomes;
};

ClassifierEvaluation score_classifier(std::vector<ClassifierOutcome> outcomes);

/// classify() on every clip of `split`. Inference errors are recorded per
/// clip. MissingLabel when a clip has no ground truth.
ClassifierEvaluation evaluate_classifier(const XVarsModel& model, const data::Dataset& dataset, data::Split split,
                                         int frames_per_clip,
                                         const data::MediaReader& reader = data::FileMediaReader());

struct GenerationOutcome {
    std::string clip_id;
    Severity gt_severity = Severity::NoOffence;
    std::optional<FoulType> gt_foul;
    std::string answer;
    /// Labels the classifier put into the prompt.
    std::optional<FoulType> injected_foul;
    std::optional<Severity> injected_severity;
    std::optional<ExtractionResult> extraction;
    std::string error;  // generation or extraction failure
};

/// Severity metrics over the clips whose answer yielded a severity; the
/// others are counted as extraction failures (or inference errors) and left
/// out of the denominators. Foul type is reported as coverage.
struct GenerativeEvaluation {
    MetricsReport severity;
    long long foul_type_extracted = 0;
    double foul_type_coverage = 0.0;
    std::vector<GenerationOutcome> outcomes;
};

GenerativeEvaluation score_generative(std::vector<GenerationOutcome> outcomes);

/// Asks `question` about every clip of `split`, extracts the severity from
/// the answer and compares it with the ground truth.
GenerativeEvaluation evaluate_generative(const XVarsModel& model, const data::Dataset& dataset, data::Split split,
                                         std::string_view question, int frames_per_clip,
                                         const LabelExtractor& extractor, const InferenceOptions& options = {},
                                         const data::MediaReader& reader = data::FileMediaReader());

}  // namespace xvars::eval
