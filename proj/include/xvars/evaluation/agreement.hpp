#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xvars/evaluation/evaluate.hpp"
#include "xvars/model/labels.hpp"

namespace xvars::eval {

struct ExtractedAnswer {
    std::string clip_id;
    std::optional<Severity> severity;  // absent when extraction found nothing
    std::string text;
};

struct InjectedPrediction {
    std::string clip_id;
    Severity severity = Severity::NoOffence;
};

struct Disagreement {
    std::string clip_id;
    Severity extracted;
    Severity injected;
    std::string text;
};

/// How often the generated answer repeats the severity that was put into the
/// prompt. The rate is over clips with an extracted severity; n_total and
/// n_unextractable give the other denominator.
struct AgreementReport {
    std::optional<double> rate;
    long long n_total = 0;
    long long n_compared = 0;
    long long n_agree = 0;
    long long n_unextractable = 0;
    std::vector<Disagreement> disagreements;
};

/// Joins the two lists on clip_id. AlignmentMismatch unless both name the
/// same clips exactly once.
AgreementReport agreement_rate(const std::vector<ExtractedAnswer>& answers,
                               const std::vector<InjectedPrediction>& injected);

/// Agreement over the outcomes of a generative evaluation; clips whose
/// generation failed are skipped.
AgreementReport agreement_rate(const GenerativeEvaluation& evaluation);

}  // namespace xvars::eval
