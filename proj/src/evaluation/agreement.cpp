#include "xvars/evaluation/agreement.hpp"

#include <map>

#include "xvars/common/error.hpp"

namespace xvars::eval {

AgreementReport agreement_rate(const std::vector<ExtractedAnswer>& answers,
                               const std::vector<InjectedPrediction>& injected) {
    std::map<std::string, Severity> by_clip;
    for (const auto& p : injected) {
        if (!by_clip.emplace(p.clip_id, p.severity).second) {
            fail(ErrorCode::AlignmentMismatch, "agreement: clip '" + p.clip_id + "' has two injected predictions");
        }
    }
    if (by_clip.size() != answers.size()) {
        fail(ErrorCode::AlignmentMismatch, "agreement: " + std::to_string(answers.size()) + " answers but " +
                                               std::to_string(by_clip.size()) + " injected predictions");
    }
    AgreementReport r;
    std::map<std::string, bool> seen;
    for (const auto& a : answers) {
        const auto it = by_clip.find(a.clip_id);
        if (it == by_clip.end() || !seen.emplace(a.clip_id, true).second) {
            fail(ErrorCode::AlignmentMismatch, "agreement: answer for clip '" + a.clip_id +
                                                   "' has no matching injected prediction");
        }
        ++r.n_total;
        if (!a.severity) {
            ++r.n_unextractable;
            continue;
        }
        ++r.n_compared;
        if (*a.severity == it->second) {
            ++r.n_agree;
        } else {
            r.disagreements.push_back({a.clip_id, *a.severity, it->second, a.text});
        }
    }
    if (r.n_compared > 0) r.rate = static_cast<double>(r.n_agree) / static_cast<double>(r.n_compared);
    return r;
}

AgreementReport agreement_rate(const GenerativeEvaluation& evaluation) {
    std::vector<ExtractedAnswer> answers;
    std::vector<InjectedPrediction> injected;
    for (const auto& o : evaluation.outcomes) {
        if (!o.extraction || !o.injected_severity) continue;
        answers.push_back({o.clip_id, o.extraction->severity, o.answer});
        injected.push_back({o.clip_id, *o.injected_severity});
    }
    return agreement_rate(answers, injected);
}

}  // namespace xvars::eval
