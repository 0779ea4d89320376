#include "xvars/training/loss.hpp"

#include <array>
#include <cmath>

#include "xvars/common/error.hpp"
#include "xvars/model/tokenizer.hpp"

namespace xvars::train {
namespace {

void check_label(int index, int count, const char* what) {
    if (index < 0 || index >= count) {
        fail(ErrorCode::InvalidLabel, std::string(what) + " label index " + std::to_string(index) +
                                          " outside [0, " + std::to_string(count) + ")");
    }
}

}  // namespace

double cross_entropy(const RowVector& logits, int target) {
    check_label(target, static_cast<int>(logits.size()), "target");
    if (!logits.allFinite()) {
        fail(ErrorCode::NonFinite, "cross_entropy: non-finite logits");
    }
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    return lse - logits(target);
}

double multitask_loss(const RowVector& foul_logits, const RowVector& severity_logits, FoulType gt_foul,
                      Severity gt_severity) {
    if (foul_logits.size() != kFoulTypeCount || severity_logits.size() != kSeverityCount) {
        fail(ErrorCode::DimensionMismatch, "multitask_loss: expected 8 foul and 4 severity logits");
    }
    check_label(index_of(gt_foul), kFoulTypeCount, "foul type");
    check_label(index_of(gt_severity), kSeverityCount, "severity");
    return cross_entropy(foul_logits, index_of(gt_foul)) + cross_entropy(severity_logits, index_of(gt_severity));
}

ad::Var multitask_loss(const ad::Var& foul_logits, const ad::Var& severity_logits, FoulType gt_foul,
                       Severity gt_severity, double weight) {
    check_label(index_of(gt_foul), kFoulTypeCount, "foul type");
    check_label(index_of(gt_severity), kSeverityCount, "severity");
    if (!foul_logits.value().allFinite() || !severity_logits.value().allFinite()) {
        fail(ErrorCode::NonFinite, "multitask_loss: non-finite logits");
    }
    const std::vector<int> foul_target{index_of(gt_foul)};
    const std::vector<int> sev_target{index_of(gt_severity)};
    const std::vector<double> w{weight};
    const std::array<ad::Var, 2> parts = {ad::cross_entropy(foul_logits, foul_target, w),
                                          ad::cross_entropy(severity_logits, sev_target, w)};
    return ad::sum_scalars(parts);
}

std::vector<int> answer_targets(const PromptSequence& prompt) {
    const auto ids = prompt.flat_token_ids();
    const auto n = ids.size();
    std::vector<int> targets(n, -1);
    std::size_t last_answer = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (prompt.answer_mask[i]) {
            if (i == 0) {
                fail(ErrorCode::EmptyMask, "answer cannot start the sequence");
            }
            targets[i - 1] = ids[i];
            last_answer = i;
        }
    }
    if (last_answer == n) {
        fail(ErrorCode::EmptyMask, "prompt has no answer positions to train on");
    }
    targets[last_answer] = Tokenizer::kEndOfText;
    return targets;
}

ad::Var masked_lm_loss(const ad::Var& logits, const std::vector<int>& targets, double weight) {
    if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
        fail(ErrorCode::DimensionMismatch, "masked_lm_loss: one target per position expected");
    }
    int count = 0;
    for (int t : targets) count += t >= 0;
    if (count == 0) {
        fail(ErrorCode::EmptyMask, "masked_lm_loss: no answer targets");
    }
    const std::vector<double> weights(targets.size(), weight / count);
    return ad::cross_entropy(logits, targets, weights);
}

}  // namespace xvars::train
