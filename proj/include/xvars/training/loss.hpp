#pragma once

#include <vector>

#include "xvars/autograd/tape.hpp"
#include "xvars/model/labels.hpp"
#include "xvars/model/prompt.hpp"

namespace xvars::train {

/// -log softmax(logits)[target]. InvalidLabel when target is out of range.
double cross_entropy(const RowVector& logits, int target);

/// CE(foul) + CE(severity), unweighted. NonFinite for non-finite logits,
/// InvalidLabel for label indices outside the enumerations.
double multitask_loss(const RowVector& foul_logits, const RowVector& severity_logits, FoulType gt_foul,
                      Severity gt_severity);

/// Differentiable form, scaled by `weight` (1/batch size during training).
ad::Var multitask_loss(const ad::Var& foul_logits, const ad::Var& severity_logits, FoulType gt_foul,
                       Severity gt_severity, double weight = 1.0);

/// Next-token targets for a prompt that carries an answer: position i targets
/// the token at i+1 when that token is part of the answer, and the last answer
/// position targets <eos>. Everything else is -1 (ignored). EmptyMask when the
/// prompt has no answer positions.
std::vector<int> answer_targets(const PromptSequence& prompt);

/// Mean next-token cross-entropy over the answer targets, times `weight`.
ad::Var masked_lm_loss(const ad::Var& logits, const std::vector<int>& targets, double weight = 1.0);

}  // namespace xvars::train
