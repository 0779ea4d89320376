#pragma once

#include <span>

#include "xvars/autograd/tape.hpp"
#include "xvars/model/labels.hpp"
#include "xvars/nn/layers.hpp"

namespace xvars {

struct ClassifierBundle {
    RowVector video_level_feature;  // f
    RowVector foul_logits;          // 8
    RowVector severity_logits;      // 4
    FoulType predicted_foul = FoulType::Tackling;
    Severity predicted_severity = Severity::NoOffence;
};

/// Index of the largest value; ties go to the lowest index.
int argmax_lowest(std::span<const double> values);
int argmax_lowest(const RowVector& values);

/// The two linear heads C_foul (D1 -> 8) and C_sev (D1 -> 4).
class ClassificationHeads {
public:
    ClassificationHeads(int feature_dim, std::uint64_t seed);
    ClassificationHeads(const ClassificationHeads&) = delete;
    ClassificationHeads& operator=(const ClassificationHeads&) = delete;

    struct Logits {
        ad::Var foul;
        ad::Var severity;
    };
    Logits forward(ad::Tape& tape, const ad::Var& feature) const;

    int feature_dim() const { return static_cast<int>(foul_.in_features()); }
    ParameterList parameters();
    ConstParameterList parameters() const;

private:
    nn::Linear foul_;
    nn::Linear severity_;
};

/// Applies both heads to f and picks labels by lowest-index argmax. Throws
/// NonFinite when f or any logit is not finite.
ClassifierBundle classify(const RowVector& feature, const ClassificationHeads& heads);

}  // namespace xvars
