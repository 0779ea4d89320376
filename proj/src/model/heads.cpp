#include "xvars/model/heads.hpp"

#include <cmath>

#include "xvars/common/error.hpp"

namespace xvars {

int argmax_lowest(std::span<const double> values) {
    if (values.empty()) {
        fail(ErrorCode::EmptyInput, "argmax of an empty vector");
    }
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

int argmax_lowest(const RowVector& values) {
    return argmax_lowest(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

ClassificationHeads::ClassificationHeads(int feature_dim, std::uint64_t seed) {
    Rng rng(seed);
    const double std = 1.0 / std::sqrt(static_cast<double>(feature_dim));
    foul_ = nn::Linear("heads.foul", feature_dim, kFoulTypeCount, rng, std);
    severity_ = nn::Linear("heads.severity", feature_dim, kSeverityCount, rng, std);
}

ClassificationHeads::Logits ClassificationHeads::forward(ad::Tape& tape, const ad::Var& feature) const {
    return {foul_.forward(tape, feature), severity_.forward(tape, feature)};
}

ParameterList ClassificationHeads::parameters() {
    ParameterList out;
    foul_.collect(out);
    severity_.collect(out);
    return out;
}

ConstParameterList ClassificationHeads::parameters() const {
    ConstParameterList out;
    foul_.collect(out);
    severity_.collect(out);
    return out;
}

ClassifierBundle classify(const RowVector& feature, const ClassificationHeads& heads) {
    if (!feature.allFinite()) {
        fail(ErrorCode::NonFinite, "classify: video-level feature is not finite");
    }
    if (feature.size() != heads.feature_dim()) {
        fail(ErrorCode::DimensionMismatch, "classify: feature width " + std::to_string(feature.size()) +
                                               ", heads expect " + std::to_string(heads.feature_dim()));
    }
    ad::Tape tape(false);
    const auto logits = heads.forward(tape, tape.constant(feature));
    ClassifierBundle out;
    out.video_level_feature = feature;
    out.foul_logits = logits.foul.value().row(0);
    out.severity_logits = logits.severity.value().row(0);
    if (!out.foul_logits.allFinite() || !out.severity_logits.allFinite()) {
        fail(ErrorCode::NonFinite, "classify: non-finite logits");
    }
    out.predicted_foul = foul_type_from_index(argmax_lowest(out.foul_logits));
    out.predicted_severity = severity_from_index(argmax_lowest(out.severity_logits));
    return out;
}

}  // namespace xvars
