#include "xvars/model/projection.hpp"

#include <cmath>

#include "xvars/common/error.hpp"

namespace xvars {

Projection::Projection(int input_dim, int output_dim, std::uint64_t seed) {
    Rng rng(seed);
    linear_ = nn::Linear("projection", input_dim, output_dim, rng, 1.0 / std::sqrt(static_cast<double>(input_dim)));
}

ad::Var Projection::forward(ad::Tape& tape, const ad::Var& combined) const {
    return linear_.forward(tape, combined);
}

ParameterList Projection::parameters() {
    ParameterList out;
    linear_.collect(out);
    return out;
}

ConstParameterList Projection::parameters() const {
    ConstParameterList out;
    linear_.collect(out);
    return out;
}

VisualTokens project_features(const SpatioTemporalFeatures& z, const Projection& projection,
                              const std::string& clip_id) {
    if (z.combined.cols() != projection.input_dim()) {
        fail(ErrorCode::DimensionMismatch, "project_features: feature width " + std::to_string(z.combined.cols()) +
                                               ", projection expects " + std::to_string(projection.input_dim()));
    }
    return {projection.apply(z.combined), clip_id};
}

}  // namespace xvars
