#pragma once

#include <string>

#include "xvars/autograd/tape.hpp"
#include "xvars/model/pooling.hpp"
#include "xvars/nn/layers.hpp"

namespace xvars {

/// Projected spatio-temporal features w: (S + T) x E.
struct VisualTokens {
    Matrix tokens;
    std::string source_clip_id;

    Eigen::Index count() const { return tokens.rows(); }
};

/// Linear map D2 -> E from vision features into the language model's
/// embedding space.
class Projection {
public:
    Projection(int input_dim, int output_dim, std::uint64_t seed);
    Projection(const Projection&) = delete;
    Projection& operator=(const Projection&) = delete;

    ad::Var forward(ad::Tape& tape, const ad::Var& combined) const;
    Matrix apply(const Matrix& combined) const { return linear_.apply(combined); }

    int input_dim() const { return static_cast<int>(linear_.in_features()); }
    int output_dim() const { return static_cast<int>(linear_.out_features()); }

    nn::Linear& linear() { return linear_; }
    ParameterList parameters();
    ConstParameterList parameters() const;

private:
    nn::Linear linear_;
};

/// Row-by-row projection. DimensionMismatch when the projection's input
/// width differs from D2.
VisualTokens project_features(const SpatioTemporalFeatures& z, const Projection& projection,
                              const std::string& clip_id = {});

}  // namespace xvars
