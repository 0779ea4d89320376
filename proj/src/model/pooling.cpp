#include "xvars/model/pooling.hpp"

#include "xvars/common/error.hpp"

namespace xvars {
namespace {

void check_hidden(const HiddenStates& hidden) {
    if (hidden.empty()) {
        fail(ErrorCode::EmptyInput, "hidden states: no frames (T = 0)");
    }
    const auto S = hidden.front().rows();
    const auto D = hidden.front().cols();
    if (S == 0) {
        fail(ErrorCode::EmptyInput, "hidden states: no tokens (S = 0)");
    }
    for (const auto& frame : hidden) {
        if (frame.rows() != S || frame.cols() != D) {
            fail(ErrorCode::DimensionMismatch, "hidden states: ragged frame shapes");
        }
        if (!frame.allFinite()) {
            fail(ErrorCode::NonFinite, "hidden states: non-finite entries");
        }
    }
}

}  // namespace

Matrix pool_temporal(const HiddenStates& hidden) {
    check_hidden(hidden);
    Matrix sum = Matrix::Zero(hidden.front().rows(), hidden.front().cols());
    for (const auto& frame : hidden) {
        sum += frame;
    }
    return sum / static_cast<double>(hidden.size());
}

Matrix pool_spatial(const HiddenStates& hidden) {
    check_hidden(hidden);
    Matrix out(static_cast<Eigen::Index>(hidden.size()), hidden.front().cols());
    for (std::size_t t = 0; t < hidden.size(); ++t) {
        out.row(static_cast<Eigen::Index>(t)) = hidden[t].colwise().mean();
    }
    return out;
}

SpatioTemporalFeatures build_spatiotemporal(const HiddenStates& hidden) {
    SpatioTemporalFeatures z;
    z.temporal = pool_temporal(hidden);
    z.spatial = pool_spatial(hidden);
    z.combined.resize(z.temporal.rows() + z.spatial.rows(), z.temporal.cols());
    z.combined << z.temporal, z.spatial;
    return z;
}

RowVector pool_video_level(const Matrix& frame_features) {
    if (frame_features.rows() == 0) {
        fail(ErrorCode::EmptyInput, "frame features: no frames");
    }
    return frame_features.colwise().mean();
}

}  // namespace xvars
