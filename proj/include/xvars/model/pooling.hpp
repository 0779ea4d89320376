#pragma once

#include <string>
#include <vector>

#include "xvars/autograd/tape.hpp"

namespace xvars {

/// T entries, each S x D2.
using HiddenStates = std::vector<Matrix>;

struct SpatioTemporalFeatures {
    Matrix temporal;  // S x D2, mean over frames
    Matrix spatial;   // T x D2, mean over tokens
    Matrix combined;  // (S + T) x D2, temporal rows then spatial rows
};

/// Mean over frames: (j, d) = mean_i hidden(i, j, d). EmptyInput when T = 0.
Matrix pool_temporal(const HiddenStates& hidden);
/// Mean over tokens: (i, d) = mean_j hidden(i, j, d). EmptyInput when S = 0.
Matrix pool_spatial(const HiddenStates& hidden);
SpatioTemporalFeatures build_spatiotemporal(const HiddenStates& hidden);
/// Mean over frames of the T x D1 frame features.
RowVector pool_video_level(const Matrix& frame_features);

}  // namespace xvars
