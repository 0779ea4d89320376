#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xvars/dataset/records.hpp"

namespace xvars::data {

struct SplitSpec {
    std::vector<std::string> train;
    std::vector<std::string> test;
    double fraction = 0.8;
    std::uint64_t seed = 0;
};

/// Clip-level split: clips are sorted by id, shuffled with `seed`, and the
/// first round(fraction * n) go to train. DegenerateSplit when either side
/// would be empty; InvalidArgument unless 0 < fraction < 1.
SplitSpec split_dataset(const std::vector<ClipRecord>& clips, double fraction, std::uint64_t seed);

/// Writes the split into every clip record.
void apply_split(Dataset& dataset, const SplitSpec& spec);

}  // namespace xvars::data
