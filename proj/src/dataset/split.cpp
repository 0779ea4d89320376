#include "xvars/dataset/split.hpp"

#include <algorithm>
#include <cmath>

#include "xvars/common/error.hpp"
#include "xvars/common/random.hpp"

namespace xvars::data {

SplitSpec split_dataset(const std::vector<ClipRecord>& clips, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        fail(ErrorCode::InvalidArgument, "split fraction must be in (0, 1)");
    }
    std::vector<std::string> ids;
    ids.reserve(clips.size());
    for (const auto& c : clips) ids.push_back(c.clip_id);
    std::sort(ids.begin(), ids.end());
    Rng rng(seed);
    rng.shuffle(ids);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ids.size())));
    if (n_train == 0 || n_train >= ids.size()) {
        fail(ErrorCode::DegenerateSplit, "split of " + std::to_string(ids.size()) + " clips at fraction " +
                                             std::to_string(fraction) + " leaves one side empty");
    }
    SplitSpec spec;
    spec.fraction = fraction;
    spec.seed = seed;
    spec.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    spec.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
    std::sort(spec.train.begin(), spec.train.end());
    std::sort(spec.test.begin(), spec.test.end());
    return spec;
}

void apply_split(Dataset& dataset, const SplitSpec& spec) {
    dataset.assign_split(spec.train, Split::Train);
    dataset.assign_split(spec.test, Split::Test);
}

}  // namespace xvars::data
