#pragma once

#include <cstdint>
#include <vector>

#include "psbo/clock.hpp"
#include "psbo/dataset.hpp"
#include "psbo/hyperspace.hpp"

namespace psbo {

// The feature-selection fragment shared by every algorithm's search space:
// a search method selector ("fs"), an evaluator, and the methods'
// hyper-parameters. Appended verbatim to each algorithm space, so blocks
// from different algorithms are directly comparable.
const ParamSpace& fs_space();

// True when the combination's "fs" selector is not "none".
bool has_fs_block(const ParamSpace& space, const Combination& c);

// The combination's feature-selection block as a combination of fs_space().
Combination fs_block(const ParamSpace& space, const Combination& c);

struct FsOutcome {
    enum class Status { selected, all, none, timeout };
    Status status = Status::timeout;
    std::vector<std::uint32_t> subset;  // nonempty proper subset when selected
    double elapsed = 0.0;
};

// Runs the block's search method + evaluator on the training rows under
// the L_f budget. All/none outcomes are reported exactly; exceeding the
// budget yields timeout.
FsOutcome run_feature_selection(const ParamSpace& space, const Combination& c, const Dataset& d,
                                const std::vector<std::uint32_t>& rows, Stopwatch& meter,
                                double budget);

// Per-feature information gain on the given rows (numeric features are
// binned by quantiles). Exposed for the ranker tests.
std::vector<double> information_gain_scores(const Dataset& d,
                                            const std::vector<std::uint32_t>& rows);

}  // namespace psbo
