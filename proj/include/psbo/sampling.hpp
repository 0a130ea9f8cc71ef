#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "psbo/dataset.hpp"
#include "psbo/rng.hpp"

namespace psbo {

struct FoldSpec {
    std::vector<std::uint32_t> validation;       // fixed across rounds
    std::vector<std::uint32_t> training_order;   // largest training set, class-interleaved
};

// Stratified k-fold progressive-sampling plan over a working set of
// m = min(5000, n) instances. Round r trains on a prefix of each fold's
// training_order, so samples are nested across rounds by construction.
struct SamplingPlan {
    std::size_t m = 0;
    int k = 1;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> working_set;
    std::vector<FoldSpec> folds;

    static constexpr std::array<double, 4> round_fractions{0.125, 0.25, 0.5, 1.0};
};

// k defaults to 3 (small) or 1 (large). Throws "class too small to
// stratify" when a class has fewer working-set instances than k.
SamplingPlan make_sampling_plan(const Dataset& d, const SizeClass& size,
                                std::optional<int> k_override, std::uint64_t seed);

// Prefix of the fold's training order: nearest(fraction * L), ties up.
std::vector<std::uint32_t> training_sample(const SamplingPlan& plan, int round, int fold);

// Sample for the final round's h-fold cross validation: everything when
// n <= 5000, otherwise 5000 instances stratified to whole-dataset class
// proportions, preferring instances outside the working set.
std::vector<std::uint32_t> final_cv_sample(const Dataset& d, const SamplingPlan& plan,
                                           std::uint64_t seed);

// Stratified partition of `rows` into `parts` parts whose sizes differ by
// at most one; each part's per-class count is floor or ceil of the
// proportional share. Shared by the plan builder and the final-round CV.
std::vector<std::vector<std::uint32_t>> stratified_parts(const Dataset& d,
                                                         const std::vector<std::uint32_t>& rows,
                                                         int parts, Rng& rng);

}  // namespace psbo
