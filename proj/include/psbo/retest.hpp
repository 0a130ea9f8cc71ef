#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace psbo {

// Greedy distance-constrained selection of combinations for retesting.
// `errors[i]` is candidate i's previous-round estimate (callers must
// pre-filter to estimates < 100%); `distance(i, j)` is the Hamming
// distance between candidates. Passes select the lowest-error unmarked
// candidate and mark everything within t_d of it; if fewer than n_c get
// selected, the lowest-error marked candidates top the list up.
std::vector<std::size_t> select_for_retest(
    const std::vector<double>& errors,
    const std::function<int(std::size_t, std::size_t)>& distance, std::size_t n_c, int t_d);

// Error-rate ratio E2/E1 clipped to [0.25, 2.5]; E1 = 0 maps to 1.0.
double compute_ratio(double prev_error, double current_error);

// Inverse-distance-weighted rough ratio for a non-retested combination:
// r_u = sum(w_i * r_i) / sum(w_i) with w_i = 1/distance_i; a zero distance
// short-circuits to that candidate's ratio (first in selection order).
double idw_ratio(const std::vector<int>& distances, const std::vector<double>& ratios);

// New raw estimate for the non-selected combination: min(1, E1 * r_u).
double rough_estimate_idw(double prev_error, const std::vector<int>& distances,
                          const std::vector<double>& ratios);

}  // namespace psbo
