#pragma once

#include <cstddef>
#include <vector>

namespace psbo {

struct TournamentEntry {
    std::vector<double> fold_errors;
    double prev_estimate = 1.0;  // previous-round error estimate
    double total_time = 0.0;     // training + validating time across folds
};

struct TournamentResult {
    std::size_t winner = 0;
    std::vector<int> wins;       // pairwise match wins per entry
    int tiebreak_depth = 0;      // 0 = wins decided, 1 = fold mean, 2 = prev estimate, 3 = time
};

// Round-robin pairwise comparison: a pair beats another by winning more
// per-fold error comparisons. Ties on total wins fall through the chain
// fold-mean -> previous estimate -> total time -> lowest index.
TournamentResult run_tournament(const std::vector<TournamentEntry>& entries);

}  // namespace psbo
