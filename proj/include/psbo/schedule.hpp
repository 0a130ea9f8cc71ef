#pragma once

#include <array>
#include <vector>

#include "psbo/dataset.hpp"

namespace psbo {

// Per-round search constants. Rounds 1..4 sample progressively; round 5 is
// the final cross-validated tournament.
struct RoundSchedule {
    int round = 1;
    double tau = 0.5;          // error-rate-difference threshold
    double budget_fs = 10.0;   // L_f
    double budget_train = 10.0;  // L_t
    int bo_cycles = 0;         // C
    double training_fraction = 0.125;
    double keep_fraction = 0.4;
};

struct ScheduleOptions {
    double tau0 = 0.5;
    double keep_round1 = 0.4;
    double keep_later = 0.7;
    double budget0_small = 10.0;
    double budget0_large = 20.0;
    bool grow_budgets = true;  // technique 3; off = fixed large budgets
    double fixed_budget = 900.0;
};

// The five-round schedule: tau 0.5 shrinking by 0.8 per round, budgets
// growing by 50% per round, C = 3,2,1 in rounds 2-4, training fractions
// 12.5/25/50/100%, keep 40% then 70%.
std::vector<RoundSchedule> make_schedule(bool large_dataset, const ScheduleOptions& opts = {});

}  // namespace psbo
