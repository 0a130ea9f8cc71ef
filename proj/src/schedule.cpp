#include "psbo/schedule.hpp"

namespace psbo {

std::vector<RoundSchedule> make_schedule(bool large_dataset, const ScheduleOptions& opts) {
    // Literal tau table for the default tau0: repeated 0.8 multiplication
    // drifts off the decimal values in binary floating point.
    static constexpr std::array<double, 4> kDefaultTau{0.5, 0.4, 0.32, 0.256};
    static constexpr std::array<double, 4> kFractions{0.125, 0.25, 0.5, 1.0};

    std::vector<RoundSchedule> rounds(5);
    double budget = large_dataset ? opts.budget0_large : opts.budget0_small;
    double tau = opts.tau0;
    for (int r = 1; r <= 5; ++r) {
        RoundSchedule& s = rounds[static_cast<std::size_t>(r - 1)];
        s.round = r;
        if (r <= 4) {
            s.tau = opts.tau0 == 0.5 ? kDefaultTau[static_cast<std::size_t>(r - 1)] : tau;
            s.training_fraction = kFractions[static_cast<std::size_t>(r - 1)];
            s.keep_fraction = r == 1 ? opts.keep_round1 : opts.keep_later;
            s.bo_cycles = r == 1 ? 0 : 5 - r;  // 3, 2, 1 in rounds 2-4
        } else {
            s.tau = 0.0;
            s.training_fraction = 1.0;
            s.keep_fraction = 1.0;
            s.bo_cycles = 0;
        }
        if (opts.grow_budgets) {
            s.budget_fs = budget;
            s.budget_train = budget;
            budget *= 1.5;
        } else {
            s.budget_fs = opts.fixed_budget;
            s.budget_train = opts.fixed_budget;
        }
        tau *= 0.8;
    }
    return rounds;
}

}  // namespace psbo
