#include "psbo/tournament.hpp"

#include <algorithm>
#include <numeric>

#include "psbo/error.hpp"

namespace psbo {

namespace {

double fold_mean(const TournamentEntry& e) {
    double s = 0.0;
    for (double v : e.fold_errors) s += v;
    return e.fold_errors.empty() ? 1.0 : s / static_cast<double>(e.fold_errors.size());
}

}  // namespace

TournamentResult run_tournament(const std::vector<TournamentEntry>& entries) {
    if (entries.empty()) throw Error("tournament with no entries");
    TournamentResult result;
    result.wins.assign(entries.size(), 0);
    if (entries.size() == 1) return result;

    for (std::size_t a = 0; a < entries.size(); ++a) {
        for (std::size_t b = a + 1; b < entries.size(); ++b) {
            int wins_a = 0, wins_b = 0;
            const std::size_t folds =
                std::min(entries[a].fold_errors.size(), entries[b].fold_errors.size());
            for (std::size_t f = 0; f < folds; ++f) {
                if (entries[a].fold_errors[f] < entries[b].fold_errors[f]) ++wins_a;
                else if (entries[b].fold_errors[f] < entries[a].fold_errors[f]) ++wins_b;
            }
            if (wins_a > wins_b) result.wins[a]++;
            else if (wins_b > wins_a) result.wins[b]++;
        }
    }

    const int top = *std::max_element(result.wins.begin(), result.wins.end());
    std::vector<std::size_t> champions;
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (result.wins[i] == top) champions.push_back(i);

    auto keep_minimal = [&](auto key) {
        double best = key(champions[0]);
        for (std::size_t c : champions) best = std::min(best, key(c));
        std::vector<std::size_t> kept;
        for (std::size_t c : champions)
            if (key(c) == best) kept.push_back(c);
        champions = std::move(kept);
    };

    if (champions.size() > 1) {
        result.tiebreak_depth = 1;
        keep_minimal([&](std::size_t i) { return fold_mean(entries[i]); });
    }
    if (champions.size() > 1) {
        result.tiebreak_depth = 2;
        keep_minimal([&](std::size_t i) { return entries[i].prev_estimate; });
    }
    if (champions.size() > 1) {
        result.tiebreak_depth = 3;
        keep_minimal([&](std::size_t i) { return entries[i].total_time; });
    }
    result.winner = champions.front();
    return result;
}

}  // namespace psbo
