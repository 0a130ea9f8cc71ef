#include "psbo/retest.hpp"

#include <algorithm>
#include <numeric>

#include "psbo/error.hpp"

namespace psbo {

std::vector<std::size_t> select_for_retest(
    const std::vector<double>& errors,
    const std::function<int(std::size_t, std::size_t)>& distance, std::size_t n_c, int t_d) {
    const std::size_t n = errors.size();
    if (n <= n_c) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        return all;
    }

    // Stable error order: ties broken by index.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (errors[a] != errors[b]) return errors[a] < errors[b];
        return a < b;
    });

    enum class State { open, selected, marked };
    std::vector<State> state(n, State::open);
    std::vector<std::size_t> selected;
    while (selected.size() < n_c) {
        std::size_t pick = n;
        for (std::size_t idx : order) {
            if (state[idx] == State::open) {
                pick = idx;
                break;
            }
        }
        if (pick == n) break;  // everything selected or marked
        state[pick] = State::selected;
        selected.push_back(pick);
        for (std::size_t other = 0; other < n; ++other)
            if (state[other] == State::open && distance(pick, other) <= t_d)
                state[other] = State::marked;
    }

    // Top up from the marked pool with the lowest error estimates.
    if (selected.size() < n_c) {
        for (std::size_t idx : order) {
            if (selected.size() >= n_c) break;
            if (state[idx] == State::marked) {
                state[idx] = State::selected;
                selected.push_back(idx);
            }
        }
    }
    return selected;
}

double compute_ratio(double prev_error, double current_error) {
    if (prev_error <= 0.0) return 1.0;
    return std::clamp(current_error / prev_error, 0.25, 2.5);
}

double idw_ratio(const std::vector<int>& distances, const std::vector<double>& ratios) {
    if (distances.size() != ratios.size() || distances.empty())
        throw Error("idw_ratio: mismatched or empty inputs");
    for (std::size_t i = 0; i < distances.size(); ++i)
        if (distances[i] == 0) return ratios[i];
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        const double w = 1.0 / static_cast<double>(distances[i]);
        num += w * ratios[i];
        den += w;
    }
    return num / den;
}

double rough_estimate_idw(double prev_error, const std::vector<int>& distances,
                          const std::vector<double>& ratios) {
    return std::min(1.0, prev_error * idw_ratio(distances, ratios));
}

}  // namespace psbo
