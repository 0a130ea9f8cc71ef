#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psbo/rng.hpp"

namespace psbo {

// CART-style regression tree over dense double rows; used as the gradient
// boosting weak learner and as the surrogate forest's tree. Splits are
// axis-aligned thresholds (categorical inputs arrive as level indices).
class RegressionTree {
public:
    struct Options {
        int max_depth = -1;          // -1 = unlimited
        std::size_t min_leaf = 2;
        double feature_fraction = 1.0;  // per-node random feature subset
    };

    using RowAccessor = std::function<double(std::size_t row, std::size_t col)>;

    // charge_ops, when set, is called with an operation-count estimate for
    // cost accounting.
    static RegressionTree fit(const RowAccessor& x, std::size_t columns,
                              const std::vector<std::size_t>& rows, const std::vector<double>& y,
                              const Options& opts, Rng& rng,
                              const std::function<void(double)>& charge_ops = {});

    double predict(const std::vector<double>& row) const;
    double predict(const RowAccessor& x, std::size_t row) const;

    bool empty() const { return nodes_.empty(); }
    std::size_t node_count() const { return nodes_.size(); }

    nlohmann::json to_json() const;
    static RegressionTree from_json(const nlohmann::json& j);

private:
    struct Node {
        int feature = -1;      // -1 = leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        double value = 0.0;    // leaf mean
    };
    std::vector<Node> nodes_;

    template <typename Lookup>
    double walk(const Lookup& get) const;
};

}  // namespace psbo
