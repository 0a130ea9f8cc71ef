#include "psbo/regtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace psbo {

namespace {

struct WorkItem {
    int node;
    std::vector<std::size_t> rows;
    int depth;
};

double mean_of(const std::vector<double>& y, const std::vector<std::size_t>& rows) {
    double s = 0.0;
    for (std::size_t r : rows) s += y[r];
    return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

}  // namespace

RegressionTree RegressionTree::fit(const RowAccessor& x, std::size_t columns,
                                   const std::vector<std::size_t>& rows,
                                   const std::vector<double>& y, const Options& opts, Rng& rng,
                                   const std::function<void(double)>& charge_ops) {
    RegressionTree tree;
    if (rows.empty()) return tree;

    tree.nodes_.push_back({});
    tree.nodes_[0].value = mean_of(y, rows);
    std::vector<WorkItem> stack;
    stack.push_back({0, rows, 0});

    std::vector<std::size_t> feature_pool(columns);
    std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
    const std::size_t per_node =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(
                                     opts.feature_fraction * static_cast<double>(columns))));

    while (!stack.empty()) {
        WorkItem item = std::move(stack.back());
        stack.pop_back();
        auto& node_rows = item.rows;
        const std::size_t count = node_rows.size();

        if (count < 2 * opts.min_leaf ||
            (opts.max_depth >= 0 && item.depth >= opts.max_depth))
            continue;

        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t r : node_rows) {
            sum += y[r];
            sum_sq += y[r] * y[r];
        }
        const double total_sse = sum_sq - sum * sum / static_cast<double>(count);
        if (total_sse <= 1e-12) continue;  // pure node

        // Candidate features: random subset when feature_fraction < 1.
        std::vector<std::size_t> candidates;
        if (per_node >= columns) {
            candidates = feature_pool;
        } else {
            std::vector<std::size_t> pool = feature_pool;
            rng.shuffle(pool);
            candidates.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per_node));
            std::sort(candidates.begin(), candidates.end());
        }

        int best_feature = -1;
        double best_threshold = 0.0, best_gain = 0.0;

        std::vector<std::pair<double, double>> vals;  // (x, y)
        for (std::size_t f : candidates) {
            vals.clear();
            vals.reserve(count);
            for (std::size_t r : node_rows) vals.push_back({x(r, f), y[r]});
            std::sort(vals.begin(), vals.end());
            if (charge_ops) charge_ops(static_cast<double>(count) * 8.0);

            double left_sum = 0.0, left_sq = 0.0;
            for (std::size_t i = 0; i + 1 < count; ++i) {
                left_sum += vals[i].second;
                left_sq += vals[i].second * vals[i].second;
                if (vals[i].first == vals[i + 1].first) continue;
                const std::size_t nl = i + 1, nr = count - nl;
                if (nl < opts.min_leaf || nr < opts.min_leaf) continue;
                const double right_sum = sum - left_sum;
                const double right_sq = sum_sq - left_sq;
                const double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                                   (right_sq - right_sum * right_sum / static_cast<double>(nr));
                const double gain = total_sse - sse;
                if (gain > best_gain + 1e-12) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = (vals[i].first + vals[i + 1].first) / 2.0;
                }
            }
        }
        if (best_feature < 0) continue;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : node_rows) {
            if (x(r, static_cast<std::size_t>(best_feature)) <= best_threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }
        if (left_rows.empty() || right_rows.empty()) continue;

        Node& parent = tree.nodes_[static_cast<std::size_t>(item.node)];
        parent.feature = best_feature;
        parent.threshold = best_threshold;
        parent.left = static_cast<int>(tree.nodes_.size());
        tree.nodes_.push_back({});
        tree.nodes_.back().value = mean_of(y, left_rows);
        tree.nodes_[static_cast<std::size_t>(item.node)].right = static_cast<int>(tree.nodes_.size());
        tree.nodes_.push_back({});
        tree.nodes_.back().value = mean_of(y, right_rows);

        const int left_id = tree.nodes_[static_cast<std::size_t>(item.node)].left;
        const int right_id = tree.nodes_[static_cast<std::size_t>(item.node)].right;
        stack.push_back({left_id, std::move(left_rows), item.depth + 1});
        stack.push_back({right_id, std::move(right_rows), item.depth + 1});
    }
    return tree;
}

template <typename Lookup>
double RegressionTree::walk(const Lookup& get) const {
    if (nodes_.empty()) return 0.0;
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        i = get(static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
}

double RegressionTree::predict(const std::vector<double>& row) const {
    return walk([&](std::size_t f) { return row[f]; });
}

double RegressionTree::predict(const RowAccessor& x, std::size_t row) const {
    return walk([&](std::size_t f) { return x(row, f); });
}

nlohmann::json RegressionTree::to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const Node& n : nodes_)
        nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right},
                         {"v", n.value}});
    return {{"nodes", nodes}};
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
    RegressionTree tree;
    for (const auto& nj : j.at("nodes")) {
        Node n;
        n.feature = nj.at("f").get<int>();
        n.threshold = nj.at("t").get<double>();
        n.left = nj.at("l").get<int>();
        n.right = nj.at("r").get<int>();
        n.value = nj.at("v").get<double>();
        tree.nodes_.push_back(n);
    }
    return tree;
}

}  // namespace psbo
