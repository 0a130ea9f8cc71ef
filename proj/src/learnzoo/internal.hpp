#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psbo/clock.hpp"
#include "psbo/dataset.hpp"
#include "psbo/hyperspace.hpp"
#include "psbo/learnzoo.hpp"

namespace psbo::zoo {

constexpr double kOpsPerUnit = 1e6;

inline void charge_ops(Stopwatch& meter, double ops) { meter.charge(ops / kOpsPerUnit); }

inline double d_inf() { return std::numeric_limits<double>::infinity(); }

// Reads hyper-parameter values by name from a (space, combination) pair.
struct Params {
    const ParamSpace& space;
    const Combination& combo;

    const ParamValue& raw(const std::string& name) const {
        return combo.values[*space.index_of(name)];
    }
    double num(const std::string& name) const { return raw(name).num; }
    int integer(const std::string& name) const { return static_cast<int>(raw(name).num); }
    const std::string& cat(const std::string& name) const { return raw(name).cat; }
    bool flag(const std::string& name) const { return raw(name).cat == "true"; }
};

// Binary classification tree with numeric threshold splits and
// categorical one-vs-rest equality splits; shared by CART and the forest.
struct ClassTree {
    struct Node {
        int feature = -1;      // column index into the model's feature list
        bool equality = false; // categorical: left iff value == threshold
        double threshold = 0.0;
        int left = -1, right = -1;
        int label = 0;  // majority class at this node
    };
    std::vector<Node> nodes;

    int predict(const Dataset& d, std::uint32_t row, const std::vector<std::uint32_t>& cols) const;
    std::size_t depth_estimate() const;
    nlohmann::json to_json() const;
    static ClassTree from_json(const nlohmann::json& j);
};

struct TreeGrowOptions {
    int max_depth = -1;
    std::size_t min_leaf = 1;
    bool entropy = false;       // gini otherwise
    std::size_t mtry = 0;       // 0 = all features per node
};

// Grows level-by-level so a usable tree exists whenever the budget runs
// out; returns false when growth stopped early because of the budget.
bool grow_class_tree(ClassTree& tree, const Dataset& d, const std::vector<std::uint32_t>& rows,
                     const std::vector<std::uint32_t>& cols, int classes,
                     const TreeGrowOptions& opts, Rng& rng, Stopwatch& meter, double budget);

// One-hot + standardization encoder for the linear models.
struct LinearEncoder {
    std::vector<std::uint32_t> cols;
    std::vector<int> offsets;       // per col, start index in the dense vector
    std::vector<int> widths;        // 1 for numeric, #levels for categorical
    std::vector<double> means, scales;  // numeric standardization (0/1 for categorical)
    int dim = 0;

    void fit(const Dataset& d, const std::vector<std::uint32_t>& rows,
             const std::vector<std::uint32_t>& columns);
    void encode(const Dataset& d, std::uint32_t row, std::vector<double>& out) const;
    nlohmann::json to_json() const;
    static LinearEncoder from_json(const nlohmann::json& j);
};

}  // namespace psbo::zoo
