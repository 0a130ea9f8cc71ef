#pragma once

#include <memory>
#include <vector>

#include "internal.hpp"
#include "psbo/learnzoo.hpp"
#include "psbo/regtree.hpp"

namespace psbo::zoo {

struct ZeroRModel final : Model {
    int majority = 0;

    int predict(const Dataset&, std::uint32_t) const override { return majority; }
    double predict_ops() const override { return 1.0; }
    nlohmann::json to_json() const override;
    static std::unique_ptr<Model> from_json(const nlohmann::json& j);
};

struct KnnModel final : Model {
    int k = 5;
    bool distance_weighted = false;
    int classes = 2;
    std::vector<std::uint32_t> cols;
    std::vector<bool> categorical;
    std::vector<double> lo, hi;        // numeric ranges for scaling
    std::vector<double> points;        // row-major, n x |cols|
    std::vector<int> labels;

    int predict(const Dataset& d, std::uint32_t row) const override;
    double predict_ops() const override {
        return static_cast<double>(labels.size()) * static_cast<double>(cols.size()) * 3.0;
    }
    nlohmann::json to_json() const override;
    static std::unique_ptr<Model> from_json(const nlohmann::json& j);
};

struct NaiveBayesModel final : Model {
    enum class FeatureModel { categorical, gaussian, kde, binned };
    struct Feature {
        FeatureModel model = FeatureModel::gaussian;
        // categorical / binned: log P(level | class), row-major classes x arity
        std::vector<double> log_prob;
        int arity = 0;
        std::vector<double> cuts;            // binned only
        std::vector<double> mean, var;       // gaussian, per class
        std::vector<std::vector<double>> kde_values;  // per class
        std::vector<double> kde_bandwidth;   // per class
    };

    int classes = 2;
    std::vector<std::uint32_t> cols;
    std::vector<double> log_prior;
    std::vector<Feature> features;

    int predict(const Dataset& d, std::uint32_t row) const override;
    double predict_ops() const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<Model> from_json(const nlohmann::json& j);
};

struct CartModel final : Model {
    ClassTree tree;
    std::vector<std::uint32_t> cols;

    int predict(const Dataset& d, std::uint32_t row) const override {
        return tree.predict(d, row, cols);
    }
    double predict_ops() const override {
        return static_cast<double>(tree.depth_estimate()) * 2.0;
    }
    nlohmann::json to_json() const override;
    static std::unique_ptr<Model> from_json(const nlohmann::json& j);
};

struct ForestModel final : Model {
    std::vector<ClassTree> trees;
    std::vector<std::uint32_t> cols;
    int classes = 2;

    int predict(const Dataset& d, std::uint32_t row) const override;
    double predict_ops() const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<Model> from_json(const nlohmann::json& j);
};

struct LinearSvmModel final : Model {
    LinearEncoder enc;
    int classes = 2;
    std::vector<std::vector<int>> codebook;       // classes x columns, entries +-1
    std::vector<std::vector<double>> weights;     // per column, dim + 1 (bias last)

    int predict(const Dataset& d, std::uint32_t row) const override;
    double predict_ops() const override {
        return static_cast<double>(enc.dim) * static_cast<double>(weights.size()) * 2.0;
    }
    nlohmann::json to_json() const override;
    static std::unique_ptr<Model> from_json(const nlohmann::json& j);
};

struct LogRegModel final : Model {
    LinearEncoder enc;
    int classes = 2;
    std::vector<std::vector<double>> weights;  // per class, dim + 1 (bias last)

    int predict(const Dataset& d, std::uint32_t row) const override;
    double predict_ops() const override {
        return static_cast<double>(enc.dim) * classes * 2.0;
    }
    nlohmann::json to_json() const override;
    static std::unique_ptr<Model> from_json(const nlohmann::json& j);
};

struct GbmModel final : Model {
    int classes = 2;
    double learning_rate = 0.1;
    std::vector<std::uint32_t> cols;
    std::vector<double> base_score;                    // per class log prior
    std::vector<std::vector<RegressionTree>> rounds;   // [round][class]

    int predict(const Dataset& d, std::uint32_t row) const override;
    double predict_ops() const override {
        return static_cast<double>(rounds.size()) * classes * 8.0 + classes;
    }
    nlohmann::json to_json() const override;
    static std::unique_ptr<Model> from_json(const nlohmann::json& j);
};

struct AdaBoostModel final : Model {
    int classes = 2;
    std::vector<std::unique_ptr<Model>> stages;
    std::vector<double> alphas;

    int predict(const Dataset& d, std::uint32_t row) const override;
    double predict_ops() const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<Model> from_json(const nlohmann::json& j);
};

struct VotingModel final : Model {
    int classes = 2;
    std::vector<std::unique_ptr<Model>> members;

    int predict(const Dataset& d, std::uint32_t row) const override;
    double predict_ops() const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<Model> from_json(const nlohmann::json& j);
};

}  // namespace psbo::zoo
