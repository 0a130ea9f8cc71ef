#pragma once

#include <cstdint>
#include <string>

#include "psbo/dataset.hpp"

namespace psbo::synth {

// Rule-generated categorical dataset in the style of the classic car
// evaluation data: six categorical attributes, four ordered classes
// derived from a fixed decision rule, full factorial 1728 rows.
Dataset car_like();

// Mixed numeric/categorical binary-credit dataset: 20 features, labels
// from a noisy logistic rule.
Dataset credit_like(std::size_t n, std::uint64_t seed);

// Numeric 8-feature, 10-class Gaussian-mixture dataset.
Dataset yeast_like(std::size_t n, std::uint64_t seed);

// Labels generated by an axis-aligned depth-2 decision tree over the
// first two of `p` numeric features (the rest are noise); label noise
// makes the Bayes error equal to `noise`.
Dataset planted_tree(std::size_t n, std::size_t p, double noise, std::uint64_t seed);

// Small helper: n rows, p numeric features, two classes split by a linear
// rule, no noise.
Dataset numeric_binary(std::size_t n, std::size_t p, std::uint64_t seed);

// Same as the loader would produce for the given CSV text.
Dataset from_csv(const std::string& text, const std::string& target);

std::string to_csv(const Dataset& d, const std::string& target_name = "class");

}  // namespace psbo::synth
