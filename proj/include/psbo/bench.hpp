#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psbo/dataset.hpp"
#include "psbo/engine.hpp"

namespace psbo {

// One (method, dataset, seed) run of the bench harness.
struct BenchCell {
    std::string method;
    std::string dataset;
    std::uint64_t seed = 0;
    double test_error = 1.0;
    double search_elapsed = 0.0;
    std::size_t distinct_tested = 0;
    bool champion_used_fs = false;
    std::string champion_algorithm;
};

struct BenchOptions {
    std::vector<std::string> dataset_paths;
    DataFormat format = DataFormat::autodetect;
    std::string target;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    bool run_random_baseline = true;
    std::vector<int> ablations;  // technique numbers toggled off, one method each
    double test_fraction = 0.25;
    SearchConfig base_config;
    std::string trace_dir;  // when set, per-run traces are written here
};

struct BenchReport {
    std::vector<BenchCell> cells;

    nlohmann::json to_json() const;
    std::string to_csv() const;
    // mean +- std per (dataset, method), Table-3 style.
    std::string render_table() const;
};

// Runs `psbo` (and optionally the equal-budget random-search baseline and
// per-technique ablations) over every (dataset, seed) pair. The baseline
// receives exactly the search budget the full method consumed on the same
// dataset and seed.
BenchReport run_bench(const BenchOptions& opts);

// Equal-budget pure random search over the same algorithm/parameter
// spaces: uniform algorithm choice, random_combination proposals, a single
// stratified 1/3 holdout on the full training data, fixed per-test limits.
struct RandomSearchResult {
    SavedModel model;
    std::size_t distinct_tested = 0;
    double elapsed = 0.0;
    std::string champion_algorithm;
    bool champion_used_fs = false;
};

RandomSearchResult random_search(const Dataset& train, std::uint64_t seed, double budget,
                                 ClockMode clock);

// Held-out misclassification rate of a saved model.
double holdout_error(const SavedModel& model, const Dataset& test);

// Deterministic stratified train/test split used by the harness.
std::pair<Dataset, Dataset> bench_split(const Dataset& full, double test_fraction,
                                        std::uint64_t seed);

}  // namespace psbo
