#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psbo/clock.hpp"
#include "psbo/dataset.hpp"
#include "psbo/learnzoo.hpp"
#include "psbo/model_io.hpp"
#include "psbo/rules.hpp"
#include "psbo/trace.hpp"

namespace psbo {

struct TechniqueToggles {
    bool distance_selection = true;   // T1: distance-aware retest + IDW
    bool multi_fold = true;           // T2: k-fold sampling on small data
    bool growing_budgets = true;      // T3: per-test time limits + timeout cache
    bool final_cv = true;             // T4: final-round cross validation
    bool inspect_fs = true;           // T5: all/none detection + degenerate cache
    bool fs_penalty = true;           // T6
    bool meta_penalty = true;         // T7
    bool validity_rules = true;       // T8

    bool enabled(int technique) const;
    void set(int technique, bool value);
};

struct SearchConfig {
    std::uint64_t seed = 1;
    ClockMode clock = ClockMode::virtual_units;
    std::optional<double> global_budget;  // units (virtual) or seconds (wall)
    TechniqueToggles techniques;

    // Paper-default parameters; every field is overridable from the CLI.
    int n_c = 10;                 // retest combinations per algorithm
    int t_d = 2;                  // Hamming distance threshold
    std::optional<int> k_override;
    std::optional<int> h_override;
    int surrogate_trees = 10;
    double fs_penalty = 1.1;
    double per_base_penalty = 0.02;
    double tau0 = 0.5;
    double keep_round1 = 0.4;
    double keep_later = 0.7;
    int round1_random = 20;       // random combinations per algorithm, round 1
    int trial_cap_round1 = 200;
    int trial_cap_slack = 5;      // later rounds allow q + slack trials

    nlohmann::json provenance = nlohmann::json::object();  // overrides, for the report
};

// raw * 1.1 (feature selection) * (1 + 0.02 * n_b), capped at 1. Applied
// only to surrogate data points, never to pruning or tournament inputs.
double apply_penalties(double raw_error, bool used_fs, int n_b, double fs_penalty = 1.1,
                       double per_base_penalty = 0.02);

struct RoundSummary {
    int round = 0;
    std::vector<std::string> survivors;
    std::size_t evaluations = 0;
};

struct SearchReport {
    std::string champion_algorithm;
    nlohmann::json champion_combination;
    double champion_estimate = 1.0;  // final-CV mean (or prev estimate without T4)
    bool champion_used_fs = false;
    std::string champion_fs_outcome;  // "none", "selected", "all", ...
    std::vector<RoundSummary> rounds;
    std::size_t distinct_combinations_tested = 0;
    bool truncated = false;
    double elapsed = 0.0;
    nlohmann::json config;

    nlohmann::json to_json() const;
};

struct SearchResult {
    SearchReport report;
    SavedModel model;
};

// The five-round progressive-sampling search. Writes every decision to
// `trace`; deterministic for a fixed (dataset, config) under the virtual
// clock.
SearchResult run_search(const Dataset& data, const SearchConfig& config, TraceSink& trace);

}  // namespace psbo
