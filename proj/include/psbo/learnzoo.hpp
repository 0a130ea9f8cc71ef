#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psbo/clock.hpp"
#include "psbo/dataset.hpp"
#include "psbo/hyperspace.hpp"
#include "psbo/rules.hpp"

namespace psbo {

enum class AlgKind { base, meta, ensemble };

// A trained classifier. Immutable after training; predictions work on any
// dataset with the training schema.
class Model {
public:
    virtual ~Model() = default;
    virtual int predict(const Dataset& d, std::uint32_t row) const = 0;
    // Per-row prediction cost estimate in elementary operations, for the
    // virtual clock.
    virtual double predict_ops() const = 0;
    virtual nlohmann::json to_json() const = 0;
};

std::unique_ptr<Model> model_from_json(const nlohmann::json& j);

enum class TrainStatus { complete, partial, aborted };

struct TrainOutcome {
    TrainStatus status = TrainStatus::aborted;
    std::unique_ptr<Model> model;
    std::string diagnostic;
};

struct TrainRequest {
    const Dataset& data;
    const std::vector<std::uint32_t>& rows;
    std::vector<std::uint32_t> features;  // columns the model may use
    Stopwatch& meter;
    double budget;  // L_t, in the meter's units
    std::uint64_t seed;
};

struct AlgorithmEntry {
    std::string id;
    AlgKind kind = AlgKind::base;
    bool protected_in_early_rounds = false;
    ParamSpace model_space;  // the algorithm's own hyper-parameters
    ParamSpace space;        // model_space + FS fragment (+ inner base spaces)
    std::vector<std::string> inner_bases;  // meta/ensemble: selectable base ids
};

class Registry {
public:
    // The full zoo: every base algorithm plus meta/ensemble entries whose
    // inner slots may select any base.
    static Registry standard();
    static std::vector<AlgorithmEntry> standard_bases();
    // Meta/ensemble entries restricted to the given surviving bases (their
    // spaces embed only those bases' parameters).
    static std::vector<AlgorithmEntry> standard_metas(const std::vector<AlgorithmEntry>& bases);

    void add(AlgorithmEntry entry);
    const std::vector<AlgorithmEntry>& entries() const { return entries_; }
    const AlgorithmEntry* find(const std::string& id) const;

private:
    std::vector<AlgorithmEntry> entries_;
};

// The invalid/infeasible rules of the shipped zoo (value conflicts,
// feature-count and class-count infeasibilities).
RuleSet builtin_rules();

// Number of base algorithms inside a meta/ensemble combination; 0 for base
// algorithms.
int base_count(const AlgorithmEntry& entry, const Combination& c);

// Trains under the L_t budget. Anytime learners (forests, boosting,
// gradient descent) return their best partial model when the budget runs
// out; non-anytime learners abort. Internal learner failures surface as
// aborted outcomes, never exceptions.
TrainOutcome train_model(const Registry& reg, const AlgorithmEntry& entry, const Combination& c,
                         const TrainRequest& req);

// Misclassification fraction on `rows`; charges prediction cost.
double evaluate_error(const Model& model, const Dataset& d, const std::vector<std::uint32_t>& rows,
                      Stopwatch& meter);

}  // namespace psbo
