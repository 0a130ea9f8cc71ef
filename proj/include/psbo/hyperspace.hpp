#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psbo/rng.hpp"

namespace psbo {

inline constexpr const char* kInactiveMarker = "__inactive__";

struct ParamValue {
    enum class Kind { inactive, number, category };
    Kind kind = Kind::inactive;
    double num = 0.0;
    std::string cat;

    static ParamValue inactive() { return {}; }
    static ParamValue number(double v) { return {Kind::number, v, {}}; }
    static ParamValue category(std::string level) { return {Kind::category, 0.0, std::move(level)}; }

    bool is_inactive() const { return kind == Kind::inactive; }
    bool operator==(const ParamValue& o) const {
        if (kind != o.kind) return false;
        if (kind == Kind::number) return num == o.num;
        if (kind == Kind::category) return cat == o.cat;
        return true;
    }
};

enum class ParamScale { linear, log };
enum class ParamKind { numeric, categorical };

struct Condition {
    std::string parent;
    std::vector<std::string> values;  // activating parent levels
};

struct HyperParam {
    std::string name;
    ParamKind kind = ParamKind::numeric;
    double min = 0.0, max = 1.0;
    ParamScale scale = ParamScale::linear;
    bool integer = false;
    std::vector<std::string> levels;
    ParamValue default_value;
    std::optional<Condition> condition;

    static HyperParam numeric(std::string name, double min, double max, double def,
                              ParamScale scale = ParamScale::linear, bool integer = false);
    static HyperParam categorical(std::string name, std::vector<std::string> levels,
                                  std::string def);
    HyperParam& when(std::string parent, std::vector<std::string> values);
};

// An algorithm's (or the feature-selection fragment's) hyper-parameter
// space. Parameters must be declared parents-first; conditions therefore
// form a DAG by construction and activation resolves in a single pass.
class ParamSpace {
public:
    ParamSpace() = default;
    explicit ParamSpace(std::string id) : id_(std::move(id)) {}

    const std::string& id() const { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }

    void add(HyperParam param);
    std::size_t size() const { return params_.size(); }
    const HyperParam& param(std::size_t i) const { return params_[i]; }
    const std::vector<HyperParam>& params() const { return params_; }
    std::optional<std::size_t> index_of(const std::string& name) const;

    // Appends a copy of `inner` with names prefixed "<prefix>." and
    // activation gated on selector == level (chained through the inner
    // parameters' own conditions).
    void embed(const ParamSpace& inner, const std::string& prefix, const std::string& selector,
               const std::string& level);

    // Position of a numeric value on the parameter's declared scale,
    // normalized to [0, 1].
    double scaled(std::size_t i, double value) const;

private:
    std::string id_;
    std::vector<HyperParam> params_;
    std::map<std::string, std::size_t> index_;
};

// One assignment of values to every parameter of a space; parameters whose
// conditions are unsatisfied carry the inactive marker.
struct Combination {
    std::string space_id;
    std::vector<ParamValue> values;

    bool operator==(const Combination& o) const = default;
};

Combination default_combination(const ParamSpace& space);
Combination random_combination(const ParamSpace& space, Rng& rng);

// True when the parameter's condition chain is satisfied by `values`.
bool is_active(const ParamSpace& space, const std::vector<ParamValue>& values, std::size_t i);

// Number of differing parameters. Numeric values differ when they are more
// than 1% of the range apart on the declared scale; a parameter active on
// exactly one side always differs.
int hamming_distance(const ParamSpace& space, const Combination& a, const Combination& b);

// Resamples one active parameter and re-resolves the activation cascade;
// newly activated children get random values.
Combination mutate_one(const ParamSpace& space, const Combination& base, Rng& rng);

// Copies the named parameters of `combo` (a combination of `from`) into a
// combination of `into`. Used to extract feature-selection blocks.
Combination project(const ParamSpace& from, const Combination& combo, const ParamSpace& into);

nlohmann::json combination_to_json(const ParamSpace& space, const Combination& combo);
Combination combination_from_json(const ParamSpace& space, const nlohmann::json& j);
std::uint64_t combination_hash(const ParamSpace& space, const Combination& combo);

// Space declarations loadable from JSON (see README for the schema).
ParamSpace space_from_json(const nlohmann::json& j);

}  // namespace psbo
