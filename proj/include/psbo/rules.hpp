#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psbo/hyperspace.hpp"

namespace psbo {

struct DatasetMeta {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t classes = 0;
};

enum class VerdictKind { ok, invalid, infeasible };

struct Verdict {
    VerdictKind kind = VerdictKind::ok;
    std::string rule_id;
    std::string reason;

    bool ok() const { return kind == VerdictKind::ok; }
};

// Declarative invalid/infeasible rule. A rule matches when every `when`
// clause holds (parameter active with a listed level) and, if set, the
// dataset exceeds the feature/class thresholds.
struct Rule {
    struct Clause {
        std::string param;
        std::vector<std::string> values;
    };

    std::string id;
    VerdictKind verdict = VerdictKind::invalid;
    std::string reason;
    std::vector<Clause> when;
    std::size_t max_features = 0;  // 0 = no threshold; matches when p > max_features
    std::size_t max_classes = 0;   // 0 = no threshold; matches when classes > max_classes

    bool matches(const ParamSpace& space, const Combination& c, const DatasetMeta& meta) const;
};

class RuleSet {
public:
    void add(Rule rule) { rules_.push_back(std::move(rule)); }
    const std::vector<Rule>& rules() const { return rules_; }

    // First matching rule wins, in registration order.
    Verdict check(const ParamSpace& space, const Combination& c, const DatasetMeta& meta) const;

    void load_json(const nlohmann::json& j);

private:
    std::vector<Rule> rules_;
};

inline Verdict check_validity(const ParamSpace& space, const Combination& c,
                              const DatasetMeta& meta, const RuleSet& rules) {
    return rules.check(space, c, meta);
}

}  // namespace psbo
