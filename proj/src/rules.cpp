#include "psbo/rules.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "psbo/error.hpp"

namespace psbo {

bool Rule::matches(const ParamSpace& space, const Combination& c, const DatasetMeta& meta) const {
    for (const Clause& clause : when) {
        const auto idx = space.index_of(clause.param);
        if (!idx) return false;
        const ParamValue& v = c.values[*idx];
        if (v.kind != ParamValue::Kind::category) return false;
        if (std::find(clause.values.begin(), clause.values.end(), v.cat) == clause.values.end())
            return false;
    }
    if (max_features > 0 && meta.p <= max_features) return false;
    if (max_classes > 0 && meta.classes <= max_classes) return false;
    return true;
}

Verdict RuleSet::check(const ParamSpace& space, const Combination& c,
                       const DatasetMeta& meta) const {
    for (const Rule& rule : rules_) {
        if (rule.matches(space, c, meta)) return {rule.verdict, rule.id, rule.reason};
    }
    return {};
}

void RuleSet::load_json(const nlohmann::json& j) {
    for (const auto& rj : j) {
        Rule rule;
        rule.id = rj.at("id").get<std::string>();
        const std::string verdict = rj.at("verdict").get<std::string>();
        if (verdict == "invalid")
            rule.verdict = VerdictKind::invalid;
        else if (verdict == "infeasible")
            rule.verdict = VerdictKind::infeasible;
        else
            throw ConfigError("rule '" + rule.id + "': verdict must be invalid or infeasible");
        rule.reason = rj.value("reason", rule.id);
        if (rj.contains("when")) {
            for (const auto& cj : rj.at("when")) {
                rule.when.push_back({cj.at("param").get<std::string>(),
                                     cj.at("values").get<std::vector<std::string>>()});
            }
        }
        rule.max_features = rj.value("max_features", 0u);
        rule.max_classes = rj.value("max_classes", 0u);
        add(std::move(rule));
    }
}

}  // namespace psbo
