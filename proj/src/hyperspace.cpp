#include "psbo/hyperspace.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "psbo/error.hpp"

namespace psbo {

HyperParam HyperParam::numeric(std::string name, double min, double max, double def,
                               ParamScale scale, bool integer) {
    HyperParam p;
    p.name = std::move(name);
    p.kind = ParamKind::numeric;
    p.min = min;
    p.max = max;
    p.scale = scale;
    p.integer = integer;
    p.default_value = ParamValue::number(def);
    return p;
}

HyperParam HyperParam::categorical(std::string name, std::vector<std::string> levels,
                                   std::string def) {
    HyperParam p;
    p.name = std::move(name);
    p.kind = ParamKind::categorical;
    p.levels = std::move(levels);
    p.default_value = ParamValue::category(std::move(def));
    return p;
}

HyperParam& HyperParam::when(std::string parent, std::vector<std::string> values) {
    condition = Condition{std::move(parent), std::move(values)};
    return *this;
}

void ParamSpace::add(HyperParam param) {
    if (index_.count(param.name))
        throw ConfigError("duplicate parameter '" + param.name + "' in space '" + id_ + "'");
    if (param.kind == ParamKind::numeric) {
        if (!(param.min < param.max))
            throw ConfigError("parameter '" + param.name + "': min must be < max");
        if (param.scale == ParamScale::log && !(param.min > 0))
            throw ConfigError("parameter '" + param.name + "': log scale requires min > 0");
        if (param.default_value.kind != ParamValue::Kind::number ||
            param.default_value.num < param.min || param.default_value.num > param.max)
            throw ConfigError("parameter '" + param.name + "': default outside [min, max]");
    } else {
        if (param.levels.empty())
            throw ConfigError("parameter '" + param.name + "': categorical without levels");
        for (const auto& lv : param.levels)
            if (lv == kInactiveMarker)
                throw ConfigError("parameter '" + param.name + "': reserved level name");
        if (param.default_value.kind != ParamValue::Kind::category ||
            std::find(param.levels.begin(), param.levels.end(), param.default_value.cat) ==
                param.levels.end())
            throw ConfigError("parameter '" + param.name + "': default not among levels");
    }
    if (param.condition) {
        auto parent = index_.find(param.condition->parent);
        if (parent == index_.end())
            throw ConfigError("parameter '" + param.name + "': condition parent '" +
                              param.condition->parent + "' must be declared first");
        const HyperParam& pp = params_[parent->second];
        if (pp.kind != ParamKind::categorical)
            throw ConfigError("parameter '" + param.name + "': condition parent must be categorical");
        for (const auto& v : param.condition->values)
            if (std::find(pp.levels.begin(), pp.levels.end(), v) == pp.levels.end())
                throw ConfigError("parameter '" + param.name + "': activating value '" + v +
                                  "' is not a level of '" + pp.name + "'");
    }
    index_.emplace(param.name, params_.size());
    params_.push_back(std::move(param));
}

std::optional<std::size_t> ParamSpace::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void ParamSpace::embed(const ParamSpace& inner, const std::string& prefix,
                       const std::string& selector, const std::string& level) {
    for (const HyperParam& src : inner.params()) {
        HyperParam p = src;
        p.name = prefix + "." + src.name;
        if (src.condition) {
            p.condition = Condition{prefix + "." + src.condition->parent, src.condition->values};
        } else {
            p.condition = Condition{selector, {level}};
        }
        add(std::move(p));
    }
}

double ParamSpace::scaled(std::size_t i, double value) const {
    const HyperParam& p = params_[i];
    if (p.scale == ParamScale::log)
        return (std::log(value) - std::log(p.min)) / (std::log(p.max) - std::log(p.min));
    return (value - p.min) / (p.max - p.min);
}

bool is_active(const ParamSpace& space, const std::vector<ParamValue>& values, std::size_t i) {
    const HyperParam& p = space.param(i);
    if (!p.condition) return true;
    const auto parent = space.index_of(p.condition->parent);
    const ParamValue& pv = values[*parent];
    if (pv.kind != ParamValue::Kind::category) return false;
    return std::find(p.condition->values.begin(), p.condition->values.end(), pv.cat) !=
           p.condition->values.end();
}

namespace {

double sample_numeric(const HyperParam& p, Rng& rng) {
    double v = p.scale == ParamScale::log ? rng.log_uniform(p.min, p.max) : rng.uniform(p.min, p.max);
    if (p.integer) v = std::clamp(std::round(v), std::ceil(p.min), std::floor(p.max));
    return v;
}

ParamValue sample_value(const HyperParam& p, Rng& rng) {
    if (p.kind == ParamKind::numeric) return ParamValue::number(sample_numeric(p, rng));
    return ParamValue::category(p.levels[rng.uniform_int(p.levels.size())]);
}

}  // namespace

Combination default_combination(const ParamSpace& space) {
    Combination c;
    c.space_id = space.id();
    c.values.resize(space.size());
    for (std::size_t i = 0; i < space.size(); ++i)
        c.values[i] = is_active(space, c.values, i) ? space.param(i).default_value
                                                    : ParamValue::inactive();
    return c;
}

Combination random_combination(const ParamSpace& space, Rng& rng) {
    Combination c;
    c.space_id = space.id();
    c.values.resize(space.size());
    for (std::size_t i = 0; i < space.size(); ++i)
        c.values[i] = is_active(space, c.values, i) ? sample_value(space.param(i), rng)
                                                    : ParamValue::inactive();
    return c;
}

int hamming_distance(const ParamSpace& space, const Combination& a, const Combination& b) {
    if (a.space_id != b.space_id || a.values.size() != space.size() ||
        b.values.size() != space.size())
        throw Error("hamming_distance: combinations from different spaces");
    int distance = 0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const ParamValue& va = a.values[i];
        const ParamValue& vb = b.values[i];
        if (va.is_inactive() != vb.is_inactive()) {
            ++distance;
            continue;
        }
        if (va.is_inactive()) continue;  // inactive on both sides: same
        const HyperParam& p = space.param(i);
        if (p.kind == ParamKind::categorical) {
            if (va.cat != vb.cat) ++distance;
        } else {
            // Strictly more than 1% of the range apart on the declared
            // scale (exactly 1% counts as identical; the epsilon absorbs
            // rounding in the scaling arithmetic).
            if (std::abs(space.scaled(i, va.num) - space.scaled(i, vb.num)) > 0.01 + 1e-12)
                ++distance;
        }
    }
    return distance;
}

Combination mutate_one(const ParamSpace& space, const Combination& base, Rng& rng) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < space.size(); ++i)
        if (!base.values[i].is_inactive()) active.push_back(i);
    if (active.empty()) return base;

    Combination c = base;
    const std::size_t target = active[rng.uniform_int(active.size())];
    const HyperParam& p = space.param(target);
    if (p.kind == ParamKind::categorical && p.levels.size() > 1) {
        // Prefer a different level so the mutation actually moves.
        std::string level;
        do {
            level = p.levels[rng.uniform_int(p.levels.size())];
        } while (level == base.values[target].cat);
        c.values[target] = ParamValue::category(level);
    } else {
        c.values[target] = sample_value(p, rng);
    }

    // Re-resolve activation downstream of the change.
    for (std::size_t i = 0; i < space.size(); ++i) {
        const bool active_now = is_active(space, c.values, i);
        if (active_now && c.values[i].is_inactive())
            c.values[i] = sample_value(space.param(i), rng);
        else if (!active_now)
            c.values[i] = ParamValue::inactive();
    }
    return c;
}

Combination project(const ParamSpace& from, const Combination& combo, const ParamSpace& into) {
    Combination out;
    out.space_id = into.id();
    out.values.resize(into.size());
    for (std::size_t i = 0; i < into.size(); ++i) {
        const auto src = from.index_of(into.param(i).name);
        if (!src)
            throw Error("project: parameter '" + into.param(i).name + "' missing from space '" +
                        from.id() + "'");
        out.values[i] = combo.values[*src];
    }
    return out;
}

nlohmann::json combination_to_json(const ParamSpace& space, const Combination& combo) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < space.size(); ++i) {
        const ParamValue& v = combo.values[i];
        const std::string& name = space.param(i).name;
        if (v.is_inactive())
            j[name] = kInactiveMarker;
        else if (v.kind == ParamValue::Kind::number)
            j[name] = v.num;
        else
            j[name] = v.cat;
    }
    return j;
}

Combination combination_from_json(const ParamSpace& space, const nlohmann::json& j) {
    Combination c;
    c.space_id = space.id();
    c.values.resize(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const HyperParam& p = space.param(i);
        if (!j.contains(p.name)) throw Error("combination missing parameter '" + p.name + "'");
        const auto& v = j.at(p.name);
        if (v.is_string() && v.get<std::string>() == kInactiveMarker) {
            c.values[i] = ParamValue::inactive();
        } else if (p.kind == ParamKind::numeric) {
            if (!v.is_number()) throw Error("parameter '" + p.name + "' expects a number");
            c.values[i] = ParamValue::number(v.get<double>());
        } else {
            if (!v.is_string()) throw Error("parameter '" + p.name + "' expects a level name");
            c.values[i] = ParamValue::category(v.get<std::string>());
        }
    }
    return c;
}

std::uint64_t combination_hash(const ParamSpace& space, const Combination& combo) {
    std::uint64_t h = fnv1a(combo.space_id.data(), combo.space_id.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const ParamValue& v = combo.values[i];
        const auto kind = static_cast<std::uint64_t>(v.kind);
        h = fnv1a(&kind, sizeof kind, h);
        if (v.kind == ParamValue::Kind::number) {
            h = fnv1a(&v.num, sizeof v.num, h);
        } else if (v.kind == ParamValue::Kind::category) {
            h = fnv1a(v.cat.data(), v.cat.size(), h);
        }
    }
    return h;
}

ParamSpace space_from_json(const nlohmann::json& j) {
    ParamSpace space(j.at("id").get<std::string>());
    for (const auto& pj : j.at("params")) {
        HyperParam p;
        p.name = pj.at("name").get<std::string>();
        const std::string kind = pj.at("kind").get<std::string>();
        if (kind == "numeric") {
            p.kind = ParamKind::numeric;
            p.min = pj.at("min").get<double>();
            p.max = pj.at("max").get<double>();
            p.scale = pj.value("scale", std::string("linear")) == "log" ? ParamScale::log
                                                                        : ParamScale::linear;
            p.integer = pj.value("integer", false);
            p.default_value = ParamValue::number(pj.at("default").get<double>());
        } else if (kind == "categorical") {
            p.kind = ParamKind::categorical;
            p.levels = pj.at("levels").get<std::vector<std::string>>();
            p.default_value = ParamValue::category(pj.at("default").get<std::string>());
        } else {
            throw ConfigError("unknown parameter kind '" + kind + "'");
        }
        if (pj.contains("condition")) {
            p.condition = Condition{pj.at("condition").at("parent").get<std::string>(),
                                    pj.at("condition").at("values").get<std::vector<std::string>>()};
        }
        space.add(std::move(p));
    }
    return space;
}

}  // namespace psbo
