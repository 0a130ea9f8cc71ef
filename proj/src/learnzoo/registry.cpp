#include <algorithm>

#include "internal.hpp"
#include "psbo/error.hpp"
#include "psbo/feature_selection.hpp"
#include "psbo/learnzoo.hpp"

namespace psbo {

namespace {

void append_fs_fragment(ParamSpace& space) {
    for (const HyperParam& p : fs_space().params()) space.add(p);
}

AlgorithmEntry make_base(std::string id, ParamSpace model_space, bool protected_flag = false) {
    AlgorithmEntry e;
    e.id = std::move(id);
    e.kind = AlgKind::base;
    e.protected_in_early_rounds = protected_flag;
    model_space.set_id(e.id);
    e.model_space = model_space;
    e.space = std::move(model_space);
    append_fs_fragment(e.space);
    return e;
}

std::vector<std::string> ids_of(const std::vector<AlgorithmEntry>& bases) {
    std::vector<std::string> ids;
    ids.reserve(bases.size());
    for (const auto& b : bases) ids.push_back(b.id);
    return ids;
}

// Slot defaults favour diverse, reliable members.
std::string preferred_base(const std::vector<std::string>& ids, std::size_t rank) {
    static const std::vector<std::string> preference = {
        "cart", "random_forest", "naive_bayes", "knn", "logistic_regression",
        "linear_svm", "gradient_boosting", "zeror"};
    std::vector<std::string> ordered;
    for (const auto& p : preference)
        if (std::find(ids.begin(), ids.end(), p) != ids.end()) ordered.push_back(p);
    for (const auto& id : ids)
        if (std::find(ordered.begin(), ordered.end(), id) == ordered.end()) ordered.push_back(id);
    return ordered[rank % ordered.size()];
}

}  // namespace

std::vector<AlgorithmEntry> Registry::standard_bases() {
    std::vector<AlgorithmEntry> bases;

    bases.push_back(make_base("zeror", ParamSpace{}));

    {
        ParamSpace s;
        s.add(HyperParam::numeric("k", 1, 25, 5, ParamScale::linear, true));
        s.add(HyperParam::categorical("weighting", {"uniform", "distance"}, "uniform"));
        bases.push_back(make_base("knn", std::move(s)));
    }
    {
        ParamSpace s;
        s.add(HyperParam::categorical("kernel_density", {"false", "true"}, "false"));
        s.add(HyperParam::categorical("discretization", {"false", "true"}, "false"));
        bases.push_back(make_base("naive_bayes", std::move(s)));
    }
    {
        ParamSpace s;
        s.add(HyperParam::numeric("max_depth", 1, 30, 10, ParamScale::log, true));
        s.add(HyperParam::numeric("min_leaf", 1, 20, 2, ParamScale::log, true));
        s.add(HyperParam::categorical("criterion", {"gini", "entropy"}, "gini"));
        bases.push_back(make_base("cart", std::move(s)));
    }
    {
        ParamSpace s;
        s.add(HyperParam::numeric("trees", 10, 150, 50, ParamScale::log, true));
        s.add(HyperParam::numeric("max_depth", 2, 30, 15, ParamScale::log, true));
        s.add(HyperParam::categorical("mtry", {"sqrt", "log2", "all"}, "sqrt"));
        bases.push_back(make_base("random_forest", std::move(s), true));
    }
    {
        ParamSpace s;
        s.add(HyperParam::numeric("c", 1e-3, 1e3, 1.0, ParamScale::log));
        s.add(HyperParam::categorical("multiclass", {"ovr", "ecoc_exhaustive"}, "ovr"));
        bases.push_back(make_base("linear_svm", std::move(s), true));
    }
    {
        ParamSpace s;
        s.add(HyperParam::numeric("l2", 1e-8, 10, 1e-4, ParamScale::log));
        s.add(HyperParam::numeric("learning_rate", 1e-3, 1.0, 0.1, ParamScale::log));
        bases.push_back(make_base("logistic_regression", std::move(s)));
    }
    {
        ParamSpace s;
        s.add(HyperParam::numeric("rounds", 10, 100, 50, ParamScale::log, true));
        s.add(HyperParam::numeric("depth", 1, 6, 3, ParamScale::linear, true));
        s.add(HyperParam::numeric("learning_rate", 0.01, 0.5, 0.1, ParamScale::log));
        bases.push_back(make_base("gradient_boosting", std::move(s)));
    }
    return bases;
}

std::vector<AlgorithmEntry> Registry::standard_metas(const std::vector<AlgorithmEntry>& bases) {
    std::vector<AlgorithmEntry> metas;
    if (bases.empty()) return metas;
    const std::vector<std::string> ids = ids_of(bases);

    {
        AlgorithmEntry e;
        e.id = "adaboost";
        e.kind = AlgKind::meta;
        e.inner_bases = ids;
        ParamSpace s("adaboost");
        s.add(HyperParam::numeric("stages", 5, 50, 20, ParamScale::log, true));
        s.add(HyperParam::categorical("base", ids, preferred_base(ids, 0)));
        for (const auto& b : bases) s.embed(b.model_space, "base." + b.id, "base", b.id);
        e.model_space = s;
        e.space = std::move(s);
        append_fs_fragment(e.space);
        metas.push_back(std::move(e));
    }
    {
        AlgorithmEntry e;
        e.id = "voting";
        e.kind = AlgKind::ensemble;
        e.inner_bases = ids;
        ParamSpace s("voting");
        s.add(HyperParam::categorical("members", {"2", "3"}, "3"));
        for (int slot = 1; slot <= 3; ++slot) {
            const std::string name = "slot" + std::to_string(slot);
            HyperParam selector = HyperParam::categorical(
                name, ids, preferred_base(ids, static_cast<std::size_t>(slot - 1)));
            if (slot == 3) selector.when("members", {"3"});
            s.add(std::move(selector));
            for (const auto& b : bases) s.embed(b.model_space, name + "." + b.id, name, b.id);
        }
        e.model_space = s;
        e.space = std::move(s);
        append_fs_fragment(e.space);
        metas.push_back(std::move(e));
    }
    return metas;
}

Registry Registry::standard() {
    Registry reg;
    auto bases = standard_bases();
    auto metas = standard_metas(bases);
    for (auto& b : bases) reg.add(std::move(b));
    for (auto& m : metas) reg.add(std::move(m));
    return reg;
}

void Registry::add(AlgorithmEntry entry) {
    if (find(entry.id)) throw Error("duplicate algorithm id '" + entry.id + "'");
    entries_.push_back(std::move(entry));
}

const AlgorithmEntry* Registry::find(const std::string& id) const {
    for (const auto& e : entries_)
        if (e.id == id) return &e;
    return nullptr;
}

int base_count(const AlgorithmEntry& entry, const Combination& c) {
    switch (entry.kind) {
        case AlgKind::base:
            return 0;
        case AlgKind::meta:
            return 1;
        case AlgKind::ensemble: {
            const auto idx = entry.space.index_of("members");
            if (!idx) return 2;
            return std::stoi(c.values[*idx].cat);
        }
    }
    return 0;
}

RuleSet builtin_rules() {
    RuleSet rules;

    // Value conflicts: naive Bayes cannot use a kernel density estimator
    // and supervised discretization at the same time, in any context the
    // algorithm appears (standalone, meta slot, ensemble slots).
    const std::vector<std::string> nb_prefixes = {"", "base.naive_bayes.", "slot1.naive_bayes.",
                                                  "slot2.naive_bayes.", "slot3.naive_bayes."};
    for (std::size_t i = 0; i < nb_prefixes.size(); ++i) {
        Rule r;
        r.id = i == 0 ? "nb-kde-discretization" : "nb-kde-discretization-" + std::to_string(i);
        r.verdict = VerdictKind::invalid;
        r.reason = "naive Bayes cannot combine kernel density estimation with supervised "
                   "discretization";
        r.when = {{nb_prefixes[i] + "kernel_density", {"true"}},
                  {nb_prefixes[i] + "discretization", {"true"}}};
        rules.add(std::move(r));
    }

    {
        Rule r;
        r.id = "fs-ranker-subset-evaluator";
        r.verdict = VerdictKind::invalid;
        r.reason = "the ranker search method is not compatible with a feature subset evaluator";
        r.when = {{"fs", {"ranker"}}, {"fs.evaluator", {"cfs_subset"}}};
        rules.add(std::move(r));
    }
    {
        Rule r;
        r.id = "fs-subset-search-single-evaluator";
        r.verdict = VerdictKind::invalid;
        r.reason = "subset search methods require a feature subset evaluator";
        r.when = {{"fs", {"greedy_forward", "best_first"}},
                  {"fs.evaluator", {"info_gain", "chi2", "correlation", "pca"}}};
        rules.add(std::move(r));
    }

    // Feature-count infeasibility at 2,000 features.
    {
        Rule r;
        r.id = "fs-pca-feature-count";
        r.verdict = VerdictKind::infeasible;
        r.reason = "principal component analysis is too time-consuming above 2,000 features";
        r.when = {{"fs.evaluator", {"pca"}}};
        r.max_features = 2000;
        rules.add(std::move(r));
    }
    {
        Rule r;
        r.id = "fs-cfs-feature-count";
        r.verdict = VerdictKind::infeasible;
        r.reason = "subset merit evaluation is too time-consuming above 2,000 features";
        r.when = {{"fs.evaluator", {"cfs_subset"}}};
        r.max_features = 2000;
        rules.add(std::move(r));
    }

    // Class-count infeasibility: exhaustive error-correcting output codes
    // grow exponentially with the class count.
    const std::vector<std::string> svm_prefixes = {"", "base.linear_svm.", "slot1.linear_svm.",
                                                   "slot2.linear_svm.", "slot3.linear_svm."};
    for (std::size_t i = 0; i < svm_prefixes.size(); ++i) {
        Rule r;
        r.id = i == 0 ? "svm-ecoc-class-count" : "svm-ecoc-class-count-" + std::to_string(i);
        r.verdict = VerdictKind::infeasible;
        r.reason = "exhaustive error-correcting codes are infeasible with more than 10 classes";
        r.when = {{svm_prefixes[i] + "multiclass", {"ecoc_exhaustive"}}};
        r.max_classes = 10;
        rules.add(std::move(r));
    }
    return rules;
}

}  // namespace psbo
