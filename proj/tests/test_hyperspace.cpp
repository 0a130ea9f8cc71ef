#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "psbo/error.hpp"
#include "psbo/hyperspace.hpp"
#include "psbo/learnzoo.hpp"
#include "psbo/rules.hpp"

using namespace psbo;

namespace {

ParamSpace svm_like_space() {
    ParamSpace s("svm_like");
    s.add(HyperParam::categorical("kernel", {"linear", "rbf"}, "linear"));
    s.add(HyperParam::numeric("c", 1e-3, 1e3, 1.0, ParamScale::log));
    s.add(HyperParam::numeric("gamma", 1e-4, 10.0, 0.1, ParamScale::log).when("kernel", {"rbf"}));
    return s;
}

}  // namespace

TEST_CASE("default combinations resolve conditionals from parent defaults") {
    ParamSpace knn("knn_like");
    knn.add(HyperParam::numeric("k", 1, 25, 5, ParamScale::linear, true));
    knn.add(HyperParam::categorical("weighting", {"uniform", "distance"}, "uniform"));
    const Combination c = default_combination(knn);
    CHECK(c.values[0].num == 5.0);
    CHECK(c.values[1].cat == "uniform");

    const Combination s = default_combination(svm_like_space());
    CHECK(s.values[0].cat == "linear");
    CHECK(s.values[2].is_inactive());  // gamma needs kernel=rbf
}

TEST_CASE("random combinations respect activation and ranges") {
    const ParamSpace space = svm_like_space();
    Rng rng(5);
    int rbf_seen = 0;
    for (int i = 0; i < 500; ++i) {
        const Combination c = random_combination(space, rng);
        if (c.values[0].cat == "rbf") {
            ++rbf_seen;
            CHECK(!c.values[2].is_inactive());
            CHECK(c.values[2].num >= 1e-4);
            CHECK(c.values[2].num <= 10.0);
        } else {
            CHECK(c.values[2].is_inactive());
        }
        CHECK(c.values[1].num >= 1e-3);
        CHECK(c.values[1].num <= 1e3);
    }
    CHECK(rbf_seen > 150);
    CHECK(rbf_seen < 350);
}

TEST_CASE("random sampling of an empty space yields the empty combination") {
    ParamSpace empty("zeror_like");
    Rng rng(1);
    const Combination c = random_combination(empty, rng);
    CHECK(c.values.empty());
    CHECK(c == default_combination(empty));
}

TEST_CASE("log-scale sampling is log-uniform (Kolmogorov-Smirnov)") {
    ParamSpace s("one");
    s.add(HyperParam::numeric("v", 1.0, 100.0, 10.0, ParamScale::log));
    Rng rng(12345);
    const int n = 10000;
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) {
        const Combination c = random_combination(s, rng);
        u[static_cast<std::size_t>(i)] = std::log(c.values[0].num) / std::log(100.0);
    }
    std::sort(u.begin(), u.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double ecdf_hi = static_cast<double>(i + 1) / n;
        const double ecdf_lo = static_cast<double>(i) / n;
        ks = std::max({ks, std::abs(ecdf_hi - u[static_cast<std::size_t>(i)]),
                       std::abs(u[static_cast<std::size_t>(i)] - ecdf_lo)});
    }
    // 1% critical value for n = 10^4 is about 0.0163.
    CHECK(ks < 0.0163);
}

TEST_CASE("hamming distance: 1% rule on the declared scale") {
    ParamSpace s("lin");
    s.add(HyperParam::numeric("v", 0.0, 100.0, 50.0));
    auto combo = [&](double v) {
        Combination c = default_combination(s);
        c.values[0] = ParamValue::number(v);
        return c;
    };
    CHECK(hamming_distance(s, combo(50.0), combo(50.0)) == 0);
    CHECK(hamming_distance(s, combo(50.0), combo(50.5)) == 0);  // 0.5 <= 1% of 100
    CHECK(hamming_distance(s, combo(50.0), combo(51.0)) == 0);  // exactly 1%: identical
    CHECK(hamming_distance(s, combo(50.0), combo(52.0)) == 1);  // 2 > 1
}

TEST_CASE("hamming distance counts activity differences") {
    const ParamSpace space = svm_like_space();
    Combination a = default_combination(space);
    a.values[0] = ParamValue::category("rbf");
    a.values[2] = ParamValue::number(0.1);
    const Combination b = default_combination(space);  // linear, gamma inactive
    CHECK(hamming_distance(space, a, b) == 2);
    CHECK(hamming_distance(space, b, a) == 2);
    CHECK(hamming_distance(space, a, a) == 0);
}

TEST_CASE("hamming distance is a metric on grid-valued combinations") {
    // Numeric values drawn from a grid spaced > 1% of range apart make the
    // per-parameter comparison a discrete metric, so the triangle
    // inequality must hold exactly.
    const ParamSpace space = svm_like_space();
    Rng rng(77);
    auto grid_combo = [&] {
        Combination c = random_combination(space, rng);
        for (std::size_t i = 0; i < space.size(); ++i) {
            if (c.values[i].is_inactive() || space.param(i).kind != ParamKind::numeric) continue;
            const HyperParam& p = space.param(i);
            const int step = static_cast<int>(rng.uniform_int(21));
            const double lo = std::log(p.min), hi = std::log(p.max);
            c.values[i] = ParamValue::number(std::exp(lo + (hi - lo) * step / 20.0));
        }
        return c;
    };
    for (int trial = 0; trial < 500; ++trial) {
        const Combination a = grid_combo(), b = grid_combo(), c = grid_combo();
        const int ab = hamming_distance(space, a, b);
        const int bc = hamming_distance(space, b, c);
        const int ac = hamming_distance(space, a, c);
        CHECK(ab == hamming_distance(space, b, a));
        CHECK(ac <= ab + bc);
        CHECK(ab <= static_cast<int>(space.size()));
        if (ab == 0) CHECK(hamming_distance(space, b, a) == 0);
    }
}

TEST_CASE("mutate_one changes activity consistently") {
    const ParamSpace space = svm_like_space();
    Rng rng(9);
    for (int i = 0; i < 300; ++i) {
        const Combination base = random_combination(space, rng);
        const Combination mutated = mutate_one(space, base, rng);
        for (std::size_t p = 0; p < space.size(); ++p) {
            const bool active = is_active(space, mutated.values, p);
            CHECK(active == !mutated.values[p].is_inactive());
        }
    }
}

TEST_CASE("combination json round-trip keeps the inactive marker") {
    const ParamSpace space = svm_like_space();
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Combination c = random_combination(space, rng);
        const nlohmann::json j = combination_to_json(space, c);
        if (c.values[2].is_inactive()) CHECK(j.at("gamma") == kInactiveMarker);
        const Combination back = combination_from_json(space, j);
        CHECK(hamming_distance(space, c, back) == 0);
        CHECK(combination_hash(space, c) == combination_hash(space, back));
    }
}

TEST_CASE("spaces load from their json declaration") {
    const nlohmann::json j = {
        {"id", "toy"},
        {"params",
         {{{"name", "kernel"},
           {"kind", "categorical"},
           {"levels", {"a", "b"}},
           {"default", "a"}},
          {{"name", "width"},
           {"kind", "numeric"},
           {"min", 0.5},
           {"max", 8.0},
           {"scale", "log"},
           {"default", 1.0},
           {"condition", {{"parent", "kernel"}, {"values", {"b"}}}}}}}};
    const ParamSpace space = space_from_json(j);
    CHECK(space.size() == 2);
    const Combination c = default_combination(space);
    CHECK(c.values[1].is_inactive());
}

TEST_CASE("space validation rejects bad declarations") {
    ParamSpace s("bad");
    CHECK_THROWS_AS(s.add(HyperParam::numeric("v", 5, 5, 5)), ConfigError);
    CHECK_THROWS_AS(s.add(HyperParam::numeric("w", 0, 10, 5, ParamScale::log)), ConfigError);
    CHECK_THROWS_AS(s.add(HyperParam::categorical("c", {}, "a")), ConfigError);
    CHECK_THROWS_AS(
        s.add(HyperParam::categorical("child", {"x"}, "x").when("absent", {"x"})),
        ConfigError);
}

TEST_CASE("validity rules: shipped rule set") {
    const Registry reg = Registry::standard();
    const RuleSet rules = builtin_rules();
    const DatasetMeta small{100, 10, 3};

    SUBCASE("naive bayes kde + discretization conflict") {
        const AlgorithmEntry* nb = reg.find("naive_bayes");
        Combination c = default_combination(nb->space);
        c.values[*nb->space.index_of("kernel_density")] = ParamValue::category("true");
        c.values[*nb->space.index_of("discretization")] = ParamValue::category("true");
        const Verdict v = check_validity(nb->space, c, small, rules);
        CHECK(v.kind == VerdictKind::invalid);
        CHECK(v.rule_id == "nb-kde-discretization");

        c.values[*nb->space.index_of("discretization")] = ParamValue::category("false");
        CHECK(check_validity(nb->space, c, small, rules).ok());
    }

    SUBCASE("ranker with a subset evaluator is invalid") {
        const AlgorithmEntry* knn = reg.find("knn");
        Combination c = default_combination(knn->space);
        c.values[*knn->space.index_of("fs")] = ParamValue::category("ranker");
        c.values[*knn->space.index_of("fs.evaluator")] = ParamValue::category("cfs_subset");
        c.values[*knn->space.index_of("fs.threshold")] = ParamValue::number(0.5);
        const Verdict v = check_validity(knn->space, c, small, rules);
        CHECK(v.kind == VerdictKind::invalid);
    }

    SUBCASE("pca evaluator above 2000 features is infeasible") {
        const AlgorithmEntry* knn = reg.find("knn");
        Combination c = default_combination(knn->space);
        c.values[*knn->space.index_of("fs")] = ParamValue::category("ranker");
        c.values[*knn->space.index_of("fs.evaluator")] = ParamValue::category("pca");
        c.values[*knn->space.index_of("fs.threshold")] = ParamValue::number(0.5);
        CHECK(check_validity(knn->space, c, DatasetMeta{100, 2500, 2}, rules).kind ==
              VerdictKind::infeasible);
        CHECK(check_validity(knn->space, c, DatasetMeta{100, 2000, 2}, rules).ok());
    }

    SUBCASE("exhaustive output codes with many classes are infeasible") {
        const AlgorithmEntry* svm = reg.find("linear_svm");
        Combination c = default_combination(svm->space);
        c.values[*svm->space.index_of("multiclass")] = ParamValue::category("ecoc_exhaustive");
        CHECK(check_validity(svm->space, c, DatasetMeta{100, 10, 11}, rules).kind ==
              VerdictKind::infeasible);
        CHECK(check_validity(svm->space, c, DatasetMeta{100, 10, 10}, rules).ok());
    }

    SUBCASE("first matching rule wins") {
        RuleSet two;
        Rule r1{"first", VerdictKind::invalid, "first reason", {{"fs", {"ranker"}}}, 0, 0};
        Rule r2{"second", VerdictKind::infeasible, "second reason", {{"fs", {"ranker"}}}, 0, 0};
        two.add(r1);
        two.add(r2);
        const AlgorithmEntry* knn = reg.find("knn");
        Combination c = default_combination(knn->space);
        c.values[*knn->space.index_of("fs")] = ParamValue::category("ranker");
        CHECK(check_validity(knn->space, c, small, two).rule_id == "first");
    }
}

TEST_CASE("rules load from json") {
    RuleSet rules;
    rules.load_json(nlohmann::json::parse(R"([
        {"id": "no-b", "verdict": "invalid", "reason": "b is forbidden",
         "when": [{"param": "kernel", "values": ["rbf"]}]},
        {"id": "too-wide", "verdict": "infeasible", "reason": "too many features",
         "max_features": 100}
    ])"));
    const ParamSpace space = svm_like_space();
    Combination c = default_combination(space);
    CHECK(rules.check(space, c, {10, 10, 2}).ok());
    CHECK(rules.check(space, c, {10, 101, 2}).kind == VerdictKind::infeasible);
    c.values[0] = ParamValue::category("rbf");
    CHECK(rules.check(space, c, {10, 10, 2}).kind == VerdictKind::invalid);
}
