#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "psbo/dataset.hpp"
#include "psbo/error.hpp"
#include "psbo/rng.hpp"
#include "psbo/sampling.hpp"
#include "synth.hpp"

using namespace psbo;

TEST_CASE("rng streams are deterministic and independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(Rng::derive(1, {2, 3}) == Rng::derive(1, {2, 3}));
    CHECK(Rng::derive(1, {2, 3}) != Rng::derive(1, {3, 2}));
}

TEST_CASE("rng uniform_int has no obvious bias at the edges") {
    Rng r(7);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) counts[static_cast<std::size_t>(r.uniform_int(5))]++;
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("csv loader reads the car-style sample") {
    const std::string csv =
        "buying,maint,doors,persons,lug_boot,safety,class\n"
        "vhigh,vhigh,2,2,small,high,unacc\n"
        "high,low,4,4,med,high,acc\n"
        "low,low,2,more,med,high,good\n";
    const Dataset d = parse_dataset(csv, DataFormat::csv, "class");
    CHECK(d.n() == 3);
    CHECK(d.p() == 6);
    for (std::size_t c = 0; c < d.p(); ++c)
        CHECK(d.feature(c).kind == FeatureKind::categorical);
    CHECK(d.class_labels() == std::vector<std::string>{"unacc", "acc", "good"});
}

TEST_CASE("csv loader: minimal numeric input") {
    const Dataset d = parse_dataset("x,y\n1.5,a\n2.25,a\n3.5,b\n4.75,b\n", DataFormat::csv, "y");
    CHECK(d.n() == 4);
    CHECK(d.p() == 1);
    CHECK(d.feature(0).kind == FeatureKind::numeric);
}

TEST_CASE("csv loader: low-cardinality integer columns become categorical") {
    const Dataset d = parse_dataset("doors,age,y\n2,31.5,a\n4,44.25,a\n2,58.5,b\n4,19.75,b\n",
                                    DataFormat::csv, "y");
    CHECK(d.feature(0).kind == FeatureKind::categorical);
    CHECK(d.feature(1).kind == FeatureKind::numeric);
}

TEST_CASE("csv loader rejects a single-class target") {
    CHECK_THROWS_WITH_AS(parse_dataset("x,y\n1,a\n2,a\n", DataFormat::csv, "y"),
                         doctest::Contains("single-class target"), Error);
}

TEST_CASE("csv loader reports missing target column with the available ones") {
    try {
        parse_dataset("x,y\n1,a\n2,b\n", DataFormat::csv, "label");
        FAIL("expected an error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("label") != std::string::npos);
        CHECK(msg.find("x, y") != std::string::npos);
    }
}

TEST_CASE("csv loader flags parse errors with the line number") {
    try {
        parse_dataset("x,y\n1,a\n2\n", DataFormat::csv, "y");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("missing values are imputed at load time") {
    const Dataset d = parse_dataset(
        "a,b,y\n1.5,red,x\n?,red,x\n3.5,?,z\n5.5,blue,z\n", DataFormat::csv, "y");
    CHECK(d.missing_imputed() == 2);
    // Numeric median of {1.5,3.5,5.5} is 3.5; categorical mode of {red,red,blue} is red.
    CHECK(d.value(1, 0) == 3.5);
    CHECK(d.value(2, 1) == 0.0);
}

TEST_CASE("arff subset loader") {
    const std::string arff =
        "% comment\n"
        "@RELATION toy\n"
        "@ATTRIBUTE width numeric\n"
        "@attribute color {red, green}\n"
        "@attribute class {yes, no}\n"
        "@DATA\n"
        "1.5,red,yes\n"
        "2.5,green,no\n"
        "?,red,yes\n";
    const Dataset d = parse_dataset(arff, DataFormat::autodetect, "class");
    CHECK(d.n() == 3);
    CHECK(d.p() == 2);
    CHECK(d.feature(0).kind == FeatureKind::numeric);
    CHECK(d.feature(1).categories == std::vector<std::string>{"red", "green"});
}

TEST_CASE("size classifier boundary sits exactly at 10^6") {
    auto fake = [](std::size_t n, std::size_t p) {
        std::vector<FeatureMeta> features(p);
        for (std::size_t i = 0; i < p; ++i) {
            features[i].name = "f" + std::to_string(i);
            features[i].kind = FeatureKind::numeric;
        }
        std::vector<double> values(n * p, 0.0);
        std::vector<int> targets(n, 0);
        for (std::size_t i = 0; i < n; i += 2) targets[i] = 1;
        return Dataset(std::move(features), {"a", "b"}, std::move(values), std::move(targets));
    };
    CHECK(!classify_size(fake(5000, 200)).is_large());
    CHECK(classify_size(fake(5001, 200)).is_large());
    CHECK(!classify_size(fake(1, 1)).is_large());
}

namespace {

void check_plan_invariants(const Dataset& d, const SamplingPlan& plan) {
    // Parts partition the working set; sizes within 1.
    std::vector<std::size_t> val_sizes;
    for (const FoldSpec& fold : plan.folds) {
        std::set<std::uint32_t> seen(fold.validation.begin(), fold.validation.end());
        CHECK(seen.size() == fold.validation.size());
        for (std::uint32_t r : fold.training_order) CHECK(!seen.count(r));
        CHECK(fold.validation.size() + fold.training_order.size() == plan.m);
        val_sizes.push_back(fold.validation.size());
    }
    if (plan.k > 1) {
        const auto [lo, hi] = std::minmax_element(val_sizes.begin(), val_sizes.end());
        CHECK(*hi - *lo <= 1);
    }

    // Stratification of validation parts.
    const auto histogram_of = [&](const std::vector<std::uint32_t>& rows) {
        std::vector<double> h(d.class_count(), 0.0);
        for (std::uint32_t r : rows) h[static_cast<std::size_t>(d.target(r))] += 1.0;
        return h;
    };
    std::vector<double> working = histogram_of(plan.working_set);
    for (const FoldSpec& fold : plan.folds) {
        const auto h = histogram_of(fold.validation);
        for (std::size_t c = 0; c < d.class_count(); ++c) {
            const double share = static_cast<double>(fold.validation.size()) * working[c] /
                                 static_cast<double>(plan.m);
            CHECK(std::abs(h[c] - share) < 1.0 + 1e-9);
        }
    }

    // Nested prefixes across rounds, disjoint from validation.
    for (int fold = 1; fold <= plan.k; ++fold) {
        std::vector<std::uint32_t> prev;
        for (int round = 1; round <= 4; ++round) {
            const auto sample = training_sample(plan, round, fold);
            CHECK(std::includes(sample.begin(), sample.end(), prev.begin(), prev.end()));
            prev = sample;
        }
        CHECK(prev.size() ==
              plan.folds[static_cast<std::size_t>(fold - 1)].training_order.size());
    }
}

}  // namespace

TEST_CASE("sampling plan: small dataset, three folds") {
    const Dataset d = synth::yeast_like(900, 3);
    const SamplingPlan plan = make_sampling_plan(d, classify_size(d), std::nullopt, 11);
    CHECK(plan.m == 900);
    CHECK(plan.k == 3);
    for (const FoldSpec& f : plan.folds) CHECK(f.validation.size() == 300);
    check_plan_invariants(d, plan);
}

TEST_CASE("sampling plan: round sizes follow the 12.5/25/50/100% schedule") {
    const Dataset d = synth::credit_like(900, 5);
    const SamplingPlan plan = make_sampling_plan(d, classify_size(d), std::nullopt, 3);
    const std::size_t largest = plan.folds[0].training_order.size();
    CHECK(largest == 600);
    CHECK(training_sample(plan, 1, 1).size() == 75);
    CHECK(training_sample(plan, 2, 1).size() == 150);
    CHECK(training_sample(plan, 3, 1).size() == 300);
    CHECK(training_sample(plan, 4, 1).size() == 600);
}

TEST_CASE("sampling plan: rounding is nearest with ties up") {
    // largest-training 801: round 3 -> 400.5 -> 401.
    const Dataset d = synth::credit_like(1068, 7);
    SamplingPlan plan = make_sampling_plan(d, classify_size(d), std::nullopt, 3);
    const std::size_t largest = plan.folds[0].training_order.size();
    const auto sample = training_sample(plan, 3, 1);
    const double exact = 0.5 * static_cast<double>(largest);
    CHECK(sample.size() == static_cast<std::size_t>(std::floor(exact + 0.5)));
}

TEST_CASE("sampling plan: large dataset uses one fold with a third validating") {
    const Dataset d = synth::credit_like(50000, 9);
    SizeClass size;
    size.tag = SizeClass::Tag::large;  // force the large path without 10^6 cells
    size.product = 1e7;
    const SamplingPlan plan = make_sampling_plan(d, size, std::nullopt, 17);
    CHECK(plan.m == 5000);
    CHECK(plan.k == 1);
    CHECK(plan.folds[0].validation.size() == 5000 / 3);
    CHECK(plan.folds[0].training_order.size() == 5000 - 5000 / 3);
    check_plan_invariants(d, plan);
}

TEST_CASE("sampling plan errors when a class cannot fill the folds") {
    const Dataset d = parse_dataset("x,y\n1,a\n2,b\n3,c\n", DataFormat::csv, "y");
    CHECK_THROWS_WITH_AS(make_sampling_plan(d, classify_size(d), std::nullopt, 1),
                         doctest::Contains("class too small to stratify"), Error);
}

TEST_CASE("sampling plan is deterministic in its seed") {
    const Dataset d = synth::yeast_like(600, 21);
    const SamplingPlan a = make_sampling_plan(d, classify_size(d), std::nullopt, 5);
    const SamplingPlan b = make_sampling_plan(d, classify_size(d), std::nullopt, 5);
    const SamplingPlan c = make_sampling_plan(d, classify_size(d), std::nullopt, 6);
    CHECK(a.working_set == b.working_set);
    for (int f = 0; f < a.k; ++f) {
        CHECK(a.folds[static_cast<std::size_t>(f)].validation ==
              b.folds[static_cast<std::size_t>(f)].validation);
        CHECK(a.folds[static_cast<std::size_t>(f)].training_order ==
              b.folds[static_cast<std::size_t>(f)].training_order);
    }
    bool any_difference = false;
    for (int f = 0; f < a.k; ++f)
        if (a.folds[static_cast<std::size_t>(f)].training_order !=
            c.folds[static_cast<std::size_t>(f)].training_order)
            any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("final cv sample covers all three spec branches") {
    SUBCASE("everything when n <= 5000") {
        const Dataset d = synth::credit_like(4000, 3);
        const SamplingPlan plan = make_sampling_plan(d, classify_size(d), std::nullopt, 1);
        CHECK(final_cv_sample(d, plan, 1).size() == 4000);
    }
    SUBCASE("all from unused instances when enough exist") {
        const Dataset d = synth::credit_like(12000, 3);
        SizeClass size;
        size.tag = SizeClass::Tag::large;
        size.product = 0;
        const SamplingPlan plan = make_sampling_plan(d, size, std::nullopt, 9);
        const auto sample = final_cv_sample(d, plan, 9);
        CHECK(sample.size() == 5000);
        std::set<std::uint32_t> working(plan.working_set.begin(), plan.working_set.end());
        for (std::uint32_t r : sample) CHECK(!working.count(r));
    }
    SUBCASE("topped up from used instances when unused run short") {
        const Dataset d = synth::credit_like(6000, 3);
        SizeClass size;
        size.tag = SizeClass::Tag::large;
        size.product = 0;
        const SamplingPlan plan = make_sampling_plan(d, size, std::nullopt, 9);
        const auto sample = final_cv_sample(d, plan, 9);
        CHECK(sample.size() == 5000);
        std::set<std::uint32_t> working(plan.working_set.begin(), plan.working_set.end());
        std::size_t unused = 0;
        for (std::uint32_t r : sample)
            if (!working.count(r)) ++unused;
        CHECK(unused == 1000);  // all 1000 unused instances appear
        // Class proportions follow the whole dataset within rounding.
        const auto whole = d.class_histogram();
        std::vector<std::size_t> got(d.class_count(), 0);
        for (std::uint32_t r : sample) got[static_cast<std::size_t>(d.target(r))]++;
        for (std::size_t c = 0; c < d.class_count(); ++c) {
            const double share = 5000.0 * static_cast<double>(whole[c]) / 6000.0;
            CHECK(std::abs(static_cast<double>(got[c]) - share) <= 1.0);
        }
    }
}

TEST_CASE("stratified parts balance sizes and classes") {
    const Dataset d = synth::yeast_like(700, 13);
    std::vector<std::uint32_t> rows(d.n());
    for (std::uint32_t i = 0; i < d.n(); ++i) rows[i] = i;
    Rng rng(3);
    for (int parts : {2, 3, 5, 10}) {
        const auto split = stratified_parts(d, rows, parts, rng);
        std::size_t total = 0, lo = d.n(), hi = 0;
        for (const auto& part : split) {
            total += part.size();
            lo = std::min(lo, part.size());
            hi = std::max(hi, part.size());
        }
        CHECK(total == d.n());
        CHECK(hi - lo <= 1);
    }
}
