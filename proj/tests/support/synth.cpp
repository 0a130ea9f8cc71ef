#include "synth.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "psbo/rng.hpp"

namespace psbo::synth {

namespace {

Dataset build(std::vector<FeatureMeta> features, std::vector<std::string> classes,
              std::vector<double> values, std::vector<int> targets) {
    return Dataset(std::move(features), std::move(classes), std::move(values),
                   std::move(targets));
}

FeatureMeta cat_feature(std::string name, std::vector<std::string> levels) {
    FeatureMeta f;
    f.name = std::move(name);
    f.kind = FeatureKind::categorical;
    f.categories = std::move(levels);
    return f;
}

FeatureMeta num_feature(std::string name) {
    FeatureMeta f;
    f.name = std::move(name);
    f.kind = FeatureKind::numeric;
    return f;
}

}  // namespace

Dataset car_like() {
    const std::array<std::vector<std::string>, 6> levels = {{
        {"vhigh", "high", "med", "low"},   // buying
        {"vhigh", "high", "med", "low"},   // maint
        {"2", "3", "4", "5more"},          // doors
        {"2", "4", "more"},                // persons
        {"small", "med", "big"},           // lug_boot
        {"low", "med", "high"},            // safety
    }};
    const std::array<std::string, 6> names = {"buying", "maint", "doors",
                                              "persons", "lug_boot", "safety"};
    std::vector<FeatureMeta> features;
    for (std::size_t i = 0; i < 6; ++i)
        features.push_back(cat_feature(names[i], levels[i]));

    std::vector<double> values;
    std::vector<int> targets;
    // Deterministic acceptability rule over the six attributes.
    for (int buying = 0; buying < 4; ++buying)
        for (int maint = 0; maint < 4; ++maint)
            for (int doors = 0; doors < 4; ++doors)
                for (int persons = 0; persons < 3; ++persons)
                    for (int lug = 0; lug < 3; ++lug)
                        for (int safety = 0; safety < 3; ++safety) {
                            values.insert(values.end(),
                                          {static_cast<double>(buying),
                                           static_cast<double>(maint),
                                           static_cast<double>(doors),
                                           static_cast<double>(persons),
                                           static_cast<double>(lug),
                                           static_cast<double>(safety)});
                            int label = 0;  // unacc
                            if (safety > 0 && persons > 0) {
                                const int price = buying + maint;  // 0 = priciest
                                const int comfort = doors / 2 + lug + (persons == 1 ? 0 : 1);
                                if (price >= 4) {
                                    label = comfort >= 3 && safety == 2 ? 3
                                            : comfort >= 2              ? 2
                                                                        : 1;
                                } else if (price >= 2) {
                                    label = comfort >= 2 && safety == 2 ? 2 : 1;
                                } else {
                                    label = safety == 2 && comfort >= 3 ? 1 : 0;
                                }
                            }
                            targets.push_back(label);
                        }
    return build(std::move(features), {"unacc", "acc", "good", "vgood"}, std::move(values),
                 std::move(targets));
}

Dataset credit_like(std::size_t n, std::uint64_t seed) {
    Rng rng(Rng::derive(seed, {0xc4ed17u}));
    constexpr std::size_t kNumeric = 12, kCategorical = 8;
    std::vector<FeatureMeta> features;
    for (std::size_t i = 0; i < kNumeric; ++i)
        features.push_back(num_feature("num" + std::to_string(i)));
    for (std::size_t i = 0; i < kCategorical; ++i)
        features.push_back(cat_feature("cat" + std::to_string(i), {"a", "b", "c", "d"}));

    std::vector<double> values;
    values.reserve(n * (kNumeric + kCategorical));
    std::vector<int> targets;
    targets.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        double score = 0.0;
        std::array<double, kNumeric + kCategorical> row{};
        for (std::size_t i = 0; i < kNumeric; ++i) {
            row[i] = rng.normal();
            if (i < 4) score += (i % 2 ? -0.8 : 0.8) * row[i];
        }
        for (std::size_t i = 0; i < kCategorical; ++i) {
            const auto lv = static_cast<double>(rng.uniform_int(4));
            row[kNumeric + i] = lv;
            if (i < 2) score += (lv == 0 ? 0.9 : lv == 3 ? -0.9 : 0.0);
        }
        score += 0.5 * row[0] * row[2];
        const double prob = 1.0 / (1.0 + std::exp(-score));
        targets.push_back(rng.uniform() < prob ? 1 : 0);
        values.insert(values.end(), row.begin(), row.end());
    }
    return build(std::move(features), {"bad", "good"}, std::move(values), std::move(targets));
}

Dataset yeast_like(std::size_t n, std::uint64_t seed) {
    Rng rng(Rng::derive(seed, {0x9ea57u}));
    constexpr std::size_t kFeatures = 8;
    constexpr int kClasses = 10;
    std::vector<FeatureMeta> features;
    for (std::size_t i = 0; i < kFeatures; ++i)
        features.push_back(num_feature("f" + std::to_string(i)));

    // Fixed cluster centers, unbalanced class frequencies (like the real
    // yeast data, where two classes dominate).
    std::array<std::array<double, kFeatures>, kClasses> centers{};
    Rng center_rng(0x5eedc3u);
    for (auto& c : centers)
        for (auto& v : c) v = center_rng.uniform(-2.0, 2.0);
    const std::array<double, kClasses> weights = {0.30, 0.25, 0.12, 0.10, 0.08,
                                                  0.05, 0.04, 0.03, 0.02, 0.01};

    std::vector<double> values;
    std::vector<int> targets;
    std::vector<std::string> labels;
    for (int c = 0; c < kClasses; ++c) labels.push_back("c" + std::to_string(c));
    for (std::size_t r = 0; r < n; ++r) {
        double u = rng.uniform();
        int cls = 0;
        for (int c = 0; c < kClasses; ++c) {
            if (u < weights[static_cast<std::size_t>(c)]) {
                cls = c;
                break;
            }
            u -= weights[static_cast<std::size_t>(c)];
            cls = c;
        }
        targets.push_back(cls);
        for (std::size_t f = 0; f < kFeatures; ++f)
            values.push_back(centers[static_cast<std::size_t>(cls)][f] + 0.9 * rng.normal());
    }
    return build(std::move(features), std::move(labels), std::move(values), std::move(targets));
}

Dataset planted_tree(std::size_t n, std::size_t p, double noise, std::uint64_t seed) {
    Rng rng(Rng::derive(seed, {0x91a27edu}));
    std::vector<FeatureMeta> features;
    for (std::size_t i = 0; i < p; ++i) features.push_back(num_feature("x" + std::to_string(i)));
    std::vector<double> values;
    std::vector<int> targets;
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> row(p);
        for (std::size_t i = 0; i < p; ++i) row[i] = rng.uniform();
        // Depth-2 axis-aligned rule (XOR-like, hostile to linear models).
        int label = (row[0] > 0.5) == (row[1] > 0.5) ? 1 : 0;
        if (rng.uniform() < noise) label = 1 - label;
        targets.push_back(label);
        values.insert(values.end(), row.begin(), row.end());
    }
    return build(std::move(features), {"neg", "pos"}, std::move(values), std::move(targets));
}

Dataset numeric_binary(std::size_t n, std::size_t p, std::uint64_t seed) {
    Rng rng(Rng::derive(seed, {0xb17a9u}));
    std::vector<FeatureMeta> features;
    for (std::size_t i = 0; i < p; ++i) features.push_back(num_feature("x" + std::to_string(i)));
    std::vector<double> values;
    std::vector<int> targets;
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            const double v = rng.uniform(-1.0, 1.0);
            values.push_back(v);
            if (i < 2) s += v;
        }
        targets.push_back(s > 0 ? 1 : 0);
    }
    return build(std::move(features), {"neg", "pos"}, std::move(values), std::move(targets));
}

Dataset from_csv(const std::string& text, const std::string& target) {
    return parse_dataset(text, DataFormat::csv, target);
}

std::string to_csv(const Dataset& d, const std::string& target_name) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t c = 0; c < d.p(); ++c) out << d.feature(c).name << ',';
    out << target_name << "\n";
    for (std::size_t r = 0; r < d.n(); ++r) {
        for (std::size_t c = 0; c < d.p(); ++c) {
            const FeatureMeta& f = d.feature(c);
            if (f.kind == FeatureKind::categorical)
                out << f.categories[static_cast<std::size_t>(d.value(r, c))];
            else
                out << d.value(r, c);
            out << ',';
        }
        out << d.class_labels()[static_cast<std::size_t>(d.target(r))] << "\n";
    }
    return out.str();
}

}  // namespace psbo::synth
