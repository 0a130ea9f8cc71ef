#include "psbo/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "psbo/error.hpp"
#include "psbo/rng.hpp"

namespace psbo {

namespace {

// Rows grouped by class, each group shuffled.
std::vector<std::vector<std::uint32_t>> rows_by_class(const Dataset& d,
                                                      const std::vector<std::uint32_t>& rows,
                                                      Rng& rng) {
    std::vector<std::vector<std::uint32_t>> groups(d.class_count());
    for (std::uint32_t r : rows) groups[static_cast<std::size_t>(d.target(r))].push_back(r);
    for (auto& g : groups) rng.shuffle(g);
    return groups;
}

// Interleave class groups so that every prefix is approximately
// stratified: element j of a class with count c gets key (j + 0.5) / c.
std::vector<std::uint32_t> interleave_by_class(const std::vector<std::vector<std::uint32_t>>& groups) {
    struct Keyed {
        double key;
        std::size_t cls;
        std::size_t pos;
        std::uint32_t row;
    };
    std::vector<Keyed> keyed;
    for (std::size_t c = 0; c < groups.size(); ++c) {
        const double inv = groups[c].empty() ? 0.0 : 1.0 / static_cast<double>(groups[c].size());
        for (std::size_t j = 0; j < groups[c].size(); ++j)
            keyed.push_back({(static_cast<double>(j) + 0.5) * inv, c, j, groups[c][j]});
    }
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.key != b.key) return a.key < b.key;
        if (a.cls != b.cls) return a.cls < b.cls;
        return a.pos < b.pos;
    });
    std::vector<std::uint32_t> out;
    out.reserve(keyed.size());
    for (const auto& k : keyed) out.push_back(k.row);
    return out;
}

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

// Largest-remainder allocation of `total` across class counts, proportional
// to counts; each quota is capped by its class count.
std::vector<std::size_t> proportional_quotas(const std::vector<std::size_t>& counts,
                                             std::size_t total) {
    const double sum = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    std::vector<std::size_t> quota(counts.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const double share = sum > 0 ? static_cast<double>(total) * counts[c] / sum : 0.0;
        quota[c] = std::min(counts[c], static_cast<std::size_t>(std::floor(share)));
        assigned += quota[c];
        remainders.push_back({share - std::floor(share), c});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (const auto& [rem, c] : remainders) {
        if (assigned >= total) break;
        if (quota[c] < counts[c]) {
            quota[c]++;
            assigned++;
        }
    }
    // Spill over if some classes were capped.
    for (std::size_t c = 0; c < counts.size() && assigned < total; ++c) {
        while (quota[c] < counts[c] && assigned < total) {
            quota[c]++;
            assigned++;
        }
    }
    return quota;
}

}  // namespace

std::vector<std::vector<std::uint32_t>> stratified_parts(const Dataset& d,
                                                         const std::vector<std::uint32_t>& rows,
                                                         int parts, Rng& rng) {
    auto groups = rows_by_class(d, rows, rng);
    // Process classes by descending count; give each class's remainder to
    // the currently least-loaded parts. Keeps part sizes within one of
    // each other and per-class counts at floor/ceil of the share.
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (groups[a].size() != groups[b].size()) return groups[a].size() > groups[b].size();
        return a < b;
    });

    const std::size_t k = static_cast<std::size_t>(parts);
    std::vector<std::vector<std::uint32_t>> out(k);
    std::vector<std::size_t> load(k, 0);
    for (std::size_t c : order) {
        const auto& g = groups[c];
        const std::size_t base = g.size() / k;
        const std::size_t rem = g.size() % k;
        std::vector<std::size_t> part_order(k);
        std::iota(part_order.begin(), part_order.end(), std::size_t{0});
        std::sort(part_order.begin(), part_order.end(), [&](std::size_t a, std::size_t b) {
            if (load[a] != load[b]) return load[a] < load[b];
            return a < b;
        });
        std::vector<std::size_t> take(k, base);
        for (std::size_t i = 0; i < rem; ++i) take[part_order[i]]++;
        std::size_t pos = 0;
        for (std::size_t part = 0; part < k; ++part) {
            for (std::size_t i = 0; i < take[part]; ++i) out[part].push_back(g[pos++]);
            load[part] += take[part];
        }
    }
    for (auto& part : out) std::sort(part.begin(), part.end());
    return out;
}

SamplingPlan make_sampling_plan(const Dataset& d, const SizeClass& size,
                                std::optional<int> k_override, std::uint64_t seed) {
    SamplingPlan plan;
    plan.seed = seed;
    plan.m = std::min<std::size_t>(5000, d.n());
    plan.k = k_override.value_or(size.is_large() ? 1 : 3);
    if (plan.k < 1) throw ConfigError("fold count must be >= 1");

    Rng rng(Rng::derive(seed, {0x5a0b71e5u}));

    if (plan.m == d.n()) {
        plan.working_set.resize(d.n());
        std::iota(plan.working_set.begin(), plan.working_set.end(), 0u);
    } else {
        std::vector<std::uint32_t> all(d.n());
        std::iota(all.begin(), all.end(), 0u);
        rng.shuffle(all);
        plan.working_set.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(plan.m));
        std::sort(plan.working_set.begin(), plan.working_set.end());
    }

    // Every class present in the working set must fill k parts.
    {
        std::vector<std::size_t> counts(d.class_count(), 0);
        for (std::uint32_t r : plan.working_set) counts[static_cast<std::size_t>(d.target(r))]++;
        for (std::size_t c = 0; c < counts.size(); ++c)
            if (counts[c] > 0 && counts[c] < static_cast<std::size_t>(plan.k))
                throw Error("class too small to stratify: '" + d.class_labels()[c] + "' has " +
                            std::to_string(counts[c]) + " instance(s) for k=" + std::to_string(plan.k));
    }

    if (plan.k == 1) {
        // Validation = floor(m/3) stratified; the rest is the training set.
        const std::size_t val_target = plan.m / 3;
        auto groups = rows_by_class(d, plan.working_set, rng);
        std::vector<std::size_t> counts;
        counts.reserve(groups.size());
        for (const auto& g : groups) counts.push_back(g.size());
        const auto quota = proportional_quotas(counts, val_target);
        FoldSpec fold;
        std::vector<std::vector<std::uint32_t>> train_groups(groups.size());
        for (std::size_t c = 0; c < groups.size(); ++c) {
            for (std::size_t i = 0; i < groups[c].size(); ++i) {
                if (i < quota[c])
                    fold.validation.push_back(groups[c][i]);
                else
                    train_groups[c].push_back(groups[c][i]);
            }
        }
        std::sort(fold.validation.begin(), fold.validation.end());
        fold.training_order = interleave_by_class(train_groups);
        plan.folds.push_back(std::move(fold));
    } else {
        auto parts = stratified_parts(d, plan.working_set, plan.k, rng);
        for (int i = 0; i < plan.k; ++i) {
            FoldSpec fold;
            fold.validation = parts[static_cast<std::size_t>(i)];
            std::vector<std::uint32_t> training;
            for (int j = 0; j < plan.k; ++j)
                if (j != i)
                    training.insert(training.end(), parts[static_cast<std::size_t>(j)].begin(),
                                    parts[static_cast<std::size_t>(j)].end());
            Rng fold_rng(Rng::derive(seed, {0xf01dull, static_cast<std::uint64_t>(i)}));
            auto groups = rows_by_class(d, training, fold_rng);
            fold.training_order = interleave_by_class(groups);
            plan.folds.push_back(std::move(fold));
        }
    }
    return plan;
}

std::vector<std::uint32_t> training_sample(const SamplingPlan& plan, int round, int fold) {
    if (round < 1 || round > 4) throw ConfigError("training_sample: round must be in 1..4");
    if (fold < 1 || fold > plan.k) throw ConfigError("training_sample: fold out of range");
    const auto& order = plan.folds[static_cast<std::size_t>(fold - 1)].training_order;
    const double fraction = SamplingPlan::round_fractions[static_cast<std::size_t>(round - 1)];
    std::size_t count = round_half_up(fraction * static_cast<double>(order.size()));
    count = std::min(count, order.size());
    return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count)};
}

std::vector<std::uint32_t> final_cv_sample(const Dataset& d, const SamplingPlan& plan,
                                           std::uint64_t seed) {
    if (d.n() <= 5000) {
        std::vector<std::uint32_t> all(d.n());
        std::iota(all.begin(), all.end(), 0u);
        return all;
    }
    Rng rng(Rng::derive(seed, {0xf1a1cu}));
    std::vector<bool> in_working(d.n(), false);
    for (std::uint32_t r : plan.working_set) in_working[r] = true;

    // Per class: unused instances first, then working-set ones.
    std::vector<std::vector<std::uint32_t>> unused(d.class_count()), used(d.class_count());
    for (std::uint32_t r = 0; r < d.n(); ++r) {
        auto& bucket = in_working[r] ? used : unused;
        bucket[static_cast<std::size_t>(d.target(r))].push_back(r);
    }
    for (auto& g : unused) rng.shuffle(g);
    for (auto& g : used) rng.shuffle(g);

    const auto histogram = d.class_histogram();
    const auto quota = proportional_quotas(histogram, 5000);

    std::vector<std::uint32_t> sample;
    sample.reserve(5000);
    for (std::size_t c = 0; c < d.class_count(); ++c) {
        std::size_t want = quota[c];
        const std::size_t from_unused = std::min(want, unused[c].size());
        sample.insert(sample.end(), unused[c].begin(),
                      unused[c].begin() + static_cast<std::ptrdiff_t>(from_unused));
        want -= from_unused;
        const std::size_t from_used = std::min(want, used[c].size());
        sample.insert(sample.end(), used[c].begin(),
                      used[c].begin() + static_cast<std::ptrdiff_t>(from_used));
    }
    std::sort(sample.begin(), sample.end());
    return sample;
}

}  // namespace psbo
