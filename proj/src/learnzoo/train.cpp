#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "models.hpp"
#include "psbo/error.hpp"
#include "psbo/learnzoo.hpp"
#include "psbo/regtree.hpp"

namespace psbo {
namespace zoo {

namespace {

double impurity(const std::vector<double>& counts, double total, bool entropy) {
    if (total <= 0) return 0.0;
    double imp = entropy ? 0.0 : 1.0;
    for (double c : counts) {
        const double q = c / total;
        if (entropy) {
            if (q > 0) imp -= q * std::log2(q);
        } else {
            imp -= q * q;
        }
    }
    return imp;
}

int majority_label(const std::vector<double>& counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

bool grow_class_tree(ClassTree& tree, const Dataset& d, const std::vector<std::uint32_t>& rows,
                     const std::vector<std::uint32_t>& cols, int classes,
                     const TreeGrowOptions& opts, Rng& rng, Stopwatch& meter, double budget) {
    struct Item {
        int node;
        std::vector<std::uint32_t> rows;
    };

    tree.nodes.clear();
    tree.nodes.push_back({});
    {
        std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
        for (std::uint32_t r : rows) counts[static_cast<std::size_t>(d.target(r))] += 1.0;
        tree.nodes[0].label = majority_label(counts);
    }

    std::vector<Item> level;
    level.push_back({0, rows});
    int depth = 0;

    std::vector<std::size_t> all_features(cols.size());
    std::iota(all_features.begin(), all_features.end(), std::size_t{0});

    while (!level.empty()) {
        if (meter.exceeded(budget)) return false;  // frontier nodes stay leaves
        if (opts.max_depth >= 0 && depth >= opts.max_depth) break;
        std::vector<Item> next;
        for (Item& item : level) {
            const std::size_t count = item.rows.size();
            std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
            for (std::uint32_t r : item.rows) counts[static_cast<std::size_t>(d.target(r))] += 1.0;
            const double parent_imp = impurity(counts, static_cast<double>(count), opts.entropy);
            if (count < 2 * opts.min_leaf || parent_imp <= 1e-12) continue;

            std::vector<std::size_t> candidates;
            if (opts.mtry == 0 || opts.mtry >= cols.size()) {
                candidates = all_features;
            } else {
                std::vector<std::size_t> pool = all_features;
                rng.shuffle(pool);
                candidates.assign(pool.begin(),
                                  pool.begin() + static_cast<std::ptrdiff_t>(opts.mtry));
                std::sort(candidates.begin(), candidates.end());
            }

            int best_feature = -1;
            bool best_equality = false;
            double best_threshold = 0.0, best_gain = 1e-12;

            for (std::size_t f : candidates) {
                const std::uint32_t col = cols[f];
                const bool categorical = d.feature(col).kind == FeatureKind::categorical;
                charge_ops(meter, static_cast<double>(count) *
                                      (categorical ? 4.0 : 10.0 + static_cast<double>(classes)));
                if (categorical) {
                    // One-vs-rest equality split per level.
                    const std::size_t arity = d.feature(col).categories.size();
                    std::vector<double> level_counts(arity * static_cast<std::size_t>(classes), 0.0);
                    std::vector<double> level_total(arity, 0.0);
                    for (std::uint32_t r : item.rows) {
                        const auto lv = static_cast<std::size_t>(d.value(r, col));
                        level_counts[lv * static_cast<std::size_t>(classes) +
                                     static_cast<std::size_t>(d.target(r))] += 1.0;
                        level_total[lv] += 1.0;
                    }
                    for (std::size_t lv = 0; lv < arity; ++lv) {
                        const double nl = level_total[lv];
                        const double nr = static_cast<double>(count) - nl;
                        if (nl < static_cast<double>(opts.min_leaf) ||
                            nr < static_cast<double>(opts.min_leaf))
                            continue;
                        std::vector<double> lc(static_cast<std::size_t>(classes)),
                            rc(static_cast<std::size_t>(classes));
                        for (int c = 0; c < classes; ++c) {
                            lc[static_cast<std::size_t>(c)] =
                                level_counts[lv * static_cast<std::size_t>(classes) +
                                             static_cast<std::size_t>(c)];
                            rc[static_cast<std::size_t>(c)] =
                                counts[static_cast<std::size_t>(c)] - lc[static_cast<std::size_t>(c)];
                        }
                        const double gain =
                            parent_imp - (nl / static_cast<double>(count)) * impurity(lc, nl, opts.entropy) -
                            (nr / static_cast<double>(count)) * impurity(rc, nr, opts.entropy);
                        if (gain > best_gain) {
                            best_gain = gain;
                            best_feature = static_cast<int>(f);
                            best_equality = true;
                            best_threshold = static_cast<double>(lv);
                        }
                    }
                } else {
                    std::vector<std::pair<double, int>> vals;
                    vals.reserve(count);
                    for (std::uint32_t r : item.rows) vals.push_back({d.value(r, col), d.target(r)});
                    std::sort(vals.begin(), vals.end());
                    std::vector<double> lc(static_cast<std::size_t>(classes), 0.0);
                    for (std::size_t i = 0; i + 1 < count; ++i) {
                        lc[static_cast<std::size_t>(vals[i].second)] += 1.0;
                        if (vals[i].first == vals[i + 1].first) continue;
                        const double nl = static_cast<double>(i + 1);
                        const double nr = static_cast<double>(count) - nl;
                        if (nl < static_cast<double>(opts.min_leaf) ||
                            nr < static_cast<double>(opts.min_leaf))
                            continue;
                        std::vector<double> rc(static_cast<std::size_t>(classes));
                        for (int c = 0; c < classes; ++c)
                            rc[static_cast<std::size_t>(c)] =
                                counts[static_cast<std::size_t>(c)] - lc[static_cast<std::size_t>(c)];
                        const double gain =
                            parent_imp - (nl / static_cast<double>(count)) * impurity(lc, nl, opts.entropy) -
                            (nr / static_cast<double>(count)) * impurity(rc, nr, opts.entropy);
                        if (gain > best_gain) {
                            best_gain = gain;
                            best_feature = static_cast<int>(f);
                            best_equality = false;
                            best_threshold = (vals[i].first + vals[i + 1].first) / 2.0;
                        }
                    }
                }
            }
            if (best_feature < 0) continue;

            const std::uint32_t col = cols[static_cast<std::size_t>(best_feature)];
            std::vector<std::uint32_t> left_rows, right_rows;
            for (std::uint32_t r : item.rows) {
                const double v = d.value(r, col);
                const bool go_left = best_equality ? v == best_threshold : v <= best_threshold;
                (go_left ? left_rows : right_rows).push_back(r);
            }
            if (left_rows.empty() || right_rows.empty()) continue;

            auto make_child = [&](const std::vector<std::uint32_t>& child_rows) {
                ClassTree::Node child;
                std::vector<double> cc(static_cast<std::size_t>(classes), 0.0);
                for (std::uint32_t r : child_rows) cc[static_cast<std::size_t>(d.target(r))] += 1.0;
                child.label = majority_label(cc);
                tree.nodes.push_back(child);
                return static_cast<int>(tree.nodes.size() - 1);
            };

            const int left_id = make_child(left_rows);
            const int right_id = make_child(right_rows);
            ClassTree::Node& node = tree.nodes[static_cast<std::size_t>(item.node)];
            node.feature = best_feature;
            node.equality = best_equality;
            node.threshold = best_threshold;
            node.left = left_id;
            node.right = right_id;
            next.push_back({left_id, std::move(left_rows)});
            next.push_back({right_id, std::move(right_rows)});
        }
        level = std::move(next);
        ++depth;
    }
    return true;
}

namespace {

std::vector<std::uint32_t> bootstrap_rows(const std::vector<std::uint32_t>& rows, Rng& rng) {
    std::vector<std::uint32_t> out(rows.size());
    for (auto& r : out) r = rows[rng.uniform_int(rows.size())];
    return out;
}

// ---------------------------------------------------------------------------

TrainOutcome train_zeror(const Combination&, const TrainRequest& req) {
    std::vector<double> counts(req.data.class_count(), 0.0);
    for (std::uint32_t r : req.rows) counts[static_cast<std::size_t>(req.data.target(r))] += 1.0;
    charge_ops(req.meter, static_cast<double>(req.rows.size()));
    auto model = std::make_unique<ZeroRModel>();
    model->majority = majority_label(counts);
    if (req.meter.exceeded(req.budget))
        return {TrainStatus::aborted, nullptr, "budget exhausted"};
    return {TrainStatus::complete, std::move(model), {}};
}

TrainOutcome train_knn(const Params& p, const TrainRequest& req) {
    auto model = std::make_unique<KnnModel>();
    model->k = p.integer("k");
    model->distance_weighted = p.cat("weighting") == "distance";
    model->classes = static_cast<int>(req.data.class_count());
    model->cols = req.features;
    const std::size_t f = model->cols.size();
    model->categorical.resize(f);
    model->lo.assign(f, 0.0);
    model->hi.assign(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
        model->categorical[j] =
            req.data.feature(model->cols[j]).kind == FeatureKind::categorical;
        if (!model->categorical[j]) {
            double lo = d_inf(), hi = -d_inf();
            for (std::uint32_t r : req.rows) {
                const double v = req.data.value(r, model->cols[j]);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            model->lo[j] = lo;
            model->hi[j] = hi;
        }
    }
    model->points.resize(req.rows.size() * f);
    model->labels.resize(req.rows.size());
    for (std::size_t i = 0; i < req.rows.size(); ++i) {
        for (std::size_t j = 0; j < f; ++j)
            model->points[i * f + j] = req.data.value(req.rows[i], model->cols[j]);
        model->labels[i] = req.data.target(req.rows[i]);
    }
    charge_ops(req.meter, static_cast<double>(req.rows.size()) * static_cast<double>(f) * 2.0);
    // Store-everything learner: nothing partial to return on timeout.
    if (req.meter.exceeded(req.budget))
        return {TrainStatus::aborted, nullptr, "budget exhausted"};
    return {TrainStatus::complete, std::move(model), {}};
}

TrainOutcome train_naive_bayes(const Params& p, const TrainRequest& req) {
    const bool kde = p.flag("kernel_density");
    const bool discretize = p.flag("discretization");
    if (kde && discretize)
        throw Error("naive_bayes: kernel density and supervised discretization are incompatible");

    const int classes = static_cast<int>(req.data.class_count());
    const std::size_t n = req.rows.size();
    auto model = std::make_unique<NaiveBayesModel>();
    model->classes = classes;
    model->cols = req.features;

    std::vector<double> class_counts(static_cast<std::size_t>(classes), 0.0);
    for (std::uint32_t r : req.rows) class_counts[static_cast<std::size_t>(req.data.target(r))] += 1.0;
    model->log_prior.resize(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c)
        model->log_prior[static_cast<std::size_t>(c)] =
            std::log((class_counts[static_cast<std::size_t>(c)] + 1.0) /
                     (static_cast<double>(n) + classes));

    for (std::uint32_t col : model->cols) {
        NaiveBayesModel::Feature feat;
        if (req.data.feature(col).kind == FeatureKind::categorical) {
            feat.model = NaiveBayesModel::FeatureModel::categorical;
            feat.arity = static_cast<int>(req.data.feature(col).categories.size());
            std::vector<double> counts(static_cast<std::size_t>(classes * feat.arity), 0.0);
            for (std::uint32_t r : req.rows) {
                const auto lv = static_cast<std::size_t>(req.data.value(r, col));
                counts[static_cast<std::size_t>(req.data.target(r)) * feat.arity + lv] += 1.0;
            }
            feat.log_prob.resize(counts.size());
            for (int c = 0; c < classes; ++c)
                for (int lv = 0; lv < feat.arity; ++lv)
                    feat.log_prob[static_cast<std::size_t>(c) * feat.arity +
                                  static_cast<std::size_t>(lv)] =
                        std::log((counts[static_cast<std::size_t>(c) * feat.arity +
                                         static_cast<std::size_t>(lv)] +
                                  1.0) /
                                 (class_counts[static_cast<std::size_t>(c)] + feat.arity));
            charge_ops(req.meter, static_cast<double>(n) * 2.0);
        } else if (kde) {
            feat.model = NaiveBayesModel::FeatureModel::kde;
            feat.kde_values.resize(static_cast<std::size_t>(classes));
            feat.kde_bandwidth.resize(static_cast<std::size_t>(classes));
            for (std::uint32_t r : req.rows)
                feat.kde_values[static_cast<std::size_t>(req.data.target(r))].push_back(
                    req.data.value(r, col));
            for (int c = 0; c < classes; ++c) {
                auto& vals = feat.kde_values[static_cast<std::size_t>(c)];
                double mean = 0;
                for (double v : vals) mean += v;
                if (!vals.empty()) mean /= static_cast<double>(vals.size());
                double var = 0;
                for (double v : vals) var += (v - mean) * (v - mean);
                if (vals.size() > 1) var /= static_cast<double>(vals.size() - 1);
                const double sigma = std::sqrt(std::max(var, 1e-12));
                feat.kde_bandwidth[static_cast<std::size_t>(c)] =
                    std::max(1.06 * sigma *
                                 std::pow(std::max<double>(1.0, static_cast<double>(vals.size())),
                                          -0.2),
                             1e-6);
            }
            charge_ops(req.meter, static_cast<double>(n) * 6.0);
        } else if (discretize) {
            // Supervised binning: recursive binary splits maximizing
            // information gain, depth-capped.
            feat.model = NaiveBayesModel::FeatureModel::binned;
            std::vector<std::pair<double, int>> vals;
            vals.reserve(n);
            for (std::uint32_t r : req.rows)
                vals.push_back({req.data.value(r, col), req.data.target(r)});
            std::sort(vals.begin(), vals.end());
            std::vector<double> cuts;
            const std::size_t min_segment = 8;
            std::function<void(std::size_t, std::size_t, int)> split =
                [&](std::size_t begin, std::size_t end, int depth) {
                    if (depth >= 3 || end - begin < 2 * min_segment) return;
                    std::vector<double> total(static_cast<std::size_t>(classes), 0.0);
                    for (std::size_t i = begin; i < end; ++i)
                        total[static_cast<std::size_t>(vals[i].second)] += 1.0;
                    const double seg = static_cast<double>(end - begin);
                    const double parent = impurity(total, seg, true);
                    std::vector<double> left(static_cast<std::size_t>(classes), 0.0);
                    double best_gain = 1e-9;
                    std::size_t best_i = 0;
                    for (std::size_t i = begin; i + 1 < end; ++i) {
                        left[static_cast<std::size_t>(vals[i].second)] += 1.0;
                        if (vals[i].first == vals[i + 1].first) continue;
                        const double nl = static_cast<double>(i - begin + 1), nr = seg - nl;
                        if (nl < min_segment || nr < min_segment) continue;
                        std::vector<double> right(static_cast<std::size_t>(classes));
                        for (int c = 0; c < classes; ++c)
                            right[static_cast<std::size_t>(c)] =
                                total[static_cast<std::size_t>(c)] - left[static_cast<std::size_t>(c)];
                        const double gain = parent - nl / seg * impurity(left, nl, true) -
                                            nr / seg * impurity(right, nr, true);
                        if (gain > best_gain) {
                            best_gain = gain;
                            best_i = i;
                        }
                    }
                    if (best_i == 0) return;
                    cuts.push_back((vals[best_i].first + vals[best_i + 1].first) / 2.0);
                    split(begin, best_i + 1, depth + 1);
                    split(best_i + 1, end, depth + 1);
                };
            split(0, n, 0);
            std::sort(cuts.begin(), cuts.end());
            feat.cuts = cuts;
            feat.arity = static_cast<int>(cuts.size()) + 1;
            std::vector<double> counts(static_cast<std::size_t>(classes * feat.arity), 0.0);
            for (std::uint32_t r : req.rows) {
                const double v = req.data.value(r, col);
                const auto bin = static_cast<std::size_t>(
                    std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
                counts[static_cast<std::size_t>(req.data.target(r)) * feat.arity + bin] += 1.0;
            }
            feat.log_prob.resize(counts.size());
            for (int c = 0; c < classes; ++c)
                for (int b = 0; b < feat.arity; ++b)
                    feat.log_prob[static_cast<std::size_t>(c) * feat.arity +
                                  static_cast<std::size_t>(b)] =
                        std::log((counts[static_cast<std::size_t>(c) * feat.arity +
                                         static_cast<std::size_t>(b)] +
                                  1.0) /
                                 (class_counts[static_cast<std::size_t>(c)] + feat.arity));
            charge_ops(req.meter, static_cast<double>(n) * 30.0);
        } else {
            feat.model = NaiveBayesModel::FeatureModel::gaussian;
            feat.mean.assign(static_cast<std::size_t>(classes), 0.0);
            feat.var.assign(static_cast<std::size_t>(classes), 0.0);
            for (std::uint32_t r : req.rows)
                feat.mean[static_cast<std::size_t>(req.data.target(r))] += req.data.value(r, col);
            for (int c = 0; c < classes; ++c)
                if (class_counts[static_cast<std::size_t>(c)] > 0)
                    feat.mean[static_cast<std::size_t>(c)] /= class_counts[static_cast<std::size_t>(c)];
            for (std::uint32_t r : req.rows) {
                const auto c = static_cast<std::size_t>(req.data.target(r));
                const double diff = req.data.value(r, col) - feat.mean[c];
                feat.var[c] += diff * diff;
            }
            for (int c = 0; c < classes; ++c) {
                if (class_counts[static_cast<std::size_t>(c)] > 1)
                    feat.var[static_cast<std::size_t>(c)] /=
                        class_counts[static_cast<std::size_t>(c)] - 1;
                feat.var[static_cast<std::size_t>(c)] =
                    std::max(feat.var[static_cast<std::size_t>(c)], 1e-9);
            }
            charge_ops(req.meter, static_cast<double>(n) * 4.0);
        }
        model->features.push_back(std::move(feat));
    }
    if (req.meter.exceeded(req.budget))
        return {TrainStatus::aborted, nullptr, "budget exhausted"};
    return {TrainStatus::complete, std::move(model), {}};
}

TrainOutcome train_cart(const Params& p, const TrainRequest& req) {
    auto model = std::make_unique<CartModel>();
    model->cols = req.features;
    TreeGrowOptions opts;
    opts.max_depth = p.integer("max_depth");
    opts.min_leaf = static_cast<std::size_t>(p.integer("min_leaf"));
    opts.entropy = p.cat("criterion") == "entropy";
    Rng rng(req.seed);
    const bool complete =
        grow_class_tree(model->tree, req.data, req.rows, model->cols,
                        static_cast<int>(req.data.class_count()), opts, rng, req.meter, req.budget);
    return {complete ? TrainStatus::complete : TrainStatus::partial, std::move(model), {}};
}

TrainOutcome train_forest(const Params& p, const TrainRequest& req) {
    auto model = std::make_unique<ForestModel>();
    model->cols = req.features;
    model->classes = static_cast<int>(req.data.class_count());
    const int trees = p.integer("trees");
    TreeGrowOptions opts;
    opts.max_depth = p.integer("max_depth");
    opts.min_leaf = 1;
    const std::string mtry = p.cat("mtry");
    const auto f = static_cast<double>(req.features.size());
    if (mtry == "sqrt")
        opts.mtry = static_cast<std::size_t>(std::max(1.0, std::floor(std::sqrt(f))));
    else if (mtry == "log2")
        opts.mtry = static_cast<std::size_t>(std::max(1.0, std::floor(std::log2(f + 1))));
    else
        opts.mtry = 0;

    Rng rng(req.seed);
    for (int t = 0; t < trees; ++t) {
        // One tree is the training unit; the budget is checked between trees.
        if (req.meter.exceeded(req.budget)) {
            if (model->trees.empty()) return {TrainStatus::aborted, nullptr, "budget exhausted"};
            return {TrainStatus::partial, std::move(model), {}};
        }
        ClassTree tree;
        const auto sample = bootstrap_rows(req.rows, rng);
        grow_class_tree(tree, req.data, sample, model->cols, model->classes, opts, rng, req.meter,
                        d_inf());
        model->trees.push_back(std::move(tree));
    }
    return {TrainStatus::complete, std::move(model), {}};
}

std::vector<std::vector<int>> make_codebook(int classes, bool exhaustive) {
    std::vector<std::vector<int>> code(static_cast<std::size_t>(classes));
    if (!exhaustive || classes == 2) {
        if (classes == 2 && exhaustive) {
            // The single nontrivial dichotomy.
            code[0] = {-1};
            code[1] = {+1};
            return code;
        }
        for (int c = 0; c < classes; ++c) {
            code[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(classes), -1);
            code[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)] = +1;
        }
        return code;
    }
    // Exhaustive code: 2^(K-1) - 1 columns; class 0 fixed to -1, the other
    // classes enumerate every nonzero bit pattern.
    const std::uint64_t columns = (1ULL << (classes - 1)) - 1;
    for (int c = 0; c < classes; ++c)
        code[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(columns));
    for (std::uint64_t m = 1; m <= columns; ++m) {
        code[0][static_cast<std::size_t>(m - 1)] = -1;
        for (int c = 1; c < classes; ++c)
            code[static_cast<std::size_t>(c)][static_cast<std::size_t>(m - 1)] =
                ((m >> (c - 1)) & 1) ? +1 : -1;
    }
    return code;
}

TrainOutcome train_linear_svm(const Params& p, const TrainRequest& req) {
    const double C = p.num("c");
    const bool exhaustive = p.cat("multiclass") == "ecoc_exhaustive";
    const int classes = static_cast<int>(req.data.class_count());
    const std::size_t n = req.rows.size();

    auto model = std::make_unique<LinearSvmModel>();
    model->classes = classes;
    model->enc.fit(req.data, req.rows, req.features);
    model->codebook = make_codebook(classes, exhaustive);
    const std::size_t columns = model->codebook[0].size();
    const auto dim = static_cast<std::size_t>(model->enc.dim);
    model->weights.assign(columns, std::vector<double>(dim + 1, 0.0));

    // Encode once.
    std::vector<double> x(n * dim);
    std::vector<double> tmp;
    for (std::size_t i = 0; i < n; ++i) {
        model->enc.encode(req.data, req.rows[i], tmp);
        std::copy(tmp.begin(), tmp.end(), x.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
    charge_ops(req.meter, static_cast<double>(n) * static_cast<double>(dim) * 2.0);
    if (req.meter.exceeded(req.budget))
        return {TrainStatus::aborted, nullptr, "budget exhausted"};

    const double lambda = 1.0 / (C * static_cast<double>(n));
    const int epochs = 20;
    Rng rng(req.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    double t = 1.0;
    int done = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            const double eta = 1.0 / (lambda * t);
            t += 1.0;
            const int y = req.data.target(req.rows[i]);
            for (std::size_t j = 0; j < columns; ++j) {
                auto& w = model->weights[j];
                const double code = model->codebook[static_cast<std::size_t>(y)][j];
                double margin = w[dim];
                for (std::size_t k = 0; k < dim; ++k) margin += w[k] * x[i * dim + k];
                const double shrink = 1.0 - eta * lambda;
                for (std::size_t k = 0; k < dim; ++k) w[k] *= shrink;
                if (code * margin < 1.0) {
                    for (std::size_t k = 0; k < dim; ++k) w[k] += eta * code * x[i * dim + k];
                    w[dim] += eta * code;
                }
            }
        }
        charge_ops(req.meter, static_cast<double>(n) * static_cast<double>(dim) *
                                  static_cast<double>(columns) * 3.0);
        ++done;
        if (req.meter.exceeded(req.budget)) break;
    }
    return {done == epochs ? TrainStatus::complete : TrainStatus::partial, std::move(model), {}};
}

TrainOutcome train_logreg(const Params& p, const TrainRequest& req) {
    const double l2 = p.num("l2");
    const double lr = p.num("learning_rate");
    const int classes = static_cast<int>(req.data.class_count());
    const std::size_t n = req.rows.size();

    auto model = std::make_unique<LogRegModel>();
    model->classes = classes;
    model->enc.fit(req.data, req.rows, req.features);
    const auto dim = static_cast<std::size_t>(model->enc.dim);
    model->weights.assign(static_cast<std::size_t>(classes), std::vector<double>(dim + 1, 0.0));

    std::vector<double> x(n * dim);
    std::vector<double> tmp;
    for (std::size_t i = 0; i < n; ++i) {
        model->enc.encode(req.data, req.rows[i], tmp);
        std::copy(tmp.begin(), tmp.end(), x.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
    charge_ops(req.meter, static_cast<double>(n) * static_cast<double>(dim) * 2.0);
    if (req.meter.exceeded(req.budget))
        return {TrainStatus::aborted, nullptr, "budget exhausted"};

    const int epochs = 20;
    Rng rng(req.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> logits(static_cast<std::size_t>(classes));
    int done = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        const double eta = lr / (1.0 + 0.1 * epoch);
        for (std::size_t i : order) {
            double max_logit = -d_inf();
            for (int c = 0; c < classes; ++c) {
                auto& w = model->weights[static_cast<std::size_t>(c)];
                double m = w[dim];
                for (std::size_t k = 0; k < dim; ++k) m += w[k] * x[i * dim + k];
                logits[static_cast<std::size_t>(c)] = m;
                max_logit = std::max(max_logit, m);
            }
            double z = 0.0;
            for (int c = 0; c < classes; ++c) {
                logits[static_cast<std::size_t>(c)] =
                    std::exp(logits[static_cast<std::size_t>(c)] - max_logit);
                z += logits[static_cast<std::size_t>(c)];
            }
            const int y = req.data.target(req.rows[i]);
            for (int c = 0; c < classes; ++c) {
                const double prob = logits[static_cast<std::size_t>(c)] / z;
                const double grad = prob - (c == y ? 1.0 : 0.0);
                auto& w = model->weights[static_cast<std::size_t>(c)];
                for (std::size_t k = 0; k < dim; ++k)
                    w[k] -= eta * (grad * x[i * dim + k] + l2 * w[k]);
                w[dim] -= eta * grad;
            }
        }
        charge_ops(req.meter, static_cast<double>(n) * static_cast<double>(dim) *
                                  static_cast<double>(classes) * 3.0);
        ++done;
        if (req.meter.exceeded(req.budget)) break;
    }
    return {done == epochs ? TrainStatus::complete : TrainStatus::partial, std::move(model), {}};
}

TrainOutcome train_gbm(const Params& p, const TrainRequest& req) {
    const int rounds = p.integer("rounds");
    const int depth = p.integer("depth");
    const double lr = p.num("learning_rate");
    const int classes = static_cast<int>(req.data.class_count());
    const std::size_t n = req.rows.size();

    auto model = std::make_unique<GbmModel>();
    model->classes = classes;
    model->learning_rate = lr;
    model->cols = req.features;
    model->base_score.assign(static_cast<std::size_t>(classes), 0.0);
    {
        std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
        for (std::uint32_t r : req.rows) counts[static_cast<std::size_t>(req.data.target(r))] += 1.0;
        for (int c = 0; c < classes; ++c)
            model->base_score[static_cast<std::size_t>(c)] =
                std::log((counts[static_cast<std::size_t>(c)] + 1.0) /
                         (static_cast<double>(n) + classes));
    }

    RegressionTree::RowAccessor x = [&](std::size_t row, std::size_t col) {
        return req.data.value(req.rows[row], model->cols[col]);
    };
    auto charge = [&](double ops) { charge_ops(req.meter, ops); };

    std::vector<double> scores(n * static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < classes; ++c)
            scores[i * static_cast<std::size_t>(classes) + static_cast<std::size_t>(c)] =
                model->base_score[static_cast<std::size_t>(c)];

    RegressionTree::Options topts;
    topts.max_depth = depth;
    topts.min_leaf = 5;
    Rng rng(req.seed);
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    std::vector<double> residual(n);

    int done = 0;
    for (int round = 0; round < rounds; ++round) {
        if (req.meter.exceeded(req.budget)) break;
        std::vector<RegressionTree> round_trees;
        for (int c = 0; c < classes; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                double z = 0.0, mx = -d_inf();
                for (int cc = 0; cc < classes; ++cc)
                    mx = std::max(mx, scores[i * static_cast<std::size_t>(classes) +
                                             static_cast<std::size_t>(cc)]);
                for (int cc = 0; cc < classes; ++cc)
                    z += std::exp(scores[i * static_cast<std::size_t>(classes) +
                                         static_cast<std::size_t>(cc)] -
                                  mx);
                const double prob =
                    std::exp(scores[i * static_cast<std::size_t>(classes) +
                                    static_cast<std::size_t>(c)] -
                             mx) /
                    z;
                residual[i] = (req.data.target(req.rows[i]) == c ? 1.0 : 0.0) - prob;
            }
            charge_ops(req.meter, static_cast<double>(n) * classes * 2.0);
            RegressionTree tree =
                RegressionTree::fit(x, model->cols.size(), all_rows, residual, topts, rng, charge);
            for (std::size_t i = 0; i < n; ++i)
                scores[i * static_cast<std::size_t>(classes) + static_cast<std::size_t>(c)] +=
                    lr * tree.predict(x, i);
            round_trees.push_back(std::move(tree));
        }
        model->rounds.push_back(std::move(round_trees));
        ++done;
    }
    if (done == 0) return {TrainStatus::aborted, nullptr, "budget exhausted"};
    return {done == rounds ? TrainStatus::complete : TrainStatus::partial, std::move(model), {}};
}

}  // namespace

namespace {

Combination inner_combination(const AlgorithmEntry& outer, const Combination& c,
                              const std::string& prefix, const AlgorithmEntry& inner) {
    Combination out;
    out.space_id = inner.model_space.id();
    out.values.resize(inner.model_space.size());
    for (std::size_t i = 0; i < inner.model_space.size(); ++i) {
        const std::string name = prefix + "." + inner.model_space.param(i).name;
        const auto idx = outer.space.index_of(name);
        if (!idx) throw Error("missing embedded parameter '" + name + "'");
        out.values[i] = c.values[*idx];
    }
    return out;
}

double weighted_train_error(const Model& model, const Dataset& d,
                            const std::vector<std::uint32_t>& rows,
                            const std::vector<double>& weights, Stopwatch& meter) {
    double err = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (model.predict(d, rows[i]) != d.target(rows[i])) err += weights[i];
    charge_ops(meter, static_cast<double>(rows.size()) * model.predict_ops());
    return err;
}

TrainOutcome train_adaboost(const Registry& reg, const AlgorithmEntry& entry, const Params& p,
                            const TrainRequest& req) {
    const int stages = p.integer("stages");
    const std::string base_id = p.cat("base");
    const AlgorithmEntry* inner = reg.find(base_id);
    if (!inner) throw Error("adaboost: unknown base algorithm '" + base_id + "'");
    const Combination inner_c = inner_combination(entry, p.combo, "base." + base_id, *inner);

    const int classes = static_cast<int>(req.data.class_count());
    const std::size_t n = req.rows.size();
    auto model = std::make_unique<AdaBoostModel>();
    model->classes = classes;

    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    Rng rng(req.seed);
    int done = 0;
    for (int s = 0; s < stages; ++s) {
        if (req.meter.exceeded(req.budget)) break;
        // Weighted bootstrap instead of weighted learners.
        std::vector<double> cdf(n);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += weights[i];
            cdf[i] = acc;
        }
        std::vector<std::uint32_t> sample(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = rng.uniform() * acc;
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
            sample[i] = req.rows[std::min<std::size_t>(
                static_cast<std::size_t>(it - cdf.begin()), n - 1)];
        }
        charge_ops(req.meter, static_cast<double>(n) * 12.0);

        TrainRequest inner_req{req.data, sample, req.features, req.meter, req.budget,
                               Rng::derive(req.seed, {static_cast<std::uint64_t>(s)})};
        TrainOutcome stage = train_model(reg, *inner, inner_c, inner_req);
        if (!stage.model) break;

        const double eps =
            std::max(weighted_train_error(*stage.model, req.data, req.rows, weights, req.meter),
                     1e-10);
        const double worse_than_random = 1.0 - 1.0 / static_cast<double>(classes);
        if (eps >= worse_than_random) {
            if (model->stages.empty()) {
                model->stages.push_back(std::move(stage.model));
                model->alphas.push_back(1e-3);
                ++done;
            }
            break;
        }
        const double alpha =
            std::min(std::log((1.0 - eps) / eps) + std::log(static_cast<double>(classes) - 1.0),
                     10.0);
        for (std::size_t i = 0; i < n; ++i)
            if (stage.model->predict(req.data, req.rows[i]) != req.data.target(req.rows[i]))
                weights[i] *= std::exp(alpha);
        double z = 0.0;
        for (double w : weights) z += w;
        for (double& w : weights) w /= z;

        model->stages.push_back(std::move(stage.model));
        model->alphas.push_back(alpha);
        ++done;
        if (eps <= 1e-9) break;  // perfect stage
    }
    if (done == 0) return {TrainStatus::aborted, nullptr, "budget exhausted"};
    return {done == stages ? TrainStatus::complete : TrainStatus::partial, std::move(model), {}};
}

TrainOutcome train_voting(const Registry& reg, const AlgorithmEntry& entry, const Params& p,
                          const TrainRequest& req) {
    const int members = std::stoi(p.cat("members"));
    auto model = std::make_unique<VotingModel>();
    model->classes = static_cast<int>(req.data.class_count());
    for (int s = 1; s <= members; ++s) {
        if (req.meter.exceeded(req.budget)) break;
        const std::string slot = "slot" + std::to_string(s);
        const std::string base_id = p.cat(slot);
        const AlgorithmEntry* inner = reg.find(base_id);
        if (!inner) throw Error("voting: unknown base algorithm '" + base_id + "'");
        const Combination inner_c =
            inner_combination(entry, p.combo, slot + "." + base_id, *inner);
        TrainRequest inner_req{req.data, req.rows, req.features, req.meter, req.budget,
                               Rng::derive(req.seed, {static_cast<std::uint64_t>(s)})};
        TrainOutcome member = train_model(reg, *inner, inner_c, inner_req);
        if (!member.model) break;
        model->members.push_back(std::move(member.model));
    }
    if (model->members.empty()) return {TrainStatus::aborted, nullptr, "budget exhausted"};
    const bool complete = static_cast<int>(model->members.size()) == members;
    return {complete ? TrainStatus::complete : TrainStatus::partial, std::move(model), {}};
}

}  // namespace

}  // namespace zoo

TrainOutcome train_model(const Registry& reg, const AlgorithmEntry& entry, const Combination& c,
                         const TrainRequest& req) {
    using namespace zoo;
    if (req.features.empty()) return {TrainStatus::aborted, nullptr, "empty feature set"};
    const Params p{entry.space.size() == c.values.size() ? entry.space : entry.model_space, c};
    try {
        if (entry.id == "zeror") return train_zeror(c, req);
        if (entry.id == "knn") return train_knn(p, req);
        if (entry.id == "naive_bayes") return train_naive_bayes(p, req);
        if (entry.id == "cart") return train_cart(p, req);
        if (entry.id == "random_forest") return train_forest(p, req);
        if (entry.id == "linear_svm") return train_linear_svm(p, req);
        if (entry.id == "logistic_regression") return train_logreg(p, req);
        if (entry.id == "gradient_boosting") return train_gbm(p, req);
        if (entry.id == "adaboost") return train_adaboost(reg, entry, p, req);
        if (entry.id == "voting") return train_voting(reg, entry, p, req);
        return {TrainStatus::aborted, nullptr, "unknown algorithm '" + entry.id + "'"};
    } catch (const std::exception& e) {
        return {TrainStatus::aborted, nullptr, e.what()};
    }
}

double evaluate_error(const Model& model, const Dataset& d, const std::vector<std::uint32_t>& rows,
                      Stopwatch& meter) {
    if (rows.empty()) throw Error("evaluate_error: empty validation set");
    std::size_t wrong = 0;
    for (std::uint32_t r : rows)
        if (model.predict(d, r) != d.target(r)) ++wrong;
    zoo::charge_ops(meter, static_cast<double>(rows.size()) * model.predict_ops());
    return static_cast<double>(wrong) / static_cast<double>(rows.size());
}

}  // namespace psbo
