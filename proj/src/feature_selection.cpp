#include "psbo/feature_selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "psbo/error.hpp"

namespace psbo {

const ParamSpace& fs_space() {
    static const ParamSpace space = [] {
        ParamSpace s("fs");
        s.add(HyperParam::categorical("fs", {"none", "ranker", "greedy_forward", "best_first"},
                                      "none"));
        s.add(HyperParam::categorical("fs.evaluator",
                                      {"info_gain", "chi2", "correlation", "pca", "cfs_subset"},
                                      "info_gain")
                  .when("fs", {"ranker", "greedy_forward", "best_first"}));
        s.add(HyperParam::numeric("fs.threshold", 0.0, 1.2, 0.5).when("fs", {"ranker"}));
        s.add(HyperParam::numeric("fs.min_gain", 0.0, 0.05, 0.0).when("fs", {"greedy_forward"}));
        s.add(HyperParam::numeric("fs.stale", 1, 5, 1, ParamScale::linear, true)
                  .when("fs", {"best_first"}));
        return s;
    }();
    return space;
}

bool has_fs_block(const ParamSpace& space, const Combination& c) {
    const auto idx = space.index_of("fs");
    if (!idx) return false;
    const ParamValue& v = c.values[*idx];
    return v.kind == ParamValue::Kind::category && v.cat != "none";
}

Combination fs_block(const ParamSpace& space, const Combination& c) {
    return project(space, c, fs_space());
}

namespace {

constexpr double kOpsPerUnit = 1e6;
constexpr int kNumericBins = 10;

double xlogx(double x) { return x > 0 ? x * std::log2(x) : 0.0; }

// Per-feature integer codes: level index for categorical features,
// quantile bin for numeric ones.
struct Discretized {
    std::vector<std::vector<int>> codes;  // [feature][row position]
    std::vector<int> arity;
    std::vector<int> targets;
    int classes = 0;
};

Discretized discretize(const Dataset& d, const std::vector<std::uint32_t>& rows,
                       Stopwatch& meter) {
    Discretized out;
    const std::size_t n = rows.size();
    const std::size_t p = d.p();
    out.codes.assign(p, std::vector<int>(n, 0));
    out.arity.assign(p, 0);
    out.targets.resize(n);
    out.classes = static_cast<int>(d.class_count());
    for (std::size_t i = 0; i < n; ++i) out.targets[i] = d.target(rows[i]);

    for (std::size_t f = 0; f < p; ++f) {
        if (d.feature(f).kind == FeatureKind::categorical) {
            for (std::size_t i = 0; i < n; ++i)
                out.codes[f][i] = static_cast<int>(d.value(rows[i], f));
            out.arity[f] = static_cast<int>(d.feature(f).categories.size());
            meter.charge(static_cast<double>(n) / kOpsPerUnit);
        } else {
            std::vector<double> sorted;
            sorted.reserve(n);
            for (std::size_t i = 0; i < n; ++i) sorted.push_back(d.value(rows[i], f));
            std::sort(sorted.begin(), sorted.end());
            std::vector<double> cuts;
            for (int b = 1; b < kNumericBins; ++b) {
                const double q = sorted[n * static_cast<std::size_t>(b) / kNumericBins];
                if (cuts.empty() || q > cuts.back()) cuts.push_back(q);
            }
            for (std::size_t i = 0; i < n; ++i) {
                const double v = d.value(rows[i], f);
                out.codes[f][i] = static_cast<int>(
                    std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
            }
            out.arity[f] = static_cast<int>(cuts.size()) + 1;
            meter.charge(static_cast<double>(n) * 12.0 / kOpsPerUnit);
        }
    }
    return out;
}

double entropy_of_counts(const std::vector<double>& counts, double total) {
    if (total <= 0) return 0.0;
    double h = 0.0;
    for (double c : counts) h -= xlogx(c / total);
    return h;
}

// H(Y), H(Y|X) and H(X) from a contingency table.
struct SplitEntropy {
    double h_y = 0, h_x = 0, h_y_given_x = 0;
};

SplitEntropy split_entropy(const std::vector<int>& codes, int arity, const std::vector<int>& y,
                           int classes, Stopwatch& meter) {
    const std::size_t n = codes.size();
    std::vector<double> joint(static_cast<std::size_t>(arity) * classes, 0.0);
    std::vector<double> px(arity, 0.0), py(classes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        joint[static_cast<std::size_t>(codes[i]) * classes + static_cast<std::size_t>(y[i])] += 1;
        px[static_cast<std::size_t>(codes[i])] += 1;
        py[static_cast<std::size_t>(y[i])] += 1;
    }
    meter.charge(static_cast<double>(n + joint.size()) * 3.0 / kOpsPerUnit);
    SplitEntropy e;
    const double total = static_cast<double>(n);
    e.h_y = entropy_of_counts(py, total);
    e.h_x = entropy_of_counts(px, total);
    for (int xv = 0; xv < arity; ++xv) {
        if (px[static_cast<std::size_t>(xv)] <= 0) continue;
        double h = 0.0;
        for (int c = 0; c < classes; ++c)
            h -= xlogx(joint[static_cast<std::size_t>(xv) * classes + static_cast<std::size_t>(c)] /
                       px[static_cast<std::size_t>(xv)]);
        e.h_y_given_x += px[static_cast<std::size_t>(xv)] / total * h;
    }
    return e;
}

double chi2_statistic(const std::vector<int>& codes, int arity, const std::vector<int>& y,
                      int classes, Stopwatch& meter) {
    const std::size_t n = codes.size();
    std::vector<double> joint(static_cast<std::size_t>(arity) * classes, 0.0);
    std::vector<double> px(arity, 0.0), py(classes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        joint[static_cast<std::size_t>(codes[i]) * classes + static_cast<std::size_t>(y[i])] += 1;
        px[static_cast<std::size_t>(codes[i])] += 1;
        py[static_cast<std::size_t>(y[i])] += 1;
    }
    meter.charge(static_cast<double>(n + joint.size()) * 3.0 / kOpsPerUnit);
    double stat = 0.0;
    for (int xv = 0; xv < arity; ++xv) {
        for (int c = 0; c < classes; ++c) {
            const double expected =
                px[static_cast<std::size_t>(xv)] * py[static_cast<std::size_t>(c)] /
                static_cast<double>(n);
            if (expected <= 0) continue;
            const double observed =
                joint[static_cast<std::size_t>(xv) * classes + static_cast<std::size_t>(c)];
            stat += (observed - expected) * (observed - expected) / expected;
        }
    }
    return stat;
}

double correlation_score(const Dataset& d, const std::vector<std::uint32_t>& rows, std::size_t f,
                         int classes, Stopwatch& meter) {
    const std::size_t n = rows.size();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = d.value(rows[i], f);
    double mx = 0;
    for (double v : x) mx += v;
    mx /= static_cast<double>(n);
    double sx = 0;
    for (double v : x) sx += (v - mx) * (v - mx);
    meter.charge(static_cast<double>(n) * (classes + 3.0) / kOpsPerUnit);
    if (sx <= 0) return 0.0;
    double best = 0.0;
    for (int c = 0; c < classes; ++c) {
        double nc = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (d.target(rows[i]) == c) {
                nc += 1;
                sxy += x[i] - mx;
            }
        const double sy = nc * (1.0 - nc / static_cast<double>(n));
        if (sy <= 0) continue;
        best = std::max(best, std::abs(sxy) / std::sqrt(sx * sy));
    }
    return best;
}

// Symmetric uncertainty between two discretized features (or a feature and
// the class), for the CFS-style subset merit.
double symmetric_uncertainty(const std::vector<int>& a, int arity_a, const std::vector<int>& b,
                             int arity_b, Stopwatch& meter) {
    const std::size_t n = a.size();
    std::vector<double> joint(static_cast<std::size_t>(arity_a) * arity_b, 0.0);
    std::vector<double> pa(arity_a, 0.0), pb(arity_b, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        joint[static_cast<std::size_t>(a[i]) * arity_b + static_cast<std::size_t>(b[i])] += 1;
        pa[static_cast<std::size_t>(a[i])] += 1;
        pb[static_cast<std::size_t>(b[i])] += 1;
    }
    meter.charge(static_cast<double>(n + joint.size()) * 3.0 / kOpsPerUnit);
    const double total = static_cast<double>(n);
    const double ha = entropy_of_counts(pa, total);
    const double hb = entropy_of_counts(pb, total);
    double hab = 0.0;
    for (double c : joint) hab -= xlogx(c / total);
    if (ha + hb <= 0) return 0.0;
    return 2.0 * (ha + hb - hab) / (ha + hb);
}

// Principal-component loading scores: each feature is scored by its
// squared loadings on the top components, eigenvalue-weighted. Quadratic
// in p, which is why the rule set marks it infeasible for p > 2000.
std::vector<double> pca_loading_scores(const Dataset& d, const std::vector<std::uint32_t>& rows,
                                       Stopwatch& meter, double budget, bool& timed_out) {
    const std::size_t n = rows.size();
    const std::size_t p = d.p();
    std::vector<double> mean(p, 0.0);
    for (std::uint32_t r : rows)
        for (std::size_t f = 0; f < p; ++f) mean[f] += d.value(r, f);
    for (double& m : mean) m /= static_cast<double>(n);

    std::vector<double> cov(p * p, 0.0);
    for (std::uint32_t r : rows) {
        if (meter.exceeded(budget)) {
            timed_out = true;
            return {};
        }
        for (std::size_t a = 0; a < p; ++a) {
            const double va = d.value(r, a) - mean[a];
            for (std::size_t b = a; b < p; ++b) cov[a * p + b] += va * (d.value(r, b) - mean[b]);
        }
        meter.charge(static_cast<double>(p) * static_cast<double>(p) / 2.0 / kOpsPerUnit);
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) cov[a * p + b] = cov[b * p + a];
    for (double& c : cov) c /= static_cast<double>(n > 1 ? n - 1 : 1);

    // Cyclic Jacobi rotations.
    std::vector<double> vec(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i) vec[i * p + i] = 1.0;
    for (int sweep = 0; sweep < 8; ++sweep) {
        if (meter.exceeded(budget)) {
            timed_out = true;
            return {};
        }
        double off = 0.0;
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = a + 1; b < p; ++b) off += cov[a * p + b] * cov[a * p + b];
        if (off < 1e-18) break;
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a + 1; b < p; ++b) {
                const double apq = cov[a * p + b];
                if (std::abs(apq) < 1e-15) continue;
                const double app = cov[a * p + a], aqq = cov[b * p + b];
                const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(theta), s = std::sin(theta);
                for (std::size_t i = 0; i < p; ++i) {
                    const double aip = cov[i * p + a], aiq = cov[i * p + b];
                    cov[i * p + a] = c * aip - s * aiq;
                    cov[i * p + b] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < p; ++i) {
                    const double api = cov[a * p + i], aqi = cov[b * p + i];
                    cov[a * p + i] = c * api - s * aqi;
                    cov[b * p + i] = s * api + c * aqi;
                    const double vip = vec[i * p + a], viq = vec[i * p + b];
                    vec[i * p + a] = c * vip - s * viq;
                    vec[i * p + b] = s * vip + c * viq;
                }
            }
        }
        meter.charge(static_cast<double>(p) * p * p * 4.0 / kOpsPerUnit);
    }

    std::vector<std::pair<double, std::size_t>> eigen;
    for (std::size_t i = 0; i < p; ++i) eigen.push_back({cov[i * p + i], i});
    std::sort(eigen.rbegin(), eigen.rend());
    const std::size_t top = std::min<std::size_t>(5, p);
    std::vector<double> scores(p, 0.0);
    for (std::size_t k = 0; k < top; ++k) {
        const double lambda = std::max(eigen[k].first, 0.0);
        for (std::size_t f = 0; f < p; ++f) {
            const double loading = vec[f * p + eigen[k].second];
            scores[f] += lambda * loading * loading;
        }
    }
    return scores;
}

// Caches pairwise SU values across merit evaluations within one FS run.
class MeritEvaluator {
public:
    MeritEvaluator(const Discretized& disc, Stopwatch& meter) : disc_(disc), meter_(meter) {}

    double class_correlation(std::size_t f) {
        auto it = rcf_.find(f);
        if (it != rcf_.end()) return it->second;
        const double su = symmetric_uncertainty(disc_.codes[f], disc_.arity[f], disc_.targets,
                                                disc_.classes, meter_);
        rcf_.emplace(f, su);
        return su;
    }

    double feature_correlation(std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        auto it = rff_.find({a, b});
        if (it != rff_.end()) return it->second;
        const double su = symmetric_uncertainty(disc_.codes[a], disc_.arity[a], disc_.codes[b],
                                                disc_.arity[b], meter_);
        rff_.emplace(std::make_pair(a, b), su);
        return su;
    }

    double merit(const std::vector<std::size_t>& subset) {
        if (subset.empty()) return 0.0;
        const double k = static_cast<double>(subset.size());
        double rcf = 0.0;
        for (std::size_t f : subset) rcf += class_correlation(f);
        rcf /= k;
        double rff = 0.0;
        if (subset.size() > 1) {
            for (std::size_t i = 0; i < subset.size(); ++i)
                for (std::size_t j = i + 1; j < subset.size(); ++j)
                    rff += feature_correlation(subset[i], subset[j]);
            rff /= k * (k - 1) / 2.0;
        }
        return k * rcf / std::sqrt(k + k * (k - 1) * rff);
    }

private:
    const Discretized& disc_;
    Stopwatch& meter_;
    std::map<std::size_t, double> rcf_;
    std::map<std::pair<std::size_t, std::size_t>, double> rff_;
};

struct FsParams {
    std::string method;
    std::string evaluator;
    double threshold = 0.5;
    double min_gain = 0.0;
    int stale = 1;
};

FsParams read_fs_params(const ParamSpace& space, const Combination& c) {
    FsParams p;
    auto get = [&](const char* name) -> const ParamValue& {
        return c.values[*space.index_of(name)];
    };
    p.method = get("fs").cat;
    p.evaluator = get("fs.evaluator").cat;
    const ParamValue& thr = get("fs.threshold");
    if (!thr.is_inactive()) p.threshold = thr.num;
    const ParamValue& mg = get("fs.min_gain");
    if (!mg.is_inactive()) p.min_gain = mg.num;
    const ParamValue& st = get("fs.stale");
    if (!st.is_inactive()) p.stale = static_cast<int>(st.num);
    return p;
}

std::vector<double> single_feature_scores(const std::string& evaluator, const Dataset& d,
                                          const std::vector<std::uint32_t>& rows,
                                          const Discretized& disc, MeritEvaluator& merit,
                                          Stopwatch& meter, double budget, bool& timed_out) {
    if (evaluator == "pca") {
        auto scores = pca_loading_scores(d, rows, meter, budget, timed_out);
        if (timed_out) scores.assign(d.p(), 0.0);
        return scores;
    }
    std::vector<double> scores(d.p(), 0.0);
    for (std::size_t f = 0; f < d.p(); ++f) {
        if (meter.exceeded(budget)) {
            timed_out = true;
            return scores;
        }
        if (evaluator == "info_gain") {
            const auto e = split_entropy(disc.codes[f], disc.arity[f], disc.targets, disc.classes,
                                         meter);
            scores[f] = e.h_y - e.h_y_given_x;
        } else if (evaluator == "chi2") {
            scores[f] = chi2_statistic(disc.codes[f], disc.arity[f], disc.targets, disc.classes,
                                       meter);
        } else if (evaluator == "correlation") {
            scores[f] = correlation_score(d, rows, f, disc.classes, meter);
        } else {
            // Subset evaluator asked for individual scores (only reachable
            // when validity rules are disabled): fall back to the
            // feature's class correlation.
            scores[f] = merit.class_correlation(f);
        }
    }
    return scores;
}

}  // namespace

std::vector<double> information_gain_scores(const Dataset& d,
                                            const std::vector<std::uint32_t>& rows) {
    SearchClock clock(ClockMode::virtual_units);
    auto meter = clock.test_meter();
    const Discretized disc = discretize(d, rows, *meter);
    std::vector<double> scores(d.p(), 0.0);
    for (std::size_t f = 0; f < d.p(); ++f) {
        const auto e = split_entropy(disc.codes[f], disc.arity[f], disc.targets, disc.classes,
                                     *meter);
        scores[f] = e.h_y - e.h_y_given_x;
    }
    return scores;
}

FsOutcome run_feature_selection(const ParamSpace& space, const Combination& c, const Dataset& d,
                                const std::vector<std::uint32_t>& rows, Stopwatch& meter,
                                double budget) {
    FsOutcome out;
    const double start = meter.elapsed();
    const FsParams params = read_fs_params(space, c);
    const std::size_t p = d.p();

    auto finish = [&](FsOutcome::Status status, std::vector<std::uint32_t> subset) {
        out.status = status;
        out.subset = std::move(subset);
        out.elapsed = meter.elapsed() - start;
        return out;
    };
    auto classify_subset = [&](std::vector<std::size_t> subset) {
        std::sort(subset.begin(), subset.end());
        if (subset.empty()) return finish(FsOutcome::Status::none, {});
        if (subset.size() >= p) return finish(FsOutcome::Status::all, {});
        std::vector<std::uint32_t> cols(subset.begin(), subset.end());
        return finish(FsOutcome::Status::selected, std::move(cols));
    };

    if (meter.exceeded(budget)) return finish(FsOutcome::Status::timeout, {});
    const Discretized disc = discretize(d, rows, meter);
    if (meter.exceeded(budget)) return finish(FsOutcome::Status::timeout, {});
    MeritEvaluator merit(disc, meter);

    if (params.method == "ranker") {
        bool timed_out = false;
        const auto scores =
            single_feature_scores(params.evaluator, d, rows, disc, merit, meter, budget, timed_out);
        if (timed_out || meter.exceeded(budget)) return finish(FsOutcome::Status::timeout, {});
        const double max_score = *std::max_element(scores.begin(), scores.end());
        std::vector<std::size_t> subset;
        for (std::size_t f = 0; f < p; ++f)
            if (scores[f] >= params.threshold * max_score && max_score > 0) subset.push_back(f);
        if (max_score <= 0) subset.clear();
        return classify_subset(std::move(subset));
    }

    // Subset search (greedy forward / best first) over the merit function.
    auto subset_merit = [&](const std::vector<std::size_t>& subset) {
        if (params.evaluator == "cfs_subset") return merit.merit(subset);
        // Individual-score evaluator under a subset search (rules off):
        // additive score, which tends to select everything.
        double s = 0.0;
        for (std::size_t f : subset) s += merit.class_correlation(f);
        return s;
    };

    if (params.method == "greedy_forward") {
        std::vector<std::size_t> current;
        double current_merit = 0.0;
        std::vector<bool> taken(p, false);
        while (current.size() < p) {
            if (meter.exceeded(budget)) return finish(FsOutcome::Status::timeout, {});
            double best = current_merit + params.min_gain;
            std::size_t best_f = p;
            for (std::size_t f = 0; f < p; ++f) {
                if (taken[f]) continue;
                std::vector<std::size_t> trial = current;
                trial.push_back(f);
                const double m = subset_merit(trial);
                if (m > best + 1e-12) {
                    best = m;
                    best_f = f;
                }
            }
            if (best_f == p) break;
            taken[best_f] = true;
            current.push_back(best_f);
            current_merit = subset_merit(current);
        }
        return classify_subset(std::move(current));
    }

    if (params.method == "best_first") {
        // Best-first forward search: expand the open subset with the best
        // merit; stop after `stale` consecutive non-improving expansions.
        std::set<std::vector<std::size_t>> visited;
        std::vector<std::pair<double, std::vector<std::size_t>>> open;
        open.push_back({0.0, {}});
        visited.insert({});
        std::vector<std::size_t> best_subset;
        double best_merit = 0.0;
        int stale = 0;
        int expansions = 0;
        while (!open.empty() && stale <= params.stale && expansions < 64) {
            if (meter.exceeded(budget)) return finish(FsOutcome::Status::timeout, {});
            const auto it = std::max_element(open.begin(), open.end());
            auto [m, subset] = *it;
            open.erase(it);
            ++expansions;
            bool improved = false;
            for (std::size_t f = 0; f < p; ++f) {
                if (std::find(subset.begin(), subset.end(), f) != subset.end()) continue;
                std::vector<std::size_t> child = subset;
                child.push_back(f);
                std::sort(child.begin(), child.end());
                if (!visited.insert(child).second) continue;
                const double cm = subset_merit(child);
                if (cm > best_merit + 1e-12) {
                    best_merit = cm;
                    best_subset = child;
                    improved = true;
                }
                open.push_back({cm, std::move(child)});
            }
            stale = improved ? 0 : stale + 1;
        }
        return classify_subset(std::move(best_subset));
    }

    throw Error("unknown feature-selection method '" + params.method + "'");
}

}  // namespace psbo
