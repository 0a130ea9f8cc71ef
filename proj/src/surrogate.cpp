#include "psbo/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "psbo/error.hpp"

namespace psbo {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::tested: return "tested";
        case Provenance::rough_idw: return "rough-idw";
        case Provenance::cache_injected: return "cache-injected";
        case Provenance::rule_injected: return "rule-injected";
    }
    return "?";
}

std::vector<double> encode_combination(const ParamSpace& space, const Combination& c) {
    std::vector<double> x(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const ParamValue& v = c.values[i];
        if (v.is_inactive()) {
            x[i] = -1.0;  // reserved activity code
        } else if (space.param(i).kind == ParamKind::numeric) {
            x[i] = space.scaled(i, v.num);
        } else {
            const auto& levels = space.param(i).levels;
            x[i] = static_cast<double>(
                std::find(levels.begin(), levels.end(), v.cat) - levels.begin());
        }
    }
    return x;
}

SurrogateForest SurrogateForest::fit(const ParamSpace& space, std::vector<DataPoint> points,
                                     std::uint64_t seed, int trees) {
    if (points.empty()) throw Error("surrogate fit requires at least one data point");
    SurrogateForest f;
    f.space_id_ = space.id();
    f.space_ = &space;
    f.points_ = std::move(points);
    f.seed_ = seed;

    const std::size_t n = f.points_.size();
    std::vector<std::vector<double>> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = encode_combination(space, f.points_[i].combo);
        y[i] = f.points_[i].adjusted_error;
    }
    RegressionTree::RowAccessor accessor = [&x](std::size_t row, std::size_t col) {
        return x[row][col];
    };

    RegressionTree::Options opts;
    opts.max_depth = -1;
    opts.min_leaf = 2;
    opts.feature_fraction = 0.7;

    Rng rng(Rng::derive(seed, {0x54406e57ULL}));
    for (int t = 0; t < trees; ++t) {
        std::vector<std::size_t> bootstrap(n);
        for (auto& r : bootstrap) r = static_cast<std::size_t>(rng.uniform_int(n));
        f.trees_.push_back(RegressionTree::fit(accessor, space.size(), bootstrap, y, opts, rng));
    }
    return f;
}

std::pair<double, double> SurrogateForest::predict(const Combination& c) const {
    if (trees_.empty() || !space_) throw Error("predict on an unfitted surrogate");
    const std::vector<double> x = encode_combination(*space_, c);
    double sum = 0.0;
    std::vector<double> outs;
    outs.reserve(trees_.size());
    for (const auto& t : trees_) {
        const double o = t.predict(x);
        outs.push_back(o);
        sum += o;
    }
    const double mean = sum / static_cast<double>(outs.size());
    double spread = 0.0;
    if (outs.size() > 1) {
        double ss = 0.0;
        for (double o : outs) ss += (o - mean) * (o - mean);
        spread = std::sqrt(ss / static_cast<double>(outs.size() - 1));
    }
    return {mean, spread};
}

double expected_improvement(double mean, double spread, double best) {
    if (spread <= 0.0) return std::max(0.0, best - mean);
    const double z = (best - mean) / spread;
    const double phi = std::exp(-0.5 * z * z) / 2.50662827463100050242;  // pdf
    const double Phi = 0.5 * std::erfc(-z / 1.41421356237309504880);     // cdf
    return (best - mean) * Phi + spread * phi;
}

namespace {

constexpr int kRedrawAttempts = 50;
constexpr int kRandomPool = 500;
constexpr int kMutationsPerIncumbent = 5;
constexpr std::size_t kMaxIncumbents = 10;

}  // namespace

Proposer::Proposer(const SurrogateForest& forest, const ParamSpace& space,
                   std::vector<Combination> incumbents, Rng& rng)
    : forest_(forest), space_(space), incumbents_(std::move(incumbents)), rng_(rng) {
    if (incumbents_.size() > kMaxIncumbents) incumbents_.resize(kMaxIncumbents);
    for (const DataPoint& p : forest_.points()) best_ = std::min(best_, p.adjusted_error);
}

bool Proposer::is_duplicate(const Combination& c) const {
    for (const DataPoint& p : forest_.points()) {
        if (p.provenance != Provenance::tested) continue;
        if (hamming_distance(space_, c, p.combo) == 0) return true;
    }
    return false;
}

Combination Proposer::random_non_duplicate() {
    Combination c = random_combination(space_, rng_);
    for (int attempt = 0; attempt < kRedrawAttempts && is_duplicate(c); ++attempt)
        c = random_combination(space_, rng_);
    return c;  // after redraw exhaustion the duplicate is allowed
}

Combination Proposer::guided() {
    std::vector<Combination> pool;
    pool.reserve(kRandomPool + kMaxIncumbents * kMutationsPerIncumbent);
    for (int i = 0; i < kRandomPool; ++i) pool.push_back(random_combination(space_, rng_));
    for (const Combination& incumbent : incumbents_)
        for (int m = 0; m < kMutationsPerIncumbent; ++m)
            pool.push_back(mutate_one(space_, incumbent, rng_));

    const Combination* best_candidate = nullptr;
    double best_ei = -1.0;
    for (const Combination& c : pool) {
        if (is_duplicate(c)) continue;
        const auto [mean, spread] = forest_.predict(c);
        const double ei = expected_improvement(mean, spread, best_);
        if (ei > best_ei) {
            best_ei = ei;
            best_candidate = &c;
        }
    }
    // Every candidate already tested: fall back to the random redraw rule.
    if (!best_candidate) return random_non_duplicate();
    return *best_candidate;
}

Combination Proposer::next() {
    ++position_;
    return position_ % 2 == 1 ? guided() : random_non_duplicate();
}

std::vector<Combination> propose(const SurrogateForest& forest, const ParamSpace& space,
                                 const std::vector<Combination>& incumbents, Rng& rng,
                                 int count) {
    if (count % 2 != 0) throw Error("propose: count must be even");
    Proposer proposer(forest, space, incumbents, rng);
    std::vector<Combination> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(proposer.next());
    return out;
}

}  // namespace psbo
