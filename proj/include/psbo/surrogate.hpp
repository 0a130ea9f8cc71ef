#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psbo/hyperspace.hpp"
#include "psbo/regtree.hpp"
#include "psbo/rng.hpp"

namespace psbo {

enum class Provenance { tested, rough_idw, cache_injected, rule_injected };

const char* provenance_name(Provenance p);

struct DataPoint {
    Combination combo;
    double adjusted_error = 1.0;  // penalty-adjusted, in [0, 1]
    Provenance provenance = Provenance::tested;
};

// Dense encoding of a combination: numerics scaled to [0, 1] on their
// declared scale, categoricals as level indices, inactive parameters as a
// reserved code so trees can split on activity.
std::vector<double> encode_combination(const ParamSpace& space, const Combination& c);

// Per-algorithm random-forest regressor over combinations.
class SurrogateForest {
public:
    static constexpr int kDefaultTrees = 10;

    static SurrogateForest fit(const ParamSpace& space, std::vector<DataPoint> points,
                               std::uint64_t seed, int trees = kDefaultTrees);

    // (mean, spread): average and sample std-dev across trees.
    std::pair<double, double> predict(const Combination& c) const;

    const std::vector<DataPoint>& points() const { return points_; }
    const std::string& space_id() const { return space_id_; }
    std::uint64_t seed() const { return seed_; }
    bool empty() const { return trees_.empty(); }

private:
    std::string space_id_;
    const ParamSpace* space_ = nullptr;
    std::vector<RegressionTree> trees_;
    std::vector<DataPoint> points_;
    std::uint64_t seed_ = 0;
};

// Standard expected improvement for minimization; spread = 0 degenerates
// to max(0, best - mean).
double expected_improvement(double mean, double spread, double best);

// Alternating proposal stream: odd positions (1-based) maximize EI over a
// pool of random candidates plus one-parameter mutations of the
// incumbents; even positions are uniform random. Combinations at Hamming
// distance 0 from an already-tested point (rough estimates and injected
// points do not count) are redrawn up to 50 times, then allowed.
class Proposer {
public:
    Proposer(const SurrogateForest& forest, const ParamSpace& space,
             std::vector<Combination> incumbents, Rng& rng);
    Combination next();

private:
    Combination guided();
    Combination random_non_duplicate();
    bool is_duplicate(const Combination& c) const;

    const SurrogateForest& forest_;
    const ParamSpace& space_;
    std::vector<Combination> incumbents_;
    Rng& rng_;
    double best_ = 1.0;
    int position_ = 0;
};

// One batch from a fresh Proposer; count must be even (half guided, half
// random).
std::vector<Combination> propose(const SurrogateForest& forest, const ParamSpace& space,
                                 const std::vector<Combination>& incumbents, Rng& rng,
                                 int count = 10);

}  // namespace psbo
