#include "psbo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "psbo/caches.hpp"
#include "psbo/error.hpp"
#include "psbo/feature_selection.hpp"
#include "psbo/retest.hpp"
#include "psbo/sampling.hpp"
#include "psbo/schedule.hpp"
#include "psbo/surrogate.hpp"
#include "psbo/tournament.hpp"

namespace psbo {

bool TechniqueToggles::enabled(int technique) const {
    switch (technique) {
        case 1: return distance_selection;
        case 2: return multi_fold;
        case 3: return growing_budgets;
        case 4: return final_cv;
        case 5: return inspect_fs;
        case 6: return fs_penalty;
        case 7: return meta_penalty;
        case 8: return validity_rules;
    }
    throw ConfigError("technique number must be in 1..8");
}

void TechniqueToggles::set(int technique, bool value) {
    switch (technique) {
        case 1: distance_selection = value; return;
        case 2: multi_fold = value; return;
        case 3: growing_budgets = value; return;
        case 4: final_cv = value; return;
        case 5: inspect_fs = value; return;
        case 6: fs_penalty = value; return;
        case 7: meta_penalty = value; return;
        case 8: validity_rules = value; return;
    }
    throw ConfigError("technique number must be in 1..8");
}

double apply_penalties(double raw_error, bool used_fs, int n_b, double fs_penalty,
                       double per_base_penalty) {
    double adjusted = raw_error;
    if (used_fs) adjusted *= fs_penalty;
    if (n_b > 0) adjusted *= 1.0 + per_base_penalty * n_b;
    return std::min(1.0, adjusted);
}

nlohmann::json SearchReport::to_json() const {
    nlohmann::json rounds_json = nlohmann::json::array();
    for (const RoundSummary& r : rounds)
        rounds_json.push_back(
            {{"round", r.round}, {"survivors", r.survivors}, {"evaluations", r.evaluations}});
    return {{"champion",
             {{"algorithm", champion_algorithm},
              {"combination", champion_combination},
              {"estimate", champion_estimate},
              {"feature_selection",
               {{"used", champion_used_fs}, {"outcome", champion_fs_outcome}}}}},
            {"rounds", rounds_json},
            {"distinct_combinations_tested", distinct_combinations_tested},
            {"truncated", truncated},
            {"elapsed", elapsed},
            {"config", config}};
}

namespace {

struct TrackedCombo {
    Combination combo;
    std::uint64_t hash = 0;
    double raw = 1.0;
    double adjusted = 1.0;
    Provenance provenance = Provenance::tested;
    int last_round = 0;
    bool tested = false;       // an actual test (not a skip or rough update)
    bool unpromising = false;  // tau flag, bookkeeping only
};

struct AlgState {
    const AlgorithmEntry* entry = nullptr;
    std::size_t index = 0;  // stable RNG label
    bool alive = true;
    std::vector<TrackedCombo> tracked;
    std::map<std::uint64_t, std::size_t> by_hash;

    double best_raw() const {
        double best = 1.0;
        for (const TrackedCombo& t : tracked) best = std::min(best, t.raw);
        return best;
    }
};

struct FoldDetail {
    int fold = 0;
    std::string status;
    double error = 1.0;
    double fs_time = 0.0, train_time = 0.0, validate_time = 0.0;
};

struct EvalOutcome {
    double raw = 1.0;
    std::string status = "complete";
    std::string fs_result;      // "", "selected", "all", "none", "timeout"
    std::string cache_insert;   // "", "timeout", "degenerate"
    std::string skip_reason;    // "", "rule", "cache-timeout", "cache-degenerate"
    std::string rule_id;
    std::string verdict;
    std::vector<FoldDetail> folds;
    bool real_test = false;
    bool cache_hit = false;
    bool counts_trial = false;
    bool counts_success = false;
};

struct BudgetExhausted {};

class Engine {
public:
    Engine(const Dataset& data, const SearchConfig& cfg, TraceSink& trace)
        : data_(data),
          cfg_(cfg),
          trace_(trace),
          size_(classify_size(data)),
          clock_(cfg.clock),
          bases_(Registry::standard()) {
        meta_ = {data_.n(), data_.p(), data_.class_count()};
        rules_ = builtin_rules();

        ScheduleOptions sopts;
        sopts.tau0 = cfg_.tau0;
        sopts.keep_round1 = cfg_.keep_round1;
        sopts.keep_later = cfg_.keep_later;
        sopts.grow_budgets = cfg_.techniques.growing_budgets;
        schedule_ = make_schedule(size_.is_large(), sopts);

        std::optional<int> k = cfg_.k_override;
        if (!cfg_.techniques.multi_fold && !k) k = 1;  // T2 off: single fold
        plan_ = make_sampling_plan(data_, size_, k, cfg_.seed);

        // Only the base entries exist up front; meta/ensemble entries are
        // built after round-1 base pruning so their slots can never select
        // a base removed in round 1.
        for (const AlgorithmEntry& e : bases_.entries()) {
            if (e.kind != AlgKind::base) continue;
            AlgState s;
            s.entry = &e;
            s.index = algs_.size();
            algs_.push_back(std::move(s));
        }
    }

    SearchResult run() {
        try {
            round_one();
            for (int r = 2; r <= 4; ++r) intermediate_round(r);
            return final_round();
        } catch (const BudgetExhausted&) {
            truncated_ = true;
            return champion_by_estimate();
        }
    }

private:
    const Dataset& data_;
    SearchConfig cfg_;
    TraceSink& trace_;
    SizeClass size_;
    SamplingPlan plan_;
    std::vector<RoundSchedule> schedule_;
    SearchClock clock_;
    RuleSet rules_;
    DatasetMeta meta_;
    Registry bases_;
    Registry full_;  // bases + metas, built after round-1 base pruning
    std::vector<AlgState> algs_;
    FsCache timeout_cache_, degenerate_cache_;
    std::set<std::pair<std::string, std::uint64_t>> tested_hashes_;
    std::vector<RoundSummary> rounds_;
    bool truncated_ = false;
    std::size_t round_evaluations_ = 0;

    const RoundSchedule& sched(int round) const {
        return schedule_[static_cast<std::size_t>(round - 1)];
    }

    const Registry& registry_for(const AlgState& alg) const {
        return alg.entry->kind == AlgKind::base ? bases_ : full_;
    }

    void check_global_budget() {
        if (cfg_.global_budget && clock_.elapsed() > *cfg_.global_budget) throw BudgetExhausted{};
    }

    double effective_fs_penalty() const {
        return cfg_.techniques.fs_penalty ? cfg_.fs_penalty : 1.0;
    }
    double effective_base_penalty() const {
        return cfg_.techniques.meta_penalty ? cfg_.per_base_penalty : 0.0;
    }

    std::vector<std::string> survivors() const {
        std::vector<std::string> out;
        for (const AlgState& a : algs_)
            if (a.alive) out.push_back(a.entry->id);
        return out;
    }

    void trace_round_start(int round) {
        const RoundSchedule& s = sched(round);
        nlohmann::json rec = {{"kind", "round-start"}, {"round", round},
                              {"tau", s.tau},          {"lf", s.budget_fs},
                              {"lt", s.budget_train},  {"cycles", s.bo_cycles},
                              {"fraction", s.training_fraction}, {"keep", s.keep_fraction},
                              {"survivors", survivors()}};
        if (round == 5) rec["h"] = final_h();
        trace_.write(std::move(rec));
        round_evaluations_ = 0;
    }

    void finish_round(int round) {
        rounds_.push_back({round, survivors(), round_evaluations_});
    }

    int final_h() const {
        if (cfg_.h_override) return *cfg_.h_override;
        return size_.is_large() ? 3 : 10;
    }

    // -----------------------------------------------------------------
    // Evaluation of a single combination

    EvalOutcome evaluate(AlgState& alg, const Combination& combo, int round) {
        check_global_budget();
        const ParamSpace& space = alg.entry->space;
        EvalOutcome out;

        if (cfg_.techniques.validity_rules) {
            const Verdict v = rules_.check(space, combo, meta_);
            if (!v.ok()) {
                out.status = "rule-skip";
                out.skip_reason = "rule";
                out.rule_id = v.rule_id;
                out.verdict = v.kind == VerdictKind::invalid ? "invalid" : "infeasible";
                out.counts_trial = true;
                return out;
            }
        }

        const bool with_fs = has_fs_block(space, combo);
        if (with_fs) {
            const Combination block = fs_block(space, combo);
            if (cfg_.techniques.growing_budgets && timeout_cache_.contains(block)) {
                out.status = "cache-skip";
                out.skip_reason = "cache-timeout";
                out.cache_hit = true;
                return out;
            }
            if (cfg_.techniques.inspect_fs && degenerate_cache_.contains(block)) {
                out.status = "cache-skip";
                out.skip_reason = "cache-degenerate";
                out.cache_hit = true;
                return out;
            }
        }

        const RoundSchedule& s = sched(round);
        out.real_test = true;
        out.counts_trial = true;
        out.counts_success = true;

        std::vector<std::uint32_t> all_cols(data_.p());
        std::iota(all_cols.begin(), all_cols.end(), 0u);

        double error_sum = 0.0;
        std::size_t folds_counted = 0;
        bool short_circuit = false;

        for (int fold = 1; fold <= plan_.k && !short_circuit; ++fold) {
            FoldDetail detail;
            detail.fold = fold;
            const auto train_rows = training_sample(plan_, round, fold);
            const auto& validation = plan_.folds[static_cast<std::size_t>(fold - 1)].validation;

            std::vector<std::uint32_t> features = all_cols;
            const AlgorithmEntry* train_entry = alg.entry;

            if (with_fs) {
                auto fs_meter = clock_.test_meter();
                const FsOutcome fs =
                    run_feature_selection(space, combo, data_, train_rows, *fs_meter, s.budget_fs);
                detail.fs_time = fs.elapsed;
                if (fs.status == FsOutcome::Status::timeout) {
                    out.fs_result = "timeout";
                    out.status = "fs-timeout";
                    if (cfg_.techniques.growing_budgets &&
                        timeout_cache_.insert(fs_block(space, combo), "timeout"))
                        out.cache_insert = "timeout";
                    detail.status = "fs-timeout";
                    detail.error = 1.0;
                    out.folds.push_back(detail);
                    short_circuit = true;
                    break;
                }
                if (fs.status == FsOutcome::Status::all || fs.status == FsOutcome::Status::none) {
                    const std::string which = fs.status == FsOutcome::Status::all ? "all" : "none";
                    if (cfg_.techniques.inspect_fs) {
                        out.fs_result = which;
                        out.status = "degenerate-fs";
                        if (degenerate_cache_.insert(fs_block(space, combo), which))
                            out.cache_insert = "degenerate";
                        detail.status = "degenerate-fs";
                        detail.error = 1.0;
                        out.folds.push_back(detail);
                        short_circuit = true;
                        break;
                    }
                    // Technique 5 off: train anyway. All features selected
                    // behaves as no selection; none selected falls back to
                    // the majority-class learner.
                    out.fs_result = which;
                    if (fs.status == FsOutcome::Status::none)
                        train_entry = bases_.find("zeror");
                } else {
                    out.fs_result = "selected";
                    features = fs.subset;
                }
            }

            auto train_meter = clock_.test_meter();
            TrainRequest req{data_,
                             train_rows,
                             features,
                             *train_meter,
                             s.budget_train,
                             Rng::derive(cfg_.seed, {static_cast<std::uint64_t>(round),
                                                     static_cast<std::uint64_t>(fold),
                                                     combination_hash(space, combo)})};
            const TrainOutcome trained =
                train_model(registry_for(alg), *train_entry,
                            train_entry == alg.entry ? combo
                                                     : default_combination(train_entry->space),
                            req);
            detail.train_time = train_meter->elapsed();

            if (!trained.model) {
                detail.status = "train-timeout";
                detail.error = 1.0;
            } else {
                auto val_meter = clock_.test_meter();
                detail.error = evaluate_error(*trained.model, data_, validation, *val_meter);
                detail.validate_time = val_meter->elapsed();
                detail.status =
                    trained.status == TrainStatus::complete ? "complete" : "partial-model";
            }
            error_sum += detail.error;
            ++folds_counted;
            out.folds.push_back(detail);
        }

        if (short_circuit) {
            out.raw = 1.0;
        } else {
            out.raw = folds_counted ? error_sum / static_cast<double>(folds_counted) : 1.0;
            out.status = "complete";
            for (const FoldDetail& f : out.folds) {
                if (f.status == "train-timeout") {
                    out.status = "train-timeout";
                    break;
                }
                if (f.status == "partial-model") out.status = "partial-model";
            }
        }
        return out;
    }

    // Record an outcome: update the tracked pool, the surrogate data and
    // the trace.
    void commit(AlgState& alg, const Combination& combo, const EvalOutcome& out, int round) {
        const ParamSpace& space = alg.entry->space;
        const std::uint64_t hash = combination_hash(space, combo);
        const bool with_fs = has_fs_block(space, combo);
        const int n_b = base_count(*alg.entry, combo);

        Provenance prov = Provenance::tested;
        if (out.skip_reason == "rule")
            prov = Provenance::rule_injected;
        else if (out.cache_hit)
            prov = Provenance::cache_injected;

        const double adjusted = apply_penalties(out.raw, with_fs, n_b, effective_fs_penalty(),
                                                effective_base_penalty());

        bool superseded = false;
        auto it = alg.by_hash.find(hash);
        if (it == alg.by_hash.end()) {
            TrackedCombo t;
            t.combo = combo;
            t.hash = hash;
            alg.by_hash.emplace(hash, alg.tracked.size());
            alg.tracked.push_back(std::move(t));
            it = alg.by_hash.find(hash);
        } else {
            superseded = alg.tracked[it->second].provenance == Provenance::rough_idw &&
                         out.real_test;
        }
        TrackedCombo& t = alg.tracked[it->second];
        t.raw = out.raw;
        t.adjusted = adjusted;
        t.provenance = prov;
        t.last_round = round;
        t.tested = t.tested || out.real_test;

        if (out.real_test) {
            tested_hashes_.insert({alg.entry->id, hash});
            ++round_evaluations_;
        }

        if (!out.skip_reason.empty()) {
            nlohmann::json rec = {{"kind", "skip"},
                                  {"round", round},
                                  {"algorithm", alg.entry->id},
                                  {"combination", combination_to_json(space, combo)},
                                  {"reason", out.skip_reason},
                                  {"raw", 1.0},
                                  {"adjusted", adjusted}};
            if (!out.rule_id.empty()) {
                rec["rule"] = out.rule_id;
                rec["verdict"] = out.verdict;
            }
            trace_.write(std::move(rec));
            return;
        }

        nlohmann::json folds = nlohmann::json::array();
        for (const FoldDetail& f : out.folds)
            folds.push_back({{"fold", f.fold},
                             {"status", f.status},
                             {"error", f.error},
                             {"fs_time", f.fs_time},
                             {"train_time", f.train_time},
                             {"validate_time", f.validate_time}});
        nlohmann::json rec = {{"kind", "eval"},
                              {"round", round},
                              {"algorithm", alg.entry->id},
                              {"combination", combination_to_json(space, combo)},
                              {"raw", out.raw},
                              {"adjusted", adjusted},
                              {"status", out.status},
                              {"provenance", provenance_name(prov)},
                              {"folds", folds}};
        if (!out.fs_result.empty()) rec["fs_result"] = out.fs_result;
        if (!out.cache_insert.empty()) rec["cache_insert"] = out.cache_insert;
        if (superseded) rec["superseded_rough"] = true;
        trace_.write(std::move(rec));
    }

    void commit_rough(AlgState& alg, std::size_t tracked_index, double new_raw, int round) {
        TrackedCombo& t = alg.tracked[tracked_index];
        t.raw = new_raw;
        t.adjusted = apply_penalties(new_raw, has_fs_block(alg.entry->space, t.combo),
                                     base_count(*alg.entry, t.combo), effective_fs_penalty(),
                                     effective_base_penalty());
        t.provenance = Provenance::rough_idw;
        t.last_round = round;
        trace_.write({{"kind", "eval"},
                      {"round", round},
                      {"algorithm", alg.entry->id},
                      {"combination", combination_to_json(alg.entry->space, t.combo)},
                      {"raw", t.raw},
                      {"adjusted", t.adjusted},
                      {"status", "rough-idw"},
                      {"provenance", provenance_name(t.provenance)}});
    }

    // -----------------------------------------------------------------
    // Trial loop (technique 5 counting rules)

    void trial_loop(AlgState& alg, int q, int cap, int round,
                    const std::function<Combination()>& next_proposal) {
        int successes = 0, trials = 0, consecutive_hits = 0;
        while (successes < q && trials < cap) {
            const Combination combo = next_proposal();
            const EvalOutcome out = evaluate(alg, combo, round);
            commit(alg, combo, out, round);
            if (out.cache_hit) {
                // Cache hits cost nothing and count toward neither q nor
                // the trial cap; 50 consecutive hits end the loop.
                if (++consecutive_hits >= 50) break;
                continue;
            }
            consecutive_hits = 0;
            ++trials;
            if (out.counts_success && out.status != "degenerate-fs") ++successes;
        }
    }

    // -----------------------------------------------------------------
    // Pruning

    void flag_unpromising(AlgState& alg, int round) {
        const double tau = sched(round).tau;
        double best = 1.0;
        for (const TrackedCombo& t : alg.tracked)
            if (t.last_round == round) best = std::min(best, t.raw);
        std::size_t flagged = 0;
        for (TrackedCombo& t : alg.tracked) {
            if (t.last_round == round && t.raw >= best + tau && !t.unpromising) {
                t.unpromising = true;
                ++flagged;
            }
        }
        trace_.write({{"kind", "prune"},
                      {"scope", "combinations"},
                      {"round", round},
                      {"algorithm", alg.entry->id},
                      {"tau", tau},
                      {"flagged", flagged}});
    }

    void prune_group(const std::vector<std::size_t>& group, int round, const char* scope) {
        std::vector<std::size_t> alive;
        for (std::size_t i : group)
            if (algs_[i].alive) alive.push_back(i);
        if (alive.empty()) return;

        const double tau = sched(round).tau;
        const double keep_fraction = sched(round).keep_fraction;

        double best = 1.0;
        for (std::size_t i : alive) best = std::min(best, algs_[i].best_raw());

        auto by_error = alive;
        std::sort(by_error.begin(), by_error.end(), [&](std::size_t a, std::size_t b) {
            const double ea = algs_[a].best_raw(), eb = algs_[b].best_raw();
            if (ea != eb) return ea < eb;
            return a < b;
        });

        std::vector<std::size_t> remaining;
        for (std::size_t i : by_error)
            if (algs_[i].best_raw() < best + tau) remaining.push_back(i);

        const std::size_t keep_target = static_cast<std::size_t>(
            std::ceil(keep_fraction * static_cast<double>(alive.size())));
        if (remaining.size() > keep_target) remaining.resize(keep_target);

        // Keep at least min(n_a, 3) algorithms.
        const std::size_t floor_count = std::min<std::size_t>(alive.size(), 3);
        for (std::size_t i : by_error) {
            if (remaining.size() >= floor_count) break;
            if (std::find(remaining.begin(), remaining.end(), i) == remaining.end())
                remaining.push_back(i);
        }

        // Random forest and SVM are protected through the first two rounds.
        if (round <= 2) {
            for (std::size_t i : alive) {
                if (algs_[i].entry->protected_in_early_rounds &&
                    std::find(remaining.begin(), remaining.end(), i) == remaining.end())
                    remaining.push_back(i);
            }
        }

        std::vector<std::string> removed_ids, kept_ids;
        for (std::size_t i : alive) {
            const bool kept =
                std::find(remaining.begin(), remaining.end(), i) != remaining.end();
            algs_[i].alive = kept;
            (kept ? kept_ids : removed_ids).push_back(algs_[i].entry->id);
        }
        trace_.write({{"kind", "prune"},
                      {"scope", scope},
                      {"round", round},
                      {"tau", tau},
                      {"keep_fraction", keep_fraction},
                      {"best_error", best},
                      {"removed", removed_ids},
                      {"kept", kept_ids}});
    }

    // -----------------------------------------------------------------
    // Round 1

    void test_algorithm_round1(AlgState& alg) {
        const Combination def = default_combination(alg.entry->space);
        const EvalOutcome out = evaluate(alg, def, 1);
        commit(alg, def, out, 1);

        Rng rng(Rng::derive(cfg_.seed, {alg.index, 1, 0xA1u}));
        trial_loop(alg, cfg_.round1_random, cfg_.trial_cap_round1, 1,
                   [&] { return random_combination(alg.entry->space, rng); });
        flag_unpromising(alg, 1);
    }

    void round_one() {
        trace_round_start(1);

        std::vector<std::size_t> base_group;
        for (std::size_t i = 0; i < algs_.size(); ++i) base_group.push_back(i);
        for (std::size_t i : base_group) test_algorithm_round1(algs_[i]);
        prune_group(base_group, 1, "base");

        // Meta/ensemble spaces embed only the surviving bases.
        std::vector<AlgorithmEntry> surviving;
        for (const AlgState& a : algs_)
            if (a.alive) surviving.push_back(*a.entry);
        for (const AlgorithmEntry& e : bases_.entries()) full_.add(e);
        std::vector<std::size_t> meta_group;
        for (AlgorithmEntry& m : Registry::standard_metas(surviving)) full_.add(std::move(m));
        for (const AlgorithmEntry& e : full_.entries()) {
            if (e.kind == AlgKind::base) continue;
            AlgState s;
            s.entry = &e;
            s.index = algs_.size();
            meta_group.push_back(algs_.size());
            algs_.push_back(std::move(s));
        }
        for (std::size_t i : meta_group) test_algorithm_round1(algs_[i]);
        prune_group(meta_group, 1, "meta");

        if (cfg_.techniques.inspect_fs) inject_cache_points();
        finish_round(1);
    }

    void inject_cache_points() {
        // One data point per (cache entry, surviving algorithm): the cached
        // block paired with a fresh random combination of the algorithm.
        auto inject_from = [&](const FsCache& cache, const char* cache_name) {
            for (const FsCache::Entry* entry : cache.entries()) {
                for (AlgState& alg : algs_) {
                    if (!alg.alive) continue;
                    Rng rng(Rng::derive(cfg_.seed, {alg.index, 0x1273c7u,
                                                    combination_hash(fs_space(), entry->block)}));
                    Combination combo = random_combination(alg.entry->space, rng);
                    for (std::size_t i = 0; i < fs_space().size(); ++i) {
                        const auto idx = alg.entry->space.index_of(fs_space().param(i).name);
                        combo.values[*idx] = entry->block.values[i];
                    }
                    const std::uint64_t hash = combination_hash(alg.entry->space, combo);
                    auto it = alg.by_hash.find(hash);
                    if (it == alg.by_hash.end()) {
                        TrackedCombo t;
                        t.combo = combo;
                        t.hash = hash;
                        t.raw = 1.0;
                        t.adjusted = 1.0;
                        t.provenance = Provenance::cache_injected;
                        t.last_round = 1;
                        alg.by_hash.emplace(hash, alg.tracked.size());
                        alg.tracked.push_back(std::move(t));
                    }
                    trace_.write({{"kind", "inject"},
                                  {"round", 1},
                                  {"algorithm", alg.entry->id},
                                  {"cache", cache_name},
                                  {"cause", entry->cause},
                                  {"combination",
                                   combination_to_json(alg.entry->space, combo)},
                                  {"error", 1.0}});
                }
            }
        };
        inject_from(degenerate_cache_, "degenerate");
        inject_from(timeout_cache_, "timeout");
    }

    // -----------------------------------------------------------------
    // Rounds 2..4

    void intermediate_round(int round) {
        check_global_budget();
        trace_round_start(round);

        for (AlgState& alg : algs_) {
            if (!alg.alive) continue;
            step_retest_and_rough(alg, round);
            step_bo_cycles(alg, round);
            flag_unpromising(alg, round);
        }

        std::vector<std::size_t> pooled;
        for (std::size_t i = 0; i < algs_.size(); ++i) pooled.push_back(i);
        prune_group(pooled, round, "pooled");
        finish_round(round);
    }

    void step_retest_and_rough(AlgState& alg, int round) {
        const ParamSpace& space = alg.entry->space;

        // Combinations used in the previous round with an estimate < 100%.
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < alg.tracked.size(); ++i) {
            const TrackedCombo& t = alg.tracked[i];
            if (t.last_round == round - 1 && t.raw < 1.0) eligible.push_back(i);
        }

        std::vector<double> errors;
        errors.reserve(eligible.size());
        for (std::size_t i : eligible) errors.push_back(alg.tracked[i].raw);

        std::vector<std::size_t> selected_local;
        if (cfg_.techniques.distance_selection) {
            selected_local = select_for_retest(
                errors,
                [&](std::size_t a, std::size_t b) {
                    return hamming_distance(space, alg.tracked[eligible[a]].combo,
                                            alg.tracked[eligible[b]].combo);
                },
                static_cast<std::size_t>(cfg_.n_c), cfg_.t_d);
        } else {
            // Technique 1 off: the lowest-error combinations, no distance
            // constraint.
            std::vector<std::size_t> order(eligible.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (errors[a] != errors[b]) return errors[a] < errors[b];
                return a < b;
            });
            order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg_.n_c)));
            selected_local = order;
        }

        // Retest the selected combinations on the expanded sample.
        std::vector<std::size_t> selected_tracked;
        std::vector<double> ratios;
        std::set<std::size_t> selected_set;
        for (std::size_t local : selected_local) {
            const std::size_t ti = eligible[local];
            selected_set.insert(ti);
            const double prev_error = alg.tracked[ti].raw;
            const Combination combo = alg.tracked[ti].combo;
            const EvalOutcome out = evaluate(alg, combo, round);
            commit(alg, combo, out, round);
            selected_tracked.push_back(ti);
            ratios.push_back(compute_ratio(prev_error, out.raw));
        }

        // Rough estimates for the non-selected combinations.
        double avg_ratio = 1.0;
        if (!ratios.empty())
            avg_ratio = std::accumulate(ratios.begin(), ratios.end(), 0.0) /
                        static_cast<double>(ratios.size());
        for (std::size_t i : eligible) {
            if (selected_set.count(i)) continue;
            const double prev_error = alg.tracked[i].raw;
            double ratio = avg_ratio;
            if (cfg_.techniques.distance_selection && !ratios.empty()) {
                std::vector<int> distances(selected_tracked.size());
                for (std::size_t j = 0; j < selected_tracked.size(); ++j)
                    distances[j] = hamming_distance(space, alg.tracked[i].combo,
                                                    alg.tracked[selected_tracked[j]].combo);
                ratio = idw_ratio(distances, ratios);
            }
            if (ratios.empty()) {
                // Nothing was retested; carry the estimate forward.
                alg.tracked[i].last_round = round;
                continue;
            }
            commit_rough(alg, i, std::min(1.0, prev_error * ratio), round);
        }

        // 100%-error combinations keep their estimates for this round.
        for (TrackedCombo& t : alg.tracked)
            if (t.last_round == round - 1) t.last_round = round;
    }

    void step_bo_cycles(AlgState& alg, int round) {
        const int cycles = sched(round).bo_cycles;
        const ParamSpace& space = alg.entry->space;
        for (int cycle = 1; cycle <= cycles; ++cycle) {
            check_global_budget();
            std::vector<DataPoint> points;
            points.reserve(alg.tracked.size());
            for (const TrackedCombo& t : alg.tracked)
                points.push_back({t.combo, t.adjusted, t.provenance});
            const SurrogateForest forest = SurrogateForest::fit(
                space, std::move(points),
                Rng::derive(cfg_.seed, {alg.index, static_cast<std::uint64_t>(round),
                                        static_cast<std::uint64_t>(cycle), 0xF0u}),
                cfg_.surrogate_trees);

            std::vector<std::size_t> order(alg.tracked.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (alg.tracked[a].raw != alg.tracked[b].raw)
                    return alg.tracked[a].raw < alg.tracked[b].raw;
                return a < b;
            });
            std::vector<Combination> incumbents;
            for (std::size_t i = 0; i < order.size() && incumbents.size() < 10; ++i)
                incumbents.push_back(alg.tracked[order[i]].combo);

            trace_.write({{"kind", "propose"},
                          {"round", round},
                          {"algorithm", alg.entry->id},
                          {"cycle", cycle},
                          {"count", 10}});

            Rng rng(Rng::derive(cfg_.seed, {alg.index, static_cast<std::uint64_t>(round),
                                            static_cast<std::uint64_t>(cycle), 0xB0u}));
            Proposer proposer(forest, space, incumbents, rng);
            trial_loop(alg, 10, 10 + cfg_.trial_cap_slack, round,
                       [&] { return proposer.next(); });
        }
    }

    // -----------------------------------------------------------------
    // Final round

    struct Candidate {
        std::size_t alg_index = 0;
        Combination combo;
        double prev_estimate = 1.0;
        std::vector<double> fold_errors;
        double total_time = 0.0;
    };

    std::vector<Candidate> collect_candidates() {
        std::vector<Candidate> out;
        for (std::size_t ai = 0; ai < algs_.size(); ++ai) {
            const AlgState& alg = algs_[ai];
            if (!alg.alive) continue;
            std::vector<std::size_t> order;
            for (std::size_t i = 0; i < alg.tracked.size(); ++i)
                if (alg.tracked[i].tested) order.push_back(i);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (alg.tracked[a].raw != alg.tracked[b].raw)
                    return alg.tracked[a].raw < alg.tracked[b].raw;
                return a < b;
            });
            const std::size_t take = std::min<std::size_t>(order.size(), 10);
            for (std::size_t i = 0; i < take; ++i) {
                Candidate c;
                c.alg_index = ai;
                c.combo = alg.tracked[order[i]].combo;
                c.prev_estimate = alg.tracked[order[i]].raw;
                out.push_back(std::move(c));
            }
        }
        return out;
    }

    SearchResult final_round() {
        check_global_budget();
        trace_round_start(5);

        if (!cfg_.techniques.final_cv) {
            finish_round(5);
            return champion_by_estimate();
        }

        std::vector<Candidate> candidates = collect_candidates();
        if (candidates.empty()) {
            finish_round(5);
            return champion_by_estimate();
        }

        const int h = final_h();
        const auto cv_rows = final_cv_sample(data_, plan_, cfg_.seed);
        Rng cv_rng(Rng::derive(cfg_.seed, {0xF1A15u}));
        const auto parts = stratified_parts(data_, cv_rows, h, cv_rng);

        const RoundSchedule& s = sched(5);
        for (Candidate& c : candidates) {
            AlgState& alg = algs_[c.alg_index];
            const ParamSpace& space = alg.entry->space;
            const bool with_fs = has_fs_block(space, c.combo);
            bool dead = false;  // cache hit or FS failure kills every fold
            for (int fold = 0; fold < h; ++fold) {
                check_global_budget();
                if (dead) {
                    c.fold_errors.push_back(1.0);
                    continue;
                }
                std::vector<std::uint32_t> train_rows;
                for (int p = 0; p < h; ++p)
                    if (p != fold)
                        train_rows.insert(train_rows.end(),
                                          parts[static_cast<std::size_t>(p)].begin(),
                                          parts[static_cast<std::size_t>(p)].end());
                const auto& validation = parts[static_cast<std::size_t>(fold)];

                std::vector<std::uint32_t> features(data_.p());
                std::iota(features.begin(), features.end(), 0u);
                const AlgorithmEntry* train_entry = alg.entry;
                auto meter = clock_.test_meter();

                if (with_fs) {
                    const Combination block = fs_block(space, c.combo);
                    if ((cfg_.techniques.growing_budgets && timeout_cache_.contains(block)) ||
                        (cfg_.techniques.inspect_fs && degenerate_cache_.contains(block))) {
                        dead = true;
                        c.fold_errors.push_back(1.0);
                        continue;
                    }
                    const FsOutcome fs = run_feature_selection(space, c.combo, data_, train_rows,
                                                               *meter, s.budget_fs);
                    if (fs.status == FsOutcome::Status::timeout) {
                        if (cfg_.techniques.growing_budgets)
                            timeout_cache_.insert(block, "timeout");
                        dead = true;
                        c.fold_errors.push_back(1.0);
                        continue;
                    }
                    if (fs.status == FsOutcome::Status::all ||
                        fs.status == FsOutcome::Status::none) {
                        const std::string which =
                            fs.status == FsOutcome::Status::all ? "all" : "none";
                        if (cfg_.techniques.inspect_fs) {
                            degenerate_cache_.insert(block, which);
                            dead = true;
                            c.fold_errors.push_back(1.0);
                            continue;
                        }
                        if (fs.status == FsOutcome::Status::none)
                            train_entry = bases_.find("zeror");
                    } else {
                        features = fs.subset;
                    }
                }

                auto train_meter = clock_.test_meter();
                TrainRequest req{data_,
                                 train_rows,
                                 features,
                                 *train_meter,
                                 s.budget_train,
                                 Rng::derive(cfg_.seed,
                                             {5u, static_cast<std::uint64_t>(fold),
                                              combination_hash(space, c.combo)})};
                const TrainOutcome trained =
                    train_model(registry_for(alg), *train_entry,
                                train_entry == alg.entry
                                    ? c.combo
                                    : default_combination(train_entry->space),
                                req);
                double err = 1.0;
                double validate_time = 0.0;
                if (trained.model) {
                    auto val_meter = clock_.test_meter();
                    err = evaluate_error(*trained.model, data_, validation, *val_meter);
                    validate_time = val_meter->elapsed();
                }
                c.fold_errors.push_back(err);
                c.total_time += meter->elapsed() + train_meter->elapsed() + validate_time;
            }
            trace_.write({{"kind", "final-cv"},
                          {"round", 5},
                          {"algorithm", alg.entry->id},
                          {"combination", combination_to_json(space, c.combo)},
                          {"fold_errors", c.fold_errors},
                          {"prev_estimate", c.prev_estimate},
                          {"time", c.total_time}});
        }

        std::vector<TournamentEntry> entries;
        entries.reserve(candidates.size());
        for (const Candidate& c : candidates)
            entries.push_back({c.fold_errors, c.prev_estimate, c.total_time});
        const TournamentResult tr = run_tournament(entries);
        const Candidate& champion = candidates[tr.winner];

        double mean = 0.0;
        for (double e : champion.fold_errors) mean += e;
        mean /= static_cast<double>(champion.fold_errors.size());

        finish_round(5);
        return finish(algs_[champion.alg_index], champion.combo, mean,
                      {{"wins", tr.wins[tr.winner]}, {"tiebreak_depth", tr.tiebreak_depth}});
    }

    // Champion by previous-round estimate (technique 4 off, or truncation).
    SearchResult champion_by_estimate() {
        const AlgState* best_alg = nullptr;
        const TrackedCombo* best = nullptr;
        for (const AlgState& alg : algs_) {
            if (!alg.alive) continue;
            for (const TrackedCombo& t : alg.tracked) {
                if (!t.tested) continue;
                if (!best || t.raw < best->raw) {
                    best = &t;
                    best_alg = &alg;
                }
            }
        }
        if (!best) {
            // Nothing was ever tested (pathological budget); fall back to
            // the first algorithm's default.
            for (const AlgState& alg : algs_) {
                if (!alg.alive) continue;
                return finish(alg, default_combination(alg.entry->space), 1.0,
                              {{"selection", "fallback-default"}});
            }
            throw Error("no algorithms survived the search");
        }
        return finish(*best_alg, best->combo, best->raw, {{"selection", "lowest-estimate"}});
    }

    SearchResult finish(const AlgState& alg, const Combination& combo, double estimate,
                        nlohmann::json champion_extra) {
        const ParamSpace& space = alg.entry->space;
        const bool with_fs = has_fs_block(space, combo);

        // Train the champion on the whole data set, without budgets.
        std::vector<std::uint32_t> all_rows(data_.n());
        std::iota(all_rows.begin(), all_rows.end(), 0u);
        std::vector<std::uint32_t> features(data_.p());
        std::iota(features.begin(), features.end(), 0u);

        std::string fs_outcome = "none";
        auto meter = clock_.test_meter();
        if (with_fs) {
            const FsOutcome fs = run_feature_selection(space, combo, data_, all_rows, *meter,
                                                       std::numeric_limits<double>::infinity());
            switch (fs.status) {
                case FsOutcome::Status::selected:
                    fs_outcome = "selected";
                    features = fs.subset;
                    break;
                case FsOutcome::Status::all: fs_outcome = "all"; break;
                case FsOutcome::Status::none: fs_outcome = "none-selected"; break;
                case FsOutcome::Status::timeout: fs_outcome = "timeout"; break;
            }
        }

        TrainRequest req{data_,
                         all_rows,
                         features,
                         *meter,
                         std::numeric_limits<double>::infinity(),
                         Rng::derive(cfg_.seed, {0xF17A1u, combination_hash(space, combo)})};
        TrainOutcome trained = train_model(registry_for(alg), *alg.entry, combo, req);
        if (!trained.model)
            throw Error("final training failed for '" + alg.entry->id + "': " +
                        trained.diagnostic);

        trace_.write({{"kind", "champion"},
                      {"algorithm", alg.entry->id},
                      {"combination", combination_to_json(space, combo)},
                      {"estimate", estimate},
                      {"fs_outcome", fs_outcome},
                      {"truncated", truncated_},
                      {"detail", std::move(champion_extra)}});
        trace_.flush();

        SearchResult result;
        result.report.champion_algorithm = alg.entry->id;
        result.report.champion_combination = combination_to_json(space, combo);
        result.report.champion_estimate = estimate;
        result.report.champion_used_fs = with_fs;
        result.report.champion_fs_outcome = fs_outcome;
        result.report.rounds = rounds_;
        result.report.distinct_combinations_tested = tested_hashes_.size();
        result.report.truncated = truncated_;
        result.report.elapsed = clock_.elapsed();
        result.report.config = effective_config();

        result.model.format_version = 1;
        result.model.algorithm = alg.entry->id;
        result.model.combination = combination_to_json(space, combo);
        result.model.schema = data_.features();
        result.model.class_labels = data_.class_labels();
        result.model.model = std::move(trained.model);
        return result;
    }

    nlohmann::json effective_config() const {
        nlohmann::json toggles = nlohmann::json::object();
        for (int t = 1; t <= 8; ++t)
            toggles["t" + std::to_string(t)] = cfg_.techniques.enabled(t);
        nlohmann::json j = {{"seed", cfg_.seed},
                            {"clock", cfg_.clock == ClockMode::virtual_units ? "virtual" : "wall"},
                            {"n_c", cfg_.n_c},
                            {"t_d", cfg_.t_d},
                            {"k", plan_.k},
                            {"h", final_h()},
                            {"surrogate_trees", cfg_.surrogate_trees},
                            {"fs_penalty", cfg_.fs_penalty},
                            {"per_base_penalty", cfg_.per_base_penalty},
                            {"tau0", cfg_.tau0},
                            {"keep_round1", cfg_.keep_round1},
                            {"keep_later", cfg_.keep_later},
                            {"round1_random", cfg_.round1_random},
                            {"trial_cap_round1", cfg_.trial_cap_round1},
                            {"trial_cap_slack", cfg_.trial_cap_slack},
                            {"size_class", size_.is_large() ? "large" : "small"},
                            {"techniques", toggles},
                            {"overrides", cfg_.provenance}};
        if (cfg_.global_budget) j["global_budget"] = *cfg_.global_budget;
        return j;
    }
};

}  // namespace

SearchResult run_search(const Dataset& data, const SearchConfig& config, TraceSink& trace) {
    Engine engine(data, config, trace);
    return engine.run();
}

}  // namespace psbo
