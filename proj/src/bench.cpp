#include "psbo/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "psbo/error.hpp"
#include "psbo/feature_selection.hpp"
#include "psbo/sampling.hpp"

namespace psbo {

namespace {

// Auto-WEKA-style fixed per-test limits, scaled to cost units (the paper's
// baseline uses 15 min for feature selection and 150 min for training).
constexpr double kBaselineFsBudget = 90.0;
constexpr double kBaselineTrainBudget = 900.0;

std::string dataset_name(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const std::size_t dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    return name;
}

}  // namespace

std::pair<Dataset, Dataset> bench_split(const Dataset& full, double test_fraction,
                                        std::uint64_t seed) {
    const int parts = std::max(2, static_cast<int>(std::lround(1.0 / test_fraction)));
    std::vector<std::uint32_t> all(full.n());
    std::iota(all.begin(), all.end(), 0u);
    Rng rng(Rng::derive(seed, {0xbe9c4u}));
    const auto split = stratified_parts(full, all, parts, rng);
    std::vector<std::uint32_t> train_rows;
    for (int p = 1; p < parts; ++p)
        train_rows.insert(train_rows.end(), split[static_cast<std::size_t>(p)].begin(),
                          split[static_cast<std::size_t>(p)].end());
    std::sort(train_rows.begin(), train_rows.end());
    return {subset_rows(full, train_rows), subset_rows(full, split[0])};
}

double holdout_error(const SavedModel& model, const Dataset& test) {
    std::size_t wrong = 0;
    for (std::uint32_t r = 0; r < test.n(); ++r)
        if (model.model->predict(test, r) != test.target(r)) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(test.n());
}

RandomSearchResult random_search(const Dataset& train, std::uint64_t seed, double budget,
                                 ClockMode clock_mode) {
    const Registry registry = Registry::standard();
    const RuleSet rules = builtin_rules();
    const DatasetMeta meta{train.n(), train.p(), train.class_count()};
    SearchClock clock(clock_mode);
    Rng rng(Rng::derive(seed, {0x8a9d0u}));

    // Single stratified 1/3 holdout over the full training data.
    std::vector<std::uint32_t> all(train.n());
    std::iota(all.begin(), all.end(), 0u);
    const auto parts = stratified_parts(train, all, 3, rng);
    const std::vector<std::uint32_t>& validation = parts[0];
    std::vector<std::uint32_t> fit_rows;
    for (int p = 1; p < 3; ++p)
        fit_rows.insert(fit_rows.end(), parts[static_cast<std::size_t>(p)].begin(),
                        parts[static_cast<std::size_t>(p)].end());

    std::vector<std::uint32_t> all_cols(train.p());
    std::iota(all_cols.begin(), all_cols.end(), 0u);

    const AlgorithmEntry* best_entry = nullptr;
    Combination best_combo;
    double best_error = 2.0;
    std::size_t distinct = 0;
    bool best_used_fs = false;

    while (clock.elapsed() <= budget) {
        const std::size_t pick = rng.uniform_int(registry.entries().size());
        const AlgorithmEntry& entry = registry.entries()[pick];
        const Combination combo = random_combination(entry.space, rng);
        if (!rules.check(entry.space, combo, meta).ok()) continue;

        ++distinct;
        std::vector<std::uint32_t> features = all_cols;
        const bool with_fs = has_fs_block(entry.space, combo);
        if (with_fs) {
            auto meter = clock.test_meter();
            const FsOutcome fs = run_feature_selection(entry.space, combo, train, fit_rows,
                                                       *meter, kBaselineFsBudget);
            if (fs.status == FsOutcome::Status::timeout ||
                fs.status == FsOutcome::Status::none)
                continue;
            if (fs.status == FsOutcome::Status::selected) features = fs.subset;
        }
        auto meter = clock.test_meter();
        TrainRequest req{train,
                         fit_rows,
                         features,
                         *meter,
                         kBaselineTrainBudget,
                         Rng::derive(seed, {distinct})};
        const TrainOutcome trained = train_model(registry, entry, combo, req);
        if (!trained.model) continue;
        auto val_meter = clock.test_meter();
        const double err = evaluate_error(*trained.model, train, validation, *val_meter);
        if (err < best_error) {
            best_error = err;
            best_entry = &entry;
            best_combo = combo;
            best_used_fs = with_fs;
        }
    }

    if (!best_entry) {
        best_entry = registry.find("zeror");
        best_combo = default_combination(best_entry->space);
    }

    // Retrain the winner on the whole training data.
    std::vector<std::uint32_t> features = all_cols;
    auto meter = clock.test_meter();
    if (has_fs_block(best_entry->space, best_combo)) {
        const FsOutcome fs =
            run_feature_selection(best_entry->space, best_combo, train, all, *meter,
                                  std::numeric_limits<double>::infinity());
        if (fs.status == FsOutcome::Status::selected) features = fs.subset;
    }
    TrainRequest req{train, all,  features, *meter, std::numeric_limits<double>::infinity(),
                     Rng::derive(seed, {0xf17a1u})};
    TrainOutcome trained = train_model(registry, *best_entry, best_combo, req);
    if (!trained.model) {
        const AlgorithmEntry* zeror = registry.find("zeror");
        const Combination zc = default_combination(zeror->space);
        TrainRequest zreq{train, all, all_cols, *meter,
                          std::numeric_limits<double>::infinity(), seed};
        trained = train_model(registry, *zeror, zc, zreq);
        best_entry = zeror;
        best_combo = zc;
    }

    RandomSearchResult result;
    result.model.format_version = 1;
    result.model.algorithm = best_entry->id;
    result.model.combination = combination_to_json(best_entry->space, best_combo);
    result.model.schema = train.features();
    result.model.class_labels = train.class_labels();
    result.model.model = std::move(trained.model);
    result.distinct_tested = distinct;
    result.elapsed = clock.elapsed();
    result.champion_algorithm = best_entry->id;
    result.champion_used_fs = best_used_fs;
    return result;
}

BenchReport run_bench(const BenchOptions& opts) {
    BenchReport report;
    for (const std::string& path : opts.dataset_paths) {
        const Dataset full = load_dataset(path, opts.format, opts.target);
        const std::string name = dataset_name(path);
        for (std::uint64_t seed : opts.seeds) {
            const auto [train, test] = bench_split(full, opts.test_fraction, seed);

            SearchConfig cfg = opts.base_config;
            cfg.seed = seed;
            double psbo_elapsed = 0.0;
            {
                TraceSink trace = opts.trace_dir.empty()
                                      ? TraceSink()
                                      : TraceSink(opts.trace_dir + "/" + name + "-psbo-" +
                                                      std::to_string(seed) + ".jsonl",
                                                  false);
                SearchResult sr = run_search(train, cfg, trace);
                psbo_elapsed = sr.report.elapsed;
                report.cells.push_back({"psbo", name, seed, holdout_error(sr.model, test),
                                        sr.report.elapsed,
                                        sr.report.distinct_combinations_tested,
                                        sr.report.champion_used_fs,
                                        sr.report.champion_algorithm});
            }

            if (opts.run_random_baseline) {
                RandomSearchResult rr = random_search(train, seed, psbo_elapsed, cfg.clock);
                report.cells.push_back({"random", name, seed, holdout_error(rr.model, test),
                                        rr.elapsed, rr.distinct_tested, rr.champion_used_fs,
                                        rr.champion_algorithm});
            }

            for (int technique : opts.ablations) {
                SearchConfig ab = opts.base_config;
                ab.seed = seed;
                ab.techniques.set(technique, false);
                TraceSink trace = opts.trace_dir.empty()
                                      ? TraceSink()
                                      : TraceSink(opts.trace_dir + "/" + name + "-t" +
                                                      std::to_string(technique) + "off-" +
                                                      std::to_string(seed) + ".jsonl",
                                                  false);
                SearchResult sr = run_search(train, ab, trace);
                report.cells.push_back({"psbo-t" + std::to_string(technique) + "off", name, seed,
                                        holdout_error(sr.model, test), sr.report.elapsed,
                                        sr.report.distinct_combinations_tested,
                                        sr.report.champion_used_fs,
                                        sr.report.champion_algorithm});
            }
        }
    }
    return report;
}

nlohmann::json BenchReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const BenchCell& c : cells)
        arr.push_back({{"method", c.method},
                       {"dataset", c.dataset},
                       {"seed", c.seed},
                       {"test_error", c.test_error},
                       {"search_elapsed", c.search_elapsed},
                       {"distinct_tested", c.distinct_tested},
                       {"champion_used_fs", c.champion_used_fs},
                       {"champion_algorithm", c.champion_algorithm}});
    return {{"cells", arr}};
}

std::string BenchReport::to_csv() const {
    std::ostringstream out;
    out << "method,dataset,seed,test_error,search_elapsed,distinct_tested,champion_used_fs,"
           "champion_algorithm\n";
    for (const BenchCell& c : cells)
        out << c.method << ',' << c.dataset << ',' << c.seed << ',' << c.test_error << ','
            << c.search_elapsed << ',' << c.distinct_tested << ',' << (c.champion_used_fs ? 1 : 0)
            << ',' << c.champion_algorithm << "\n";
    return out.str();
}

std::string BenchReport::render_table() const {
    struct Agg {
        std::vector<double> errors, elapsed, distinct;
    };
    std::map<std::pair<std::string, std::string>, Agg> groups;
    for (const BenchCell& c : cells) {
        Agg& a = groups[{c.dataset, c.method}];
        a.errors.push_back(c.test_error);
        a.elapsed.push_back(c.search_elapsed);
        a.distinct.push_back(static_cast<double>(c.distinct_tested));
    }
    auto mean_std = [](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        std::ostringstream s;
        s.precision(4);
        s << mean << " +- " << sd;
        return s.str();
    };
    std::ostringstream out;
    out << "dataset          method           test error       search cost      # distinct\n";
    for (const auto& [key, agg] : groups) {
        std::ostringstream line;
        line.setf(std::ios::left);
        line.width(17);
        line << key.first;
        line.width(17);
        line << key.second;
        line.width(17);
        line << mean_std(agg.errors);
        line.width(17);
        line << mean_std(agg.elapsed);
        line << mean_std(agg.distinct);
        out << line.str() << (cells.size() == 1 ? "   (single run)" : "") << "\n";
    }
    return out.str();
}

}  // namespace psbo
