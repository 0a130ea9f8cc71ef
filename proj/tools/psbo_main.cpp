#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "psbo/bench.hpp"
#include "psbo/engine.hpp"
#include "psbo/error.hpp"
#include "psbo/model_io.hpp"
#include "psbo/rules.hpp"
#include "psbo/trace.hpp"

namespace {

using psbo::ConfigError;

psbo::DataFormat parse_format(const std::string& s) {
    if (s == "csv") return psbo::DataFormat::csv;
    if (s == "arff") return psbo::DataFormat::arff;
    if (s == "auto") return psbo::DataFormat::autodetect;
    throw ConfigError("unknown format '" + s + "' (expected csv, arff or auto)");
}

psbo::ClockMode parse_clock(const std::string& s) {
    if (s == "wall") return psbo::ClockMode::wall;
    if (s == "virtual") return psbo::ClockMode::virtual_units;
    throw ConfigError("unknown clock mode '" + s + "' (expected wall or virtual)");
}

// Simple `key = value` configuration file; '#' starts a comment. CLI flags
// take precedence over file values.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r\n") != std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            const auto e = s.find_last_not_of(" \t\r\n");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

struct CommonArgs {
    std::string data;
    std::string format = "auto";
    std::string target;
    std::uint64_t seed = 1;
    std::string clock = "virtual";
    double budget = 0.0;
    std::string config_file;
    std::vector<int> techniques_off;
    std::string out_dir = "psbo-out";

    // Parameter overrides (0/-1 sentinels mean "use default").
    int n_c = -1, t_d = -1, k = -1, h = -1, surrogate_trees = -1;
    double fs_penalty = -1.0, base_penalty = -1.0, tau0 = -1.0;
    double keep1 = -1.0, keep = -1.0;
    int r1_random = -1, trial_cap = -1, trial_slack = -1;
};

void add_common_options(CLI::App* cmd, CommonArgs& a, bool with_data) {
    if (with_data) cmd->add_option("--data", a.data, "dataset file (CSV or ARFF)")->required();
    cmd->add_option("--format", a.format, "csv|arff|auto (default auto)");
    cmd->add_option("--target", a.target, "target column name");
    cmd->add_option("--seed", a.seed, "RNG seed (default 1)");
    cmd->add_option("--clock", a.clock, "wall|virtual (default virtual)");
    cmd->add_option("--budget", a.budget, "global search budget (units or seconds)");
    cmd->add_option("--config", a.config_file, "key = value config file");
    cmd->add_option("--technique-off", a.techniques_off, "disable technique N (repeatable)")
        ->type_size(1);
    cmd->add_option("--out", a.out_dir, "output directory (default psbo-out)");
    cmd->add_option("--n-c", a.n_c, "combinations retested per algorithm (default 10)");
    cmd->add_option("--t-d", a.t_d, "Hamming distance threshold (default 2)");
    cmd->add_option("--k", a.k, "fold count override");
    cmd->add_option("--h-folds", a.h, "final-round CV fold override");
    cmd->add_option("--surrogate-trees", a.surrogate_trees, "surrogate forest size (default 10)");
    cmd->add_option("--fs-penalty", a.fs_penalty, "feature-selection penalty (default 1.1)");
    cmd->add_option("--base-penalty", a.base_penalty, "per-base penalty (default 0.02)");
    cmd->add_option("--tau0", a.tau0, "initial error-difference threshold (default 0.5)");
    cmd->add_option("--keep1", a.keep1, "round-1 keep fraction (default 0.4)");
    cmd->add_option("--keep", a.keep, "later-round keep fraction (default 0.7)");
    cmd->add_option("--r1-random", a.r1_random, "random combinations in round 1 (default 20)");
    cmd->add_option("--trial-cap", a.trial_cap, "round-1 trial cap (default 200)");
    cmd->add_option("--trial-slack", a.trial_slack, "extra trials after q in rounds 2-4 (default 5)");
}

// File values fill in anything the CLI left at its default.
void merge_config_file(CommonArgs& a, const CLI::App* cmd) {
    if (a.config_file.empty()) return;
    const auto kv = read_config_file(a.config_file);
    auto defaulted = [&](const std::string& flag) {
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        return opt && opt->count() == 0;
    };
    auto get = [&](const char* key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (const auto* v = get("data"); v && defaulted("--data")) a.data = *v;
    if (const auto* v = get("format"); v && defaulted("--format")) a.format = *v;
    if (const auto* v = get("target"); v && defaulted("--target")) a.target = *v;
    if (const auto* v = get("seed"); v && defaulted("--seed")) a.seed = std::stoull(*v);
    if (const auto* v = get("clock"); v && defaulted("--clock")) a.clock = *v;
    if (const auto* v = get("budget"); v && defaulted("--budget")) a.budget = std::stod(*v);
    if (const auto* v = get("out"); v && defaulted("--out")) a.out_dir = *v;
    if (const auto* v = get("n_c"); v && defaulted("--n-c")) a.n_c = std::stoi(*v);
    if (const auto* v = get("t_d"); v && defaulted("--t-d")) a.t_d = std::stoi(*v);
    if (const auto* v = get("k"); v && defaulted("--k")) a.k = std::stoi(*v);
    if (const auto* v = get("h"); v && defaulted("--h-folds")) a.h = std::stoi(*v);
    if (const auto* v = get("surrogate_trees"); v && defaulted("--surrogate-trees"))
        a.surrogate_trees = std::stoi(*v);
    if (const auto* v = get("fs_penalty"); v && defaulted("--fs-penalty"))
        a.fs_penalty = std::stod(*v);
    if (const auto* v = get("base_penalty"); v && defaulted("--base-penalty"))
        a.base_penalty = std::stod(*v);
    if (const auto* v = get("tau0"); v && defaulted("--tau0")) a.tau0 = std::stod(*v);
    if (const auto* v = get("keep1"); v && defaulted("--keep1")) a.keep1 = std::stod(*v);
    if (const auto* v = get("keep"); v && defaulted("--keep")) a.keep = std::stod(*v);
    if (const auto* v = get("r1_random"); v && defaulted("--r1-random"))
        a.r1_random = std::stoi(*v);
    if (const auto* v = get("trial_cap"); v && defaulted("--trial-cap"))
        a.trial_cap = std::stoi(*v);
    if (const auto* v = get("trial_slack"); v && defaulted("--trial-slack"))
        a.trial_slack = std::stoi(*v);
    if (const auto* v = get("technique_off"); v && a.techniques_off.empty()) {
        std::istringstream ss(*v);
        std::string tok;
        while (std::getline(ss, tok, ',')) a.techniques_off.push_back(std::stoi(tok));
    }
}

psbo::SearchConfig build_config(const CommonArgs& a) {
    psbo::SearchConfig cfg;
    cfg.seed = a.seed;
    cfg.clock = parse_clock(a.clock);
    if (a.budget > 0) cfg.global_budget = a.budget;
    nlohmann::json overrides = nlohmann::json::object();
    for (int t : a.techniques_off) {
        cfg.techniques.set(t, false);
        overrides["technique_off"].push_back(t);
    }
    auto apply_int = [&](int value, int& field, int lo, const char* name) {
        if (value < 0) return;
        if (value < lo) throw ConfigError(std::string(name) + " must be >= " + std::to_string(lo));
        field = value;
        overrides[name] = value;
    };
    auto apply_double = [&](double value, double& field, double lo, const char* name) {
        if (value < 0) return;
        if (value < lo) throw ConfigError(std::string(name) + " out of range");
        field = value;
        overrides[name] = value;
    };
    apply_int(a.n_c, cfg.n_c, 1, "n_c");
    apply_int(a.t_d, cfg.t_d, 0, "t_d");
    if (a.k >= 1) {
        cfg.k_override = a.k;
        overrides["k"] = a.k;
    }
    if (a.h >= 2) {
        cfg.h_override = a.h;
        overrides["h"] = a.h;
    }
    apply_int(a.surrogate_trees, cfg.surrogate_trees, 1, "surrogate_trees");
    apply_double(a.fs_penalty, cfg.fs_penalty, 1.0, "fs_penalty");
    apply_double(a.base_penalty, cfg.per_base_penalty, 0.0, "base_penalty");
    apply_double(a.tau0, cfg.tau0, 0.0, "tau0");
    if (a.keep1 >= 0) {
        if (a.keep1 > 1.0) throw ConfigError("keep1 must be in (0, 1]");
        cfg.keep_round1 = a.keep1;
        overrides["keep1"] = a.keep1;
    }
    if (a.keep >= 0) {
        if (a.keep > 1.0) throw ConfigError("keep must be in (0, 1]");
        cfg.keep_later = a.keep;
        overrides["keep"] = a.keep;
    }
    apply_int(a.r1_random, cfg.round1_random, 0, "r1_random");
    apply_int(a.trial_cap, cfg.trial_cap_round1, 1, "trial_cap");
    apply_int(a.trial_slack, cfg.trial_cap_slack, 0, "trial_slack");
    cfg.provenance = overrides;
    return cfg;
}

int cmd_search(const CommonArgs& args) {
    if (args.target.empty()) throw ConfigError("--target is required for search");
    const psbo::Dataset data =
        psbo::load_dataset(args.data, parse_format(args.format), args.target);
    const psbo::SearchConfig cfg = build_config(args);

    std::filesystem::create_directories(args.out_dir);
    const std::string trace_path = args.out_dir + "/trace.jsonl";
    psbo::TraceSink trace(trace_path, false);
    psbo::SearchResult result = psbo::run_search(data, cfg, trace);

    const std::string report_path = args.out_dir + "/report.json";
    {
        std::ofstream out(report_path, std::ios::binary);
        out << result.report.to_json().dump(2) << "\n";
    }
    const std::string model_path = args.out_dir + "/model.json";
    psbo::save_model(result.model, model_path);

    std::cout << "champion: " << result.report.champion_algorithm
              << "  estimate: " << result.report.champion_estimate
              << "  distinct tested: " << result.report.distinct_combinations_tested
              << (result.report.truncated ? "  (truncated)" : "") << "\n"
              << "trace:  " << trace_path << "\n"
              << "report: " << report_path << "\n"
              << "model:  " << model_path << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    const psbo::SavedModel model = psbo::load_model(model_path);
    const psbo::Dataset data = psbo::load_for_predict(data_path, model);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw psbo::Error("cannot write '" + out_path + "'");
        out = &file;
    }
    *out << "prediction\n";
    for (std::uint32_t r = 0; r < data.n(); ++r) {
        const int label = model.model->predict(data, r);
        *out << model.class_labels[static_cast<std::size_t>(label)] << "\n";
    }
    return 0;
}

int cmd_trace(const std::string& path, const std::string& kind, int round, bool dump) {
    const auto records = psbo::TraceSink::read_file(path);
    std::map<std::string, std::size_t> by_kind;
    std::map<int, std::size_t> by_round;
    std::size_t matched = 0;
    for (const auto& rec : records) {
        const std::string k = rec.value("kind", "?");
        by_kind[k]++;
        if (rec.contains("round")) by_round[rec["round"].get<int>()]++;
        const bool match =
            (kind.empty() || k == kind) && (round == 0 || rec.value("round", 0) == round);
        if (match) {
            ++matched;
            if (dump) std::cout << rec.dump() << "\n";
        }
    }
    if (!dump) {
        std::cout << "records: " << records.size() << "\n";
        for (const auto& [k, n] : by_kind) std::cout << "  " << k << ": " << n << "\n";
        std::cout << "by round:\n";
        for (const auto& [r, n] : by_round) std::cout << "  round " << r << ": " << n << "\n";
        if (!kind.empty() || round != 0) std::cout << "matched filter: " << matched << "\n";
    }
    return 0;
}

int cmd_bench(const CommonArgs& args, const std::vector<std::string>& datasets,
              int repetitions, bool no_random, const std::vector<int>& ablate,
              double test_fraction) {
    if (args.target.empty()) throw ConfigError("--target is required for bench");
    if (datasets.empty()) throw ConfigError("bench needs at least one --data file");
    if (repetitions < 1) throw ConfigError("--seeds must be >= 1");

    psbo::BenchOptions opts;
    opts.dataset_paths = datasets;
    opts.format = parse_format(args.format);
    opts.target = args.target;
    opts.seeds.clear();
    for (int i = 0; i < repetitions; ++i)
        opts.seeds.push_back(args.seed + static_cast<std::uint64_t>(i));
    opts.run_random_baseline = !no_random;
    opts.ablations = ablate;
    opts.test_fraction = test_fraction;
    opts.base_config = build_config(args);

    std::filesystem::create_directories(args.out_dir);
    opts.trace_dir = args.out_dir;
    const psbo::BenchReport report = psbo::run_bench(opts);

    {
        std::ofstream out(args.out_dir + "/bench.json", std::ios::binary);
        out << report.to_json().dump(2) << "\n";
    }
    {
        std::ofstream out(args.out_dir + "/bench.csv", std::ios::binary);
        out << report.to_csv();
    }
    std::cout << report.render_table();
    std::cout << "wrote " << args.out_dir << "/bench.json and bench.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"progressive-sampling Bayesian optimization model selection"};
    app.require_subcommand(1);

    CommonArgs search_args;
    CLI::App* search = app.add_subcommand("search", "run the five-round search");
    add_common_options(search, search_args, true);

    std::string predict_model, predict_data, predict_out;
    CLI::App* predict = app.add_subcommand("predict", "predict with a saved model");
    predict->add_option("--model", predict_model, "model.json produced by search")->required();
    predict->add_option("--data", predict_data, "CSV file with the training schema")->required();
    predict->add_option("--out", predict_out, "output file (default stdout)");

    std::string trace_path, trace_kind;
    int trace_round = 0;
    bool trace_dump = false;
    CLI::App* trace = app.add_subcommand("trace", "summarize or filter a trace file");
    trace->add_option("--in", trace_path, "trace.jsonl file")->required();
    trace->add_option("--kind", trace_kind, "filter by record kind");
    trace->add_option("--round", trace_round, "filter by round");
    trace->add_flag("--dump", trace_dump, "print matching records instead of a summary");

    CommonArgs bench_args;
    std::vector<std::string> bench_datasets;
    int bench_seeds = 5;
    bool bench_no_random = false;
    std::vector<int> bench_ablate;
    double bench_test_fraction = 0.25;
    CLI::App* bench = app.add_subcommand("bench", "compare against baselines over seeds");
    add_common_options(bench, bench_args, false);
    bench->add_option("--data", bench_datasets, "dataset files (repeatable)")
        ->required()
        ->type_size(1);
    bench->add_option("--seeds", bench_seeds, "number of seeds (default 5)");
    bench->add_flag("--no-random", bench_no_random, "skip the random-search baseline");
    bench->add_option("--ablate", bench_ablate, "also run with technique N off (repeatable)")
        ->type_size(1);
    bench->add_option("--test-fraction", bench_test_fraction,
                      "held-out fraction per dataset (default 0.25)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (search->parsed()) {
            merge_config_file(search_args, search);
            return cmd_search(search_args);
        }
        if (predict->parsed()) return cmd_predict(predict_model, predict_data, predict_out);
        if (trace->parsed()) return cmd_trace(trace_path, trace_kind, trace_round, trace_dump);
        if (bench->parsed()) {
            merge_config_file(bench_args, bench);
            return cmd_bench(bench_args, bench_datasets, bench_seeds, bench_no_random,
                             bench_ablate, bench_test_fraction);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const psbo::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const psbo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        const std::string what = e.what();
        return what.find("not found") != std::string::npos ||
                       what.find("missing") != std::string::npos ||
                       what.find("single-class") != std::string::npos
                   ? 2
                   : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
