// Command-line front end. Everything domain-related goes through the C API
// in phefl.h; this file only parses arguments, formats output, and maps
// statuses to exit codes (domain failures exit with 1 + phefl_status).
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "phefl.h"

namespace {

using nlohmann::json;

int exit_code(phefl_status status) {
    return 1 + static_cast<int>(status);
}

int fail(phefl_status status) {
    std::fprintf(stderr, "error: %s\n", phefl_last_error());
    return exit_code(status);
}

int fail(phefl_status status, const std::string& context) {
    std::fprintf(stderr, "error: %s: %s\n", context.c_str(), phefl_last_error());
    return exit_code(status);
}

// Shortest decimal form that parses back to the same double; keeps emitted
// numbers exactly recomputable.
std::string shortest(double value) {
    return json(value).dump();
}

std::string owned(char* text) {
    if (text == nullptr) return {};
    std::string copy(text);
    phefl_string_free(text);
    return copy;
}

struct ConfigDeleter {
    void operator()(phefl_config* p) const { phefl_config_free(p); }
};
struct SimDeleter {
    void operator()(phefl_sim* p) const { phefl_sim_free(p); }
};
struct ArchiveDeleter {
    void operator()(phefl_archive* p) const { phefl_archive_free(p); }
};
struct ReportDeleter {
    void operator()(phefl_report* p) const { phefl_report_free(p); }
};
using ConfigPtr = std::unique_ptr<phefl_config, ConfigDeleter>;
using SimPtr = std::unique_ptr<phefl_sim, SimDeleter>;
using ArchivePtr = std::unique_ptr<phefl_archive, ArchiveDeleter>;
using ReportPtr = std::unique_ptr<phefl_report, ReportDeleter>;

// Config-key overrides shared by `run` and `partition-report`.
struct Overrides {
    std::optional<std::string> strategy;
    std::optional<std::string> scenario;
    std::optional<std::uint64_t> seed;
    std::optional<int> rounds;
    std::optional<std::string> test_mode;
    std::optional<double> forced_alpha;
    std::optional<int> agg_frequency;
};

void add_override_flags(CLI::App* cmd, Overrides& overrides) {
    cmd->add_option("--strategy", overrides.strategy,
                    "Override strategy (phe_fl, edge_cloud, only_edge)");
    cmd->add_option("--scenario", overrides.scenario, "Override scenario (D1..D4)");
    cmd->add_option("--seed", overrides.seed, "Override the experiment seed");
    cmd->add_option("--rounds", overrides.rounds, "Override the round count");
    cmd->add_option("--test-mode", overrides.test_mode,
                    "Override test mode (imbalanced, balanced)");
    cmd->add_option("--forced-alpha", overrides.forced_alpha,
                    "Pin the personalization mixing weight to a constant in [0, 1]");
    cmd->add_option("--agg-frequency", overrides.agg_frequency,
                    "Override edge_aggregation_frequency (aggregate every k-th round)");
}

// Loads the config file and applies the command-line overrides; on failure
// reports the offending key and returns null with `code` set.
ConfigPtr load_config(const std::string& path, const Overrides& overrides, int& code) {
    ConfigPtr config(phefl_config_load(path.c_str()));
    if (!config) {
        code = fail(PHEFL_ERR_CONFIG, path);
        return nullptr;
    }
    std::vector<std::pair<std::string, std::string>> pairs;
    if (overrides.strategy) pairs.emplace_back("strategy", *overrides.strategy);
    if (overrides.scenario) pairs.emplace_back("scenario", *overrides.scenario);
    if (overrides.seed) pairs.emplace_back("seed", std::to_string(*overrides.seed));
    if (overrides.rounds) pairs.emplace_back("rounds", std::to_string(*overrides.rounds));
    if (overrides.test_mode) pairs.emplace_back("test_mode", *overrides.test_mode);
    if (overrides.forced_alpha) {
        pairs.emplace_back("forced_alpha", shortest(*overrides.forced_alpha));
    }
    if (overrides.agg_frequency) {
        pairs.emplace_back("edge_aggregation_frequency",
                           std::to_string(*overrides.agg_frequency));
    }
    for (const auto& [key, value] : pairs) {
        const phefl_status status = phefl_config_set(config.get(), key.c_str(), value.c_str());
        if (status != PHEFL_OK) {
            code = fail(status, "--" + key);
            return nullptr;
        }
    }
    const phefl_status status = phefl_config_validate(config.get());
    if (status != PHEFL_OK) {
        code = fail(status);
        return nullptr;
    }
    code = 0;
    return config;
}

std::string config_value(const phefl_config* config, const std::string& key) {
    char* value = nullptr;
    if (phefl_config_get(config, key.c_str(), &value) != PHEFL_OK) return {};
    return owned(value);
}

/* ---- run -------------------------------------------------------------- */

int cmd_run(const std::string& config_path, const Overrides& overrides, int workers,
            std::string out_path) {
    int code = 0;
    ConfigPtr config = load_config(config_path, overrides, code);
    if (!config) return code;

    if (out_path.empty()) {
        out_path = config_value(config.get(), "strategy") + "_" +
                   config_value(config.get(), "scenario") + "_seed" +
                   config_value(config.get(), "seed") + ".jsonl";
    }

    SimPtr sim(phefl_sim_new(config.get(), workers));
    if (!sim) return fail(PHEFL_ERR_CONFIG);

    phefl_writer* writer = phefl_writer_open(out_path.c_str(), config.get());
    if (writer == nullptr) return fail(PHEFL_ERR_IO, out_path);

    const int total = phefl_sim_total_rounds(sim.get());
    for (int t = 1; t <= total; ++t) {
        phefl_status status = phefl_sim_step(sim.get());
        if (status != PHEFL_OK) {
            const std::string reason = phefl_last_error();
            phefl_writer_abort(writer, reason.c_str());
            phefl_writer_free(writer);
            std::fprintf(stderr, "error: %s\n", reason.c_str());
            std::fprintf(stderr, "archive %s flagged incomplete\n", out_path.c_str());
            return exit_code(status);
        }
        double mean = 0.0;
        phefl_sim_mean_accuracy(sim.get(), t, &mean);
        std::printf("round %d mean_accuracy %.6f\n", t, mean);
        std::fflush(stdout);
        status = phefl_writer_append_round(writer, sim.get(), t);
        if (status != PHEFL_OK) {
            phefl_writer_free(writer);
            return fail(status, out_path);
        }
    }
    const phefl_status status = phefl_writer_finish(writer);
    phefl_writer_free(writer);
    if (status != PHEFL_OK) return fail(status, out_path);
    std::fprintf(stderr, "archive written to %s\n", out_path.c_str());
    return 0;
}

/* ---- compare ---------------------------------------------------------- */

struct LoadedRun {
    std::string path;
    std::string strategy;
    bool complete = false;
    std::vector<double> series;
};

int load_runs(const std::vector<std::string>& paths, std::vector<LoadedRun>& runs) {
    for (const std::string& path : paths) {
        ArchivePtr archive(phefl_archive_read(path.c_str()));
        if (!archive) return fail(PHEFL_ERR_DATA, path);
        LoadedRun run;
        run.path = path;
        run.complete = phefl_archive_complete(archive.get()) == 1;
        if (!run.complete) {
            std::fprintf(stderr, "warning: %s is incomplete (%s)\n", path.c_str(),
                         owned(phefl_archive_error(archive.get())).c_str());
        }
        ConfigPtr embedded(phefl_archive_config(archive.get()));
        if (embedded) run.strategy = config_value(embedded.get(), "strategy");
        const int rounds = phefl_archive_rounds(archive.get());
        run.series.resize(static_cast<std::size_t>(rounds));
        for (int i = 0; i < rounds; ++i) {
            phefl_archive_round(archive.get(), i, nullptr, &run.series[static_cast<std::size_t>(i)]);
        }
        runs.push_back(std::move(run));
    }
    return 0;
}

int cmd_compare(const std::vector<std::string>& paths, std::optional<int> acc_round,
                int drop_threshold, const std::string& window_mode, int window,
                bool as_json) {
    std::vector<LoadedRun> runs;
    if (const int code = load_runs(paths, runs); code != 0) return code;

    int n = acc_round.value_or(0);
    if (!acc_round.has_value()) {
        n = static_cast<int>(runs.front().series.size());
        for (const LoadedRun& run : runs) n = std::min(n, static_cast<int>(run.series.size()));
    }

    const auto count = runs.size();
    std::vector<const char*> names(count);
    std::vector<const double*> series(count);
    std::vector<int> lengths(count);
    for (std::size_t i = 0; i < count; ++i) {
        names[i] = runs[i].strategy.c_str();
        series[i] = runs[i].series.data();
        lengths[i] = static_cast<int>(runs[i].series.size());
    }
    std::vector<double> out_acc(count);
    std::vector<int> out_measurable(count);
    std::vector<double> out_drop(count);
    std::vector<double> out_roll(count);
    std::vector<int> out_rank(count);
    const phefl_status status = phefl_compare(
        static_cast<int>(count), names.data(), series.data(), lengths.data(), n,
        drop_threshold, window_mode.c_str(), window, out_acc.data(), out_measurable.data(),
        out_drop.data(), out_roll.data(), out_rank.data());
    if (status != PHEFL_OK) return fail(status);

    if (as_json) {
        json doc;
        doc["acc_round"] = n;
        doc["drop_threshold"] = drop_threshold;
        doc["window_mode"] = window_mode;
        doc["window"] = window;
        doc["runs"] = json::array();
        for (std::size_t i = 0; i < count; ++i) {
            json run;
            run["archive"] = runs[i].path;
            run["strategy"] = runs[i].strategy;
            run["complete"] = runs[i].complete;
            run["rounds"] = lengths[i];
            run["acc_n"] = out_acc[i];
            run["drop_m"] = out_measurable[i] == 1 ? json(out_drop[i]) : json(nullptr);
            run["final_rolling_mean"] = out_roll[i];
            run["rank"] = out_rank[i];
            doc["runs"].push_back(std::move(run));
        }
        std::printf("%s\n", doc.dump(2).c_str());
        return 0;
    }

    std::printf("%-12s %8s %8s %12s %5s  %s\n", "strategy", ("Acc" + std::to_string(n)).c_str(),
                ("Drop" + std::to_string(drop_threshold)).c_str(), "final(roll)", "rank",
                "archive");
    for (std::size_t i = 0; i < count; ++i) {
        const std::string drop =
            out_measurable[i] == 1 ? std::to_string(out_drop[i]).substr(0, 6) : "-";
        std::printf("%-12s %8.4f %8s %12.4f %5d  %s\n", runs[i].strategy.c_str(), out_acc[i],
                    drop.c_str(), out_roll[i], out_rank[i], runs[i].path.c_str());
    }
    return 0;
}

/* ---- partition-report ------------------------------------------------- */

void print_matrix_header(int num_classes) {
    std::printf("%5s", "edge");
    for (int l = 0; l < num_classes; ++l) std::printf(" %6d", l);
    std::printf("\n");
}

int cmd_partition_report(const std::string& config_path, const Overrides& overrides) {
    int code = 0;
    ConfigPtr config = load_config(config_path, overrides, code);
    if (!config) return code;

    ReportPtr report(phefl_report_new(config.get()));
    if (!report) return fail(PHEFL_ERR_CONFIG);

    const int edges = phefl_report_num_edges(report.get());
    const int classes = phefl_report_num_classes(report.get());
    std::printf("scenario %s, test_mode %s, %s edges x %s devices, %s classes\n\n",
                config_value(config.get(), "scenario").c_str(),
                config_value(config.get(), "test_mode").c_str(),
                config_value(config.get(), "num_edges").c_str(),
                config_value(config.get(), "devices_per_edge").c_str(),
                config_value(config.get(), "num_classes").c_str());

    std::printf("training share per label (%% of edge training data)\n");
    print_matrix_header(classes);
    std::vector<double> percent(static_cast<std::size_t>(classes));
    for (int e = 0; e < edges; ++e) {
        if (phefl_report_train_percent(report.get(), e, percent.data()) != PHEFL_OK) {
            return fail(PHEFL_ERR_ARGUMENT);
        }
        std::printf("%5d", e + 1);
        for (int l = 0; l < classes; ++l) {
            std::printf(" %6g", percent[static_cast<std::size_t>(l)]);
        }
        std::printf("\n");
    }

    std::printf("\ntest examples per label (%s distribution)\n",
                config_value(config.get(), "test_mode").c_str());
    std::printf("%5s", "edge");
    for (int l = 0; l < classes; ++l) std::printf(" %6d", l);
    std::printf(" %7s\n", "total");
    std::vector<int64_t> counts(static_cast<std::size_t>(classes));
    for (int e = 0; e < edges; ++e) {
        if (phefl_report_test_counts(report.get(), e, counts.data()) != PHEFL_OK) {
            return fail(PHEFL_ERR_ARGUMENT);
        }
        int64_t total = 0;
        phefl_report_test_total(report.get(), e, &total);
        std::printf("%5d", e + 1);
        for (int l = 0; l < classes; ++l) {
            std::printf(" %6lld", static_cast<long long>(counts[static_cast<std::size_t>(l)]));
        }
        std::printf(" %7lld\n", static_cast<long long>(total));
    }
    return 0;
}

/* ---- plot-data -------------------------------------------------------- */

int cmd_plot_data(const std::vector<std::string>& paths, int window) {
    std::vector<LoadedRun> runs;
    if (const int code = load_runs(paths, runs); code != 0) return code;

    std::vector<std::vector<double>> rolling(runs.size());
    std::size_t max_rounds = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        rolling[i].resize(runs[i].series.size());
        if (!runs[i].series.empty()) {
            const phefl_status status =
                phefl_rolling_mean(runs[i].series.data(), static_cast<int>(runs[i].series.size()),
                                   window, rolling[i].data());
            if (status != PHEFL_OK) return fail(status, runs[i].path);
        }
        max_rounds = std::max(max_rounds, runs[i].series.size());
    }

    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::printf("# columns %zu-%zu: %s (%s), raw and rolling mean (window %d)\n", 2 + 2 * i,
                    3 + 2 * i, runs[i].strategy.c_str(), runs[i].path.c_str(), window);
    }
    std::printf("round");
    for (const LoadedRun& run : runs) {
        std::printf(" %s %s_roll", run.strategy.c_str(), run.strategy.c_str());
    }
    std::printf("\n");
    for (std::size_t r = 0; r < max_rounds; ++r) {
        std::printf("%zu", r + 1);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (r < runs[i].series.size()) {
                std::printf(" %s %s", shortest(runs[i].series[r]).c_str(),
                            shortest(rolling[i][r]).c_str());
            } else {
                std::printf(" - -");
            }
        }
        std::printf("\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical federated-learning simulator (device -> edge -> cloud)"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(phefl_version()));

    // run
    auto* run = app.add_subcommand("run", "Run one experiment and archive its results");
    std::string run_config;
    std::string run_out;
    int run_workers = 0;
    Overrides run_overrides;
    run->add_option("--config", run_config, "Experiment config file")->required();
    run->add_option("--out", run_out,
                    "Archive path (default <strategy>_<scenario>_seed<seed>.jsonl)");
    run->add_option("--workers", run_workers,
                    "Worker threads (0 = hardware concurrency); never affects results");
    add_override_flags(run, run_overrides);

    // compare
    auto* compare = app.add_subcommand("compare", "Score archived runs side by side");
    std::vector<std::string> compare_paths;
    std::optional<int> compare_n;
    int compare_m = 50;
    std::string compare_mode = "sliding";
    int compare_window = 10;
    bool compare_json = false;
    compare->add_option("archives", compare_paths, "Result archives")->required();
    compare->add_option("--acc-round", compare_n,
                        "AccN round cutoff (default: shortest archive length)");
    compare->add_option("--drop-threshold", compare_m,
                        "DropM threshold in percent (default 50)");
    compare->add_option("--dropm-window-mode", compare_mode,
                        "DropM window walk: sliding or anchored")
        ->check(CLI::IsMember({"sliding", "anchored"}));
    compare->add_option("--window", compare_window, "Window length for DropM and rolling mean");
    compare->add_flag("--json", compare_json, "Machine-readable output");

    // partition-report
    auto* partition =
        app.add_subcommand("partition-report", "Show how a config distributes labels");
    std::string partition_config;
    Overrides partition_overrides;
    partition->add_option("--config", partition_config, "Experiment config file")->required();
    add_override_flags(partition, partition_overrides);

    // plot-data
    auto* plot = app.add_subcommand("plot-data", "Emit plot-ready accuracy columns");
    std::vector<std::string> plot_paths;
    int plot_window = 10;
    plot->add_option("archives", plot_paths, "Result archives")->required();
    plot->add_option("--window", plot_window, "Rolling-mean window (default 10)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (run->parsed()) return cmd_run(run_config, run_overrides, run_workers, run_out);
    if (compare->parsed()) {
        return cmd_compare(compare_paths, compare_n, compare_m, compare_mode, compare_window,
                           compare_json);
    }
    if (partition->parsed()) return cmd_partition_report(partition_config, partition_overrides);
    if (plot->parsed()) return cmd_plot_data(plot_paths, plot_window);
    return 1;
}
