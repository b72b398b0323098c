#include "phefl.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "phefl/archive.hpp"
#include "phefl/config.hpp"
#include "phefl/errors.hpp"
#include "phefl/metrics.hpp"
#include "phefl/orchestrator.hpp"
#include "phefl/version.hpp"

// Each opaque handle wraps exactly one library object; the struct tags come
// from the C header, so no casting is needed.
struct phefl_config {
    phefl::ExperimentConfig impl;
};

struct phefl_sim {
    phefl::Simulation impl;
    explicit phefl_sim(phefl::Simulation sim) : impl(std::move(sim)) {}
};

struct phefl_writer {
    phefl::ArchiveWriter impl;
    phefl_writer(const std::string& path, const phefl::ExperimentConfig& config)
        : impl(path, config) {}
};

struct phefl_archive {
    phefl::ArchiveData impl;
};

struct phefl_report {
    phefl::PartitionReport impl;
};

namespace {

thread_local std::string last_error_message;

void record_error(const std::string& message) {
    last_error_message = message;
}

// Runs `body` and folds every library exception into a status code plus the
// thread's last-error message.
template <typename Fn>
phefl_status guarded(Fn&& body) {
    try {
        body();
        return PHEFL_OK;
    } catch (const phefl::ConfigError& e) {
        record_error(e.what());
        return PHEFL_ERR_CONFIG;
    } catch (const phefl::DataError& e) {
        record_error(e.what());
        return PHEFL_ERR_DATA;
    } catch (const phefl::TrainingDiverged& e) {
        record_error(e.what());
        return PHEFL_ERR_DIVERGED;
    } catch (const phefl::IoError& e) {
        record_error(e.what());
        return PHEFL_ERR_IO;
    } catch (const phefl::InvalidArgument& e) {
        record_error(e.what());
        return PHEFL_ERR_ARGUMENT;
    } catch (const phefl::AggregationError& e) {
        record_error(e.what());
        return PHEFL_ERR_ARGUMENT;
    } catch (const std::exception& e) {
        record_error(e.what());
        return PHEFL_ERR_INTERNAL;
    } catch (...) {
        record_error("unknown error");
        return PHEFL_ERR_INTERNAL;
    }
}

// Heap copy handed across the C boundary; released by phefl_string_free.
char* dup_string(const std::string& text) {
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (out == nullptr) {
        record_error("out of memory");
        return nullptr;
    }
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

bool check_handle(const void* handle, const char* what) {
    if (handle != nullptr) return true;
    record_error(std::string("null ") + what + " handle");
    return false;
}

bool check_pointer(const void* pointer, const char* what) {
    if (pointer != nullptr) return true;
    record_error(std::string("null ") + what + " pointer");
    return false;
}

// Fetches a round record by 1-based round number.
const phefl::RoundRecord* find_round(const phefl_sim* sim, int round) {
    if (round < 1 || round > sim->impl.rounds_done()) {
        record_error("round " + std::to_string(round) + " not completed yet (rounds done: " +
                     std::to_string(sim->impl.rounds_done()) + ")");
        return nullptr;
    }
    return &sim->impl.log()[static_cast<std::size_t>(round - 1)];
}

const phefl::RoundRecord* find_record(const phefl_archive* archive, int index) {
    const auto count = static_cast<int>(archive->impl.log.size());
    if (index < 0 || index >= count) {
        record_error("record index " + std::to_string(index) + " outside [0, " +
                     std::to_string(count) + ")");
        return nullptr;
    }
    return &archive->impl.log[static_cast<std::size_t>(index)];
}

const phefl::PartitionReport* checked_report(const phefl_report* report, int edge) {
    if (edge < 0 || edge >= report->impl.plan.num_edges) {
        record_error("edge " + std::to_string(edge) + " outside [0, " +
                     std::to_string(report->impl.plan.num_edges) + ")");
        return nullptr;
    }
    return &report->impl;
}

}  // namespace

extern "C" {

const char* phefl_version(void) {
    return phefl::kVersion;
}

const char* phefl_last_error(void) {
    return last_error_message.c_str();
}

void phefl_string_free(char* text) {
    std::free(text);
}

/* ---- Experiment configs ---------------------------------------------- */

phefl_config* phefl_config_load(const char* path) {
    if (!check_pointer(path, "path")) return nullptr;
    phefl_config* config = nullptr;
    guarded([&] { config = new phefl_config{phefl::load_config_file(path)}; });
    return config;
}

phefl_config* phefl_config_parse(const char* text) {
    if (!check_pointer(text, "text")) return nullptr;
    phefl_config* config = nullptr;
    guarded([&] { config = new phefl_config{phefl::parse_config_text(text)}; });
    return config;
}

phefl_status phefl_config_set(phefl_config* config, const char* key, const char* value) {
    if (!check_handle(config, "config")) return PHEFL_ERR_ARGUMENT;
    if (!check_pointer(key, "key") || !check_pointer(value, "value")) return PHEFL_ERR_ARGUMENT;
    return guarded([&] { phefl::apply_override(config->impl, key, value); });
}

phefl_status phefl_config_get(const phefl_config* config, const char* key, char** out_value) {
    if (!check_handle(config, "config")) return PHEFL_ERR_ARGUMENT;
    if (!check_pointer(key, "key") || !check_pointer(out_value, "out_value")) {
        return PHEFL_ERR_ARGUMENT;
    }
    return guarded([&] {
        char* copy = dup_string(phefl::get_field(config->impl, key));
        if (copy == nullptr) throw std::bad_alloc();
        *out_value = copy;
    });
}

phefl_status phefl_config_validate(const phefl_config* config) {
    if (!check_handle(config, "config")) return PHEFL_ERR_ARGUMENT;
    return guarded([&] { config->impl.validate(); });
}

char* phefl_config_serialize(const phefl_config* config) {
    if (!check_handle(config, "config")) return nullptr;
    return dup_string(phefl::serialize_config(config->impl));
}

phefl_status phefl_config_fingerprint(const phefl_config* config, uint64_t* out) {
    if (!check_handle(config, "config")) return PHEFL_ERR_ARGUMENT;
    if (!check_pointer(out, "out")) return PHEFL_ERR_ARGUMENT;
    return guarded([&] { *out = config->impl.fingerprint(); });
}

void phefl_config_free(phefl_config* config) {
    delete config;
}

/* ---- Simulations ----------------------------------------------------- */

phefl_sim* phefl_sim_new(const phefl_config* config, int workers) {
    if (!check_handle(config, "config")) return nullptr;
    phefl_sim* sim = nullptr;
    guarded([&] { sim = new phefl_sim(phefl::Simulation(config->impl, workers)); });
    return sim;
}

phefl_status phefl_sim_step(phefl_sim* sim) {
    if (!check_handle(sim, "sim")) return PHEFL_ERR_ARGUMENT;
    return guarded([&] { sim->impl.step(); });
}

int phefl_sim_rounds_done(const phefl_sim* sim) {
    if (!check_handle(sim, "sim")) return -1;
    return sim->impl.rounds_done();
}

int phefl_sim_total_rounds(const phefl_sim* sim) {
    if (!check_handle(sim, "sim")) return -1;
    return sim->impl.config().rounds;
}

int phefl_sim_num_edges(const phefl_sim* sim) {
    if (!check_handle(sim, "sim")) return -1;
    return sim->impl.config().num_edges;
}

phefl_status phefl_sim_mean_accuracy(const phefl_sim* sim, int round, double* out) {
    if (!check_handle(sim, "sim")) return PHEFL_ERR_ARGUMENT;
    if (!check_pointer(out, "out")) return PHEFL_ERR_ARGUMENT;
    const phefl::RoundRecord* record = find_round(sim, round);
    if (record == nullptr) return PHEFL_ERR_ARGUMENT;
    *out = record->mean_accuracy;
    return PHEFL_OK;
}

phefl_status phefl_sim_edge_accuracy(const phefl_sim* sim, int round, int edge, double* out) {
    if (!check_handle(sim, "sim")) return PHEFL_ERR_ARGUMENT;
    if (!check_pointer(out, "out")) return PHEFL_ERR_ARGUMENT;
    const phefl::RoundRecord* record = find_round(sim, round);
    if (record == nullptr) return PHEFL_ERR_ARGUMENT;
    if (edge < 0 || edge >= static_cast<int>(record->edge_accuracy.size())) {
        record_error("edge " + std::to_string(edge) + " outside [0, " +
                     std::to_string(record->edge_accuracy.size()) + ")");
        return PHEFL_ERR_ARGUMENT;
    }
    *out = record->edge_accuracy[static_cast<std::size_t>(edge)];
    return PHEFL_OK;
}

void phefl_sim_free(phefl_sim* sim) {
    delete sim;
}

/* ---- Results archives ------------------------------------------------ */

phefl_writer* phefl_writer_open(const char* path, const phefl_config* config) {
    if (!check_pointer(path, "path") || !check_handle(config, "config")) return nullptr;
    phefl_writer* writer = nullptr;
    guarded([&] { writer = new phefl_writer(path, config->impl); });
    return writer;
}

phefl_status phefl_writer_append_round(phefl_writer* writer, const phefl_sim* sim, int round) {
    if (!check_handle(writer, "writer") || !check_handle(sim, "sim")) return PHEFL_ERR_ARGUMENT;
    const phefl::RoundRecord* record = find_round(sim, round);
    if (record == nullptr) return PHEFL_ERR_ARGUMENT;
    return guarded([&] { writer->impl.append(*record); });
}

phefl_status phefl_writer_finish(phefl_writer* writer) {
    if (!check_handle(writer, "writer")) return PHEFL_ERR_ARGUMENT;
    return guarded([&] { writer->impl.finish(); });
}

phefl_status phefl_writer_abort(phefl_writer* writer, const char* reason) {
    if (!check_handle(writer, "writer")) return PHEFL_ERR_ARGUMENT;
    if (!check_pointer(reason, "reason")) return PHEFL_ERR_ARGUMENT;
    return guarded([&] { writer->impl.abort(reason); });
}

void phefl_writer_free(phefl_writer* writer) {
    delete writer;
}

phefl_archive* phefl_archive_read(const char* path) {
    if (!check_pointer(path, "path")) return nullptr;
    phefl_archive* archive = nullptr;
    guarded([&] { archive = new phefl_archive{phefl::read_archive(path)}; });
    return archive;
}

int phefl_archive_complete(const phefl_archive* archive) {
    if (!check_handle(archive, "archive")) return 0;
    return archive->impl.complete ? 1 : 0;
}

char* phefl_archive_error(const phefl_archive* archive) {
    if (!check_handle(archive, "archive")) return nullptr;
    return dup_string(archive->impl.error);
}

int phefl_archive_rounds(const phefl_archive* archive) {
    if (!check_handle(archive, "archive")) return -1;
    return static_cast<int>(archive->impl.log.size());
}

phefl_status phefl_archive_round(const phefl_archive* archive, int index, int* out_round,
                                 double* out_mean_accuracy) {
    if (!check_handle(archive, "archive")) return PHEFL_ERR_ARGUMENT;
    const phefl::RoundRecord* record = find_record(archive, index);
    if (record == nullptr) return PHEFL_ERR_ARGUMENT;
    if (out_round != nullptr) *out_round = record->round;
    if (out_mean_accuracy != nullptr) *out_mean_accuracy = record->mean_accuracy;
    return PHEFL_OK;
}

phefl_status phefl_archive_edge_accuracy(const phefl_archive* archive, int index, int edge,
                                         double* out) {
    if (!check_handle(archive, "archive")) return PHEFL_ERR_ARGUMENT;
    if (!check_pointer(out, "out")) return PHEFL_ERR_ARGUMENT;
    const phefl::RoundRecord* record = find_record(archive, index);
    if (record == nullptr) return PHEFL_ERR_ARGUMENT;
    if (edge < 0 || edge >= static_cast<int>(record->edge_accuracy.size())) {
        record_error("edge " + std::to_string(edge) + " outside [0, " +
                     std::to_string(record->edge_accuracy.size()) + ")");
        return PHEFL_ERR_ARGUMENT;
    }
    *out = record->edge_accuracy[static_cast<std::size_t>(edge)];
    return PHEFL_OK;
}

int phefl_archive_alpha_count(const phefl_archive* archive, int index) {
    if (!check_handle(archive, "archive")) return -1;
    const phefl::RoundRecord* record = find_record(archive, index);
    if (record == nullptr) return -1;
    return static_cast<int>(record->alphas.size());
}

phefl_status phefl_archive_alpha(const phefl_archive* archive, int index, int i, int* out_edge,
                                 double* out_acc_edge, double* out_acc_cloud, double* out_alpha) {
    if (!check_handle(archive, "archive")) return PHEFL_ERR_ARGUMENT;
    const phefl::RoundRecord* record = find_record(archive, index);
    if (record == nullptr) return PHEFL_ERR_ARGUMENT;
    if (i < 0 || i >= static_cast<int>(record->alphas.size())) {
        record_error("alpha index " + std::to_string(i) + " outside [0, " +
                     std::to_string(record->alphas.size()) + ")");
        return PHEFL_ERR_ARGUMENT;
    }
    const phefl::AlphaRecord& alpha = record->alphas[static_cast<std::size_t>(i)];
    if (out_edge != nullptr) *out_edge = alpha.edge_id;
    if (out_acc_edge != nullptr) *out_acc_edge = alpha.acc_edge;
    if (out_acc_cloud != nullptr) *out_acc_cloud = alpha.acc_cloud;
    if (out_alpha != nullptr) *out_alpha = alpha.alpha;
    return PHEFL_OK;
}

phefl_config* phefl_archive_config(const phefl_archive* archive) {
    if (!check_handle(archive, "archive")) return nullptr;
    return new phefl_config{archive->impl.config};
}

char* phefl_archive_config_text(const phefl_archive* archive) {
    if (!check_handle(archive, "archive")) return nullptr;
    return dup_string(archive->impl.config_text);
}

void phefl_archive_free(phefl_archive* archive) {
    delete archive;
}

/* ---- Metrics --------------------------------------------------------- */

phefl_status phefl_acc_n(const double* values, int count, int n, double* out) {
    if (!check_pointer(values, "values") || !check_pointer(out, "out")) {
        return PHEFL_ERR_ARGUMENT;
    }
    if (count < 0) {
        record_error("negative count");
        return PHEFL_ERR_ARGUMENT;
    }
    return guarded([&] {
        const std::vector<double> series(values, values + count);
        *out = phefl::acc_n(series, n);
    });
}

phefl_status phefl_drop_m(const double* values, int count, int m_percent,
                          const char* window_mode, int window, int* out_measurable, double* out) {
    if (!check_pointer(values, "values") || !check_pointer(window_mode, "window_mode") ||
        !check_pointer(out_measurable, "out_measurable") || !check_pointer(out, "out")) {
        return PHEFL_ERR_ARGUMENT;
    }
    if (count < 0) {
        record_error("negative count");
        return PHEFL_ERR_ARGUMENT;
    }
    return guarded([&] {
        const std::vector<double> series(values, values + count);
        const auto mode = phefl::drop_window_mode_from_string(window_mode);
        const auto drop = phefl::drop_m(series, m_percent, mode, window);
        *out_measurable = drop.has_value() ? 1 : 0;
        if (drop.has_value()) *out = *drop;
    });
}

phefl_status phefl_rolling_mean(const double* values, int count, int window, double* out) {
    if (!check_pointer(values, "values") || !check_pointer(out, "out")) {
        return PHEFL_ERR_ARGUMENT;
    }
    if (count < 0) {
        record_error("negative count");
        return PHEFL_ERR_ARGUMENT;
    }
    return guarded([&] {
        const std::vector<double> series(values, values + count);
        const std::vector<double> means = phefl::rolling_mean(series, window);
        std::memcpy(out, means.data(), means.size() * sizeof(double));
    });
}

phefl_status phefl_compare(int count, const char* const* names, const double* const* series,
                           const int* lengths, int acc_round, int drop_percent,
                           const char* window_mode, int window, double* out_acc_n,
                           int* out_drop_measurable, double* out_drop_m,
                           double* out_final_rolling, int* out_rank) {
    if (!check_pointer(names, "names") || !check_pointer(series, "series") ||
        !check_pointer(lengths, "lengths") || !check_pointer(window_mode, "window_mode") ||
        !check_pointer(out_acc_n, "out_acc_n") ||
        !check_pointer(out_drop_measurable, "out_drop_measurable") ||
        !check_pointer(out_drop_m, "out_drop_m") ||
        !check_pointer(out_final_rolling, "out_final_rolling") ||
        !check_pointer(out_rank, "out_rank")) {
        return PHEFL_ERR_ARGUMENT;
    }
    if (count < 1) {
        record_error("compare needs at least one run");
        return PHEFL_ERR_ARGUMENT;
    }
    return guarded([&] {
        std::vector<phefl::AccuracySeries> runs;
        runs.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            if (names[i] == nullptr || series[i] == nullptr || lengths[i] < 0) {
                throw phefl::InvalidArgument("run " + std::to_string(i) +
                                             ": null name/series or negative length");
            }
            phefl::AccuracySeries run;
            run.strategy = names[i];
            run.values.assign(series[i], series[i] + lengths[i]);
            runs.push_back(std::move(run));
        }
        const auto mode = phefl::drop_window_mode_from_string(window_mode);
        const auto table =
            phefl::compare_strategies(runs, acc_round, drop_percent, mode, window);
        for (int i = 0; i < count; ++i) {
            const auto& row = table[static_cast<std::size_t>(i)];
            out_acc_n[i] = row.acc_n;
            out_drop_measurable[i] = row.drop_m.has_value() ? 1 : 0;
            out_drop_m[i] = row.drop_m.value_or(0.0);
            out_final_rolling[i] = row.final_rolling_mean;
            out_rank[i] = row.rank;
        }
    });
}

/* ---- Partition reports ----------------------------------------------- */

phefl_report* phefl_report_new(const phefl_config* config) {
    if (!check_handle(config, "config")) return nullptr;
    phefl_report* report = nullptr;
    guarded([&] { report = new phefl_report{phefl::build_partition_report(config->impl)}; });
    return report;
}

int phefl_report_num_edges(const phefl_report* report) {
    if (!check_handle(report, "report")) return -1;
    return report->impl.plan.num_edges;
}

int phefl_report_num_classes(const phefl_report* report) {
    if (!check_handle(report, "report")) return -1;
    return report->impl.plan.num_classes;
}

phefl_status phefl_report_train_percent(const phefl_report* report, int edge, double* out) {
    if (!check_handle(report, "report") || !check_pointer(out, "out")) return PHEFL_ERR_ARGUMENT;
    const phefl::PartitionReport* impl = checked_report(report, edge);
    if (impl == nullptr) return PHEFL_ERR_ARGUMENT;
    const auto& row = impl->train_percent[static_cast<std::size_t>(edge)];
    std::memcpy(out, row.data(), row.size() * sizeof(double));
    return PHEFL_OK;
}

phefl_status phefl_report_test_counts(const phefl_report* report, int edge, int64_t* out) {
    if (!check_handle(report, "report") || !check_pointer(out, "out")) return PHEFL_ERR_ARGUMENT;
    const phefl::PartitionReport* impl = checked_report(report, edge);
    if (impl == nullptr) return PHEFL_ERR_ARGUMENT;
    const auto& row = impl->test_counts[static_cast<std::size_t>(edge)];
    std::memcpy(out, row.data(), row.size() * sizeof(int64_t));
    return PHEFL_OK;
}

phefl_status phefl_report_test_total(const phefl_report* report, int edge, int64_t* out) {
    if (!check_handle(report, "report") || !check_pointer(out, "out")) return PHEFL_ERR_ARGUMENT;
    const phefl::PartitionReport* impl = checked_report(report, edge);
    if (impl == nullptr) return PHEFL_ERR_ARGUMENT;
    *out = impl->test_totals[static_cast<std::size_t>(edge)];
    return PHEFL_OK;
}

void phefl_report_free(phefl_report* report) {
    delete report;
}

}  // extern "C"
