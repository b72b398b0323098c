/* C interface to the federated-learning simulator.
 *
 * Conventions:
 *  - Handle-returning functions give NULL on failure; int-returning
 *    functions give a phefl_status (PHEFL_OK is 0). In both cases
 *    phefl_last_error() describes the most recent failure on the calling
 *    thread; the pointer stays valid until that thread's next failure.
 *  - char* results are heap copies owned by the caller: release them with
 *    phefl_string_free. Handles are released with their matching _free,
 *    which accepts NULL.
 *  - Round indices are 1-based (round 1 is the first), edge and record
 *    indices 0-based, matching the library's own conventions.
 */
#ifndef PHEFL_H
#define PHEFL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    PHEFL_OK = 0,
    PHEFL_ERR_CONFIG = 1,     /* bad key, value, or combination */
    PHEFL_ERR_DATA = 2,       /* dataset files or pool shapes */
    PHEFL_ERR_ARGUMENT = 3,   /* precondition violated on a call */
    PHEFL_ERR_DIVERGED = 4,   /* non-finite training loss */
    PHEFL_ERR_IO = 5,         /* archive file access */
    PHEFL_ERR_INTERNAL = 6    /* anything else (bug or resource failure) */
} phefl_status;

typedef struct phefl_config phefl_config;    /* experiment description */
typedef struct phefl_sim phefl_sim;          /* in-progress simulation */
typedef struct phefl_writer phefl_writer;    /* results archive being written */
typedef struct phefl_archive phefl_archive;  /* results archive read back */
typedef struct phefl_report phefl_report;    /* partition layout report */

/* Library version string; static storage, do not free. */
const char* phefl_version(void);

/* Message for the calling thread's most recent failure ("" if none). */
const char* phefl_last_error(void);

/* Releases a string returned by this library. NULL is a no-op. */
void phefl_string_free(char* text);

/* ---- Experiment configs ---------------------------------------------- */

/* Parses a key-value config document from a file or from memory. */
phefl_config* phefl_config_load(const char* path);
phefl_config* phefl_config_parse(const char* text);

/* Overrides one key, file syntax ("strategy", "only_edge"). */
phefl_status phefl_config_set(phefl_config* config, const char* key, const char* value);

/* Reads one key back in canonical textual form. */
phefl_status phefl_config_get(const phefl_config* config, const char* key, char** out_value);

/* Cross-field validation, including a dry run of the scenario layout. */
phefl_status phefl_config_validate(const phefl_config* config);

/* Canonical serialization; parsing it reproduces the config exactly. */
char* phefl_config_serialize(const phefl_config* config);

/* Stable digest of the canonical serialization. */
phefl_status phefl_config_fingerprint(const phefl_config* config, uint64_t* out);

void phefl_config_free(phefl_config* config);

/* ---- Simulations ----------------------------------------------------- */

/* Builds the world for a validated config: partitions data, initializes
 * every device from one common model. workers 0 = hardware concurrency,
 * 1 = single-threaded; the worker count never changes results. */
phefl_sim* phefl_sim_new(const phefl_config* config, int workers);

/* Advances one federation round. */
phefl_status phefl_sim_step(phefl_sim* sim);

int phefl_sim_rounds_done(const phefl_sim* sim);
int phefl_sim_total_rounds(const phefl_sim* sim);
int phefl_sim_num_edges(const phefl_sim* sim);

/* Results of a completed round. */
phefl_status phefl_sim_mean_accuracy(const phefl_sim* sim, int round, double* out);
phefl_status phefl_sim_edge_accuracy(const phefl_sim* sim, int round, int edge, double* out);

void phefl_sim_free(phefl_sim* sim);

/* ---- Results archives ------------------------------------------------ */

/* Creates an archive at `path` and writes its metadata line (resolved
 * config, tool version, timestamp; SOURCE_DATE_EPOCH pins the timestamp). */
phefl_writer* phefl_writer_open(const char* path, const phefl_config* config);

/* Appends the record of the given completed round of `sim`. */
phefl_status phefl_writer_append_round(phefl_writer* writer, const phefl_sim* sim, int round);

/* Closes the archive as complete, or as incomplete carrying a reason. */
phefl_status phefl_writer_finish(phefl_writer* writer);
phefl_status phefl_writer_abort(phefl_writer* writer, const char* reason);

/* Releasing an unfinished writer marks the archive incomplete. */
void phefl_writer_free(phefl_writer* writer);

/* Reads an archive back; archives are self-describing, so no config file
 * is needed. Values reproduce the originals bit-for-bit. */
phefl_archive* phefl_archive_read(const char* path);

int phefl_archive_complete(const phefl_archive* archive);  /* 1 or 0 */
char* phefl_archive_error(const phefl_archive* archive);   /* "" when complete */
int phefl_archive_rounds(const phefl_archive* archive);

/* Record access by 0-based record index. */
phefl_status phefl_archive_round(const phefl_archive* archive, int index, int* out_round,
                                 double* out_mean_accuracy);
phefl_status phefl_archive_edge_accuracy(const phefl_archive* archive, int index, int edge,
                                         double* out);
int phefl_archive_alpha_count(const phefl_archive* archive, int index);
phefl_status phefl_archive_alpha(const phefl_archive* archive, int index, int i, int* out_edge,
                                 double* out_acc_edge, double* out_acc_cloud, double* out_alpha);

/* The embedded resolved config, as a fresh handle or as text. */
phefl_config* phefl_archive_config(const phefl_archive* archive);
char* phefl_archive_config_text(const phefl_archive* archive);

void phefl_archive_free(phefl_archive* archive);

/* ---- Metrics --------------------------------------------------------- */

/* Best mean accuracy over the first n rounds of a series. */
phefl_status phefl_acc_n(const double* values, int count, int n, double* out);

/* Largest within-window accuracy drop after the series first reaches
 * m_percent/100. window_mode is "sliding" or "anchored". *out_measurable
 * is 0 (and *out unset) when the threshold is never reached. */
phefl_status phefl_drop_m(const double* values, int count, int m_percent,
                          const char* window_mode, int window, int* out_measurable,
                          double* out);

/* Trailing rolling mean; out receives `count` values. */
phefl_status phefl_rolling_mean(const double* values, int count, int window, double* out);

/* Scores several runs side by side. Arrays indexed by run, all of length
 * `count`; out arrays are caller-allocated. Rank 1 is the best acc_n. */
phefl_status phefl_compare(int count, const char* const* names, const double* const* series,
                           const int* lengths, int acc_round, int drop_percent,
                           const char* window_mode, int window, double* out_acc_n,
                           int* out_drop_measurable, double* out_drop_m,
                           double* out_final_rolling, int* out_rank);

/* ---- Partition reports ----------------------------------------------- */

/* Lays out the config's data without training: per-edge training label
 * percentages and actual test-set label counts under the config's mode. */
phefl_report* phefl_report_new(const phefl_config* config);

int phefl_report_num_edges(const phefl_report* report);
int phefl_report_num_classes(const phefl_report* report);

/* Row accessors; out receives num_classes values for edge (0-based). */
phefl_status phefl_report_train_percent(const phefl_report* report, int edge, double* out);
phefl_status phefl_report_test_counts(const phefl_report* report, int edge, int64_t* out);
phefl_status phefl_report_test_total(const phefl_report* report, int edge, int64_t* out);

void phefl_report_free(phefl_report* report);

#ifdef __cplusplus
}
#endif

#endif /* PHEFL_H */
