#ifndef PHEFL_ORCHESTRATOR_HPP
#define PHEFL_ORCHESTRATOR_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "phefl/aggregation.hpp"
#include "phefl/config.hpp"
#include "phefl/model.hpp"
#include "phefl/partition.hpp"
#include "phefl/record.hpp"

namespace phefl {

// Runs fn(i) for i in [0, count) on up to `workers` threads (0 = hardware
// concurrency, 1 = inline). Each call must touch only its own slot of any
// shared output; the first exception thrown is re-raised on the caller.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

// Resolves where IDX files come from: explicit config paths win; otherwise
// the PHEFL_DATA_DIR environment variable names a directory holding the
// conventionally named MNIST files. Throws ConfigError when neither is set.
struct IdxPaths {
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
};
IdxPaths resolve_idx_paths(const ExperimentConfig& config);

// Drives the three-level round loop: devices train locally, edges aggregate,
// and the configured strategy decides what flows back down. Construction
// validates the config, builds the partition plan, draws (or loads) the data,
// and broadcasts the common initial model; after that, step() advances one
// round at a time. All randomness is derived from config.seed, so a
// Simulation is a pure function of its config — worker count changes
// scheduling only, never results.
class Simulation {
public:
    explicit Simulation(ExperimentConfig config, int workers = 0);

    // Advances one round and returns its record (also appended to log()).
    const RoundRecord& step();

    // Runs the remaining rounds up to config().rounds.
    void run();

    int rounds_done() const { return static_cast<int>(log_.size()); }
    const RoundLog& log() const { return log_; }
    const ExperimentConfig& config() const { return config_; }
    const PartitionPlan& plan() const { return plan_; }
    const ModelSpec& model_spec() const { return spec_; }
    const EdgeTestSets& tests() const { return tests_; }
    const std::vector<std::vector<Dataset>>& device_data() const { return device_data_; }
    const std::vector<std::vector<ParameterVector>>& device_params() const {
        return device_params_;
    }

private:
    std::vector<WeightedModel> edge_models(
        const std::vector<std::vector<ParameterVector>>& params) const;

    ExperimentConfig config_;
    int workers_;
    PartitionPlan plan_;
    ModelSpec spec_;
    std::vector<std::vector<Dataset>> device_data_;
    EdgeTestSets tests_;
    std::vector<std::vector<ParameterVector>> device_params_;
    RoundLog log_;
};

// Convenience wrapper: construct, run all rounds, hand back the log.
RoundLog run_experiment(const ExperimentConfig& config, int workers = 0);

// How a config lays its data out, for inspection without training: the
// training composition of each edge as percentages of its devices, and the
// label counts of each edge's actual test distribution under the configured
// test mode. Rows are edges, columns are labels.
struct PartitionReport {
    PartitionPlan plan;
    std::vector<std::vector<double>> train_percent;
    std::vector<std::vector<std::int64_t>> test_counts;
    std::vector<std::int64_t> test_totals;
};
PartitionReport build_partition_report(const ExperimentConfig& config);

}  // namespace phefl

#endif  // PHEFL_ORCHESTRATOR_HPP
