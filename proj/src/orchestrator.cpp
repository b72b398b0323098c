#include "phefl/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "phefl/errors.hpp"
#include "phefl/rng.hpp"

namespace phefl {

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t pool = workers > 0 ? static_cast<std::size_t>(workers)
                                   : std::max(1u, std::thread::hardware_concurrency());
    pool = std::min(pool, count);
    if (pool <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& thread : threads) thread.join();
    if (first_error) std::rethrow_exception(first_error);
}

IdxPaths resolve_idx_paths(const ExperimentConfig& config) {
    IdxPaths paths{config.idx_train_images, config.idx_train_labels, config.idx_test_images,
                   config.idx_test_labels};
    const bool any_missing = paths.train_images.empty() || paths.train_labels.empty() ||
                             paths.test_images.empty() || paths.test_labels.empty();
    if (any_missing) {
        const char* dir = std::getenv("PHEFL_DATA_DIR");
        if (dir == nullptr || *dir == '\0') {
            throw ConfigError("data_source is idx but the idx_* paths are incomplete and "
                              "PHEFL_DATA_DIR is not set");
        }
        const std::string base = std::string(dir) + "/";
        if (paths.train_images.empty()) paths.train_images = base + "train-images-idx3-ubyte";
        if (paths.train_labels.empty()) paths.train_labels = base + "train-labels-idx1-ubyte";
        if (paths.test_images.empty()) paths.test_images = base + "t10k-images-idx3-ubyte";
        if (paths.test_labels.empty()) paths.test_labels = base + "t10k-labels-idx1-ubyte";
    }
    return paths;
}

namespace {

struct PreparedData {
    Dataset train_pool;
    Dataset test_pool;
    int input_dim = 0;
};

// Per-label training demand implied by the plan, sized to the busiest label.
int max_label_demand(const PartitionPlan& plan) {
    std::vector<int> demand(static_cast<std::size_t>(plan.num_classes), 0);
    for (const auto& row : plan.device_labels) {
        for (const int label : row) {
            demand[static_cast<std::size_t>(label)] += plan.samples_per_device;
        }
    }
    int top = 0;
    for (const int d : demand) top = std::max(top, d);
    return top;
}

PreparedData prepare_data(const ExperimentConfig& config, const PartitionPlan& plan) {
    PreparedData data;
    if (config.data_source == "synthetic") {
        const int train_per_label = config.synthetic_train_per_label > 0
                                        ? config.synthetic_train_per_label
                                        : max_label_demand(plan);
        auto pools = generate_synthetic(config.num_classes, train_per_label,
                                        config.synthetic_test_per_label, config.synthetic_dim,
                                        config.synthetic_separation,
                                        derive_seed(config.seed, "synthetic-data"));
        data.train_pool = std::move(pools.train_pool);
        data.test_pool = std::move(pools.test_pool);
        data.input_dim = config.synthetic_dim;
        return data;
    }

    const IdxPaths paths = resolve_idx_paths(config);
    data.train_pool = load_idx(paths.train_images, paths.train_labels);
    Dataset raw_test = load_idx(paths.test_images, paths.test_labels);
    if (data.train_pool.empty() || raw_test.empty()) {
        throw DataError("IDX files contain no examples");
    }
    data.input_dim = static_cast<int>(data.train_pool.examples[0].features.size());

    // The mirrored test construction needs equal per-label pools divisible by
    // the edge size; level the ingested pool down to the largest usable size.
    std::vector<int> counts(static_cast<std::size_t>(config.num_classes), 0);
    for (const auto& ex : raw_test.examples) {
        if (ex.label < 0 || ex.label >= config.num_classes) {
            throw DataError("test label " + std::to_string(ex.label) + " outside [0, " +
                            std::to_string(config.num_classes) + ")");
        }
        ++counts[static_cast<std::size_t>(ex.label)];
    }
    int smallest = counts.empty() ? 0 : counts[0];
    for (const int c : counts) smallest = std::min(smallest, c);
    const int usable = (smallest / config.devices_per_edge) * config.devices_per_edge;
    if (usable < 1) {
        throw DataError("test pool too small: smallest label has " + std::to_string(smallest) +
                        " examples, fewer than devices_per_edge = " +
                        std::to_string(config.devices_per_edge));
    }
    data.test_pool = take_per_label(raw_test, config.num_classes, usable);
    return data;
}

}  // namespace

Simulation::Simulation(ExperimentConfig config, int workers)
    : config_(std::move(config)), workers_(workers) {
    config_.validate();
    plan_ = make_partition_plan(config_.scenario, config_.num_edges, config_.devices_per_edge,
                                config_.num_classes, config_.samples_per_device);
    auto data = prepare_data(config_, plan_);
    spec_ = config_.model_spec(data.input_dim);
    device_data_ = partition_train(data.train_pool, plan_, config_.seed);
    tests_ = build_edge_test_sets(data.test_pool, plan_, config_.test_mode, config_.ptd_fraction,
                                  config_.seed);

    // Algorithm start: one common initial model for every device.
    const ParameterVector initial = init_params(spec_, derive_seed(config_.seed, "global-init"));
    device_params_.assign(
        static_cast<std::size_t>(config_.num_edges),
        std::vector<ParameterVector>(static_cast<std::size_t>(config_.devices_per_edge),
                                     initial));
}

std::vector<WeightedModel> Simulation::edge_models(
    const std::vector<std::vector<ParameterVector>>& params) const {
    std::vector<WeightedModel> edges;
    edges.reserve(static_cast<std::size_t>(config_.num_edges));
    for (int e = 0; e < config_.num_edges; ++e) {
        std::vector<WeightedModel> devices;
        devices.reserve(static_cast<std::size_t>(config_.devices_per_edge));
        std::int64_t edge_examples = 0;
        for (int c = 0; c < config_.devices_per_edge; ++c) {
            const auto size = static_cast<std::int64_t>(
                device_data_[static_cast<std::size_t>(e)][static_cast<std::size_t>(c)]
                    .examples.size());
            devices.push_back(
                {params[static_cast<std::size_t>(e)][static_cast<std::size_t>(c)], size});
            edge_examples += size;
        }
        edges.push_back({weighted_average(devices), edge_examples});
    }
    return edges;
}

const RoundRecord& Simulation::step() {
    const auto start = std::chrono::steady_clock::now();
    const int t = rounds_done() + 1;
    const auto edges = static_cast<std::size_t>(config_.num_edges);
    const auto devices = static_cast<std::size_t>(config_.devices_per_edge);

    // 1. Local training, fanned out over all devices. Each task writes only
    // its own slot; seeds depend on (round, edge, device) but not on the
    // strategy, so strategies stay comparable under shared seeds.
    std::vector<std::vector<ParameterVector>> trained(
        edges, std::vector<ParameterVector>(devices));
    parallel_for(edges * devices, workers_, [&](std::size_t i) {
        const std::size_t e = i / devices;
        const std::size_t c = i % devices;
        trained[e][c] = train_local(
            spec_, device_params_[e][c], device_data_[e][c], config_.epochs, config_.batch_size,
            config_.learning_rate,
            derive_seed(config_.seed, "device-train",
                        {static_cast<std::uint64_t>(t), e, c}));
    });

    RoundRecord record;
    record.round = t;
    record.edge_accuracy.resize(edges);

    // The model each edge is evaluated on (and, on aggregation rounds,
    // broadcasts back to its devices).
    std::vector<ParameterVector> edge_distribution(edges);

    const bool aggregate = t % config_.edge_aggregation_frequency == 0;
    if (aggregate) {
        // 2. Edge-level aggregation.
        const auto eams = edge_models(trained);

        // 3. Strategy branch: what flows down to the devices.
        switch (config_.strategy) {
            case Strategy::kOnlyEdge:
                for (std::size_t e = 0; e < edges; ++e) {
                    edge_distribution[e] = eams[e].params;
                }
                break;
            case Strategy::kEdgeCloud: {
                const ParameterVector gm = global_aggregate(eams);
                for (std::size_t e = 0; e < edges; ++e) edge_distribution[e] = gm;
                break;
            }
            case Strategy::kPheFl: {
                const auto cams = cloud_aggregate_per_edge(eams);
                record.alphas.resize(edges);
                parallel_for(edges, workers_, [&](std::size_t e) {
                    AlphaRecord& alpha = record.alphas[e];
                    alpha.edge_id = static_cast<int>(e);
                    alpha.round = t;
                    alpha.acc_edge =
                        evaluate_accuracy(spec_, eams[e].params, tests_.ptd[e]);
                    alpha.acc_cloud = evaluate_accuracy(spec_, cams[e], tests_.ptd[e]);
                    alpha.alpha = config_.forced_alpha.has_value()
                                      ? *config_.forced_alpha
                                      : compute_alpha(alpha.acc_edge, alpha.acc_cloud);
                    edge_distribution[e] = personalize(eams[e].params, cams[e], alpha.alpha);
                });
                break;
            }
        }

        for (std::size_t e = 0; e < edges; ++e) {
            for (std::size_t c = 0; c < devices; ++c) {
                device_params_[e][c] = edge_distribution[e];
            }
        }
    } else {
        // Off-cycle round: devices keep their freshly trained weights, and
        // each edge is evaluated on the average it would aggregate to.
        const auto eams = edge_models(trained);
        for (std::size_t e = 0; e < edges; ++e) edge_distribution[e] = eams[e].params;
        device_params_ = std::move(trained);
    }

    // 4. Evaluate each edge's model on its evaluation split.
    parallel_for(edges, workers_, [&](std::size_t e) {
        record.edge_accuracy[e] =
            evaluate_accuracy(spec_, edge_distribution[e], tests_.etd[e]);
    });
    double mean = 0.0;
    for (const double acc : record.edge_accuracy) mean += acc;
    record.mean_accuracy = mean / static_cast<double>(edges);
    record.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    log_.push_back(std::move(record));
    return log_.back();
}

void Simulation::run() {
    while (rounds_done() < config_.rounds) step();
}

RoundLog run_experiment(const ExperimentConfig& config, int workers) {
    Simulation sim(config, workers);
    sim.run();
    return sim.log();
}

PartitionReport build_partition_report(const ExperimentConfig& config) {
    config.validate();
    PartitionReport report;
    report.plan = make_partition_plan(config.scenario, config.num_edges, config.devices_per_edge,
                                      config.num_classes, config.samples_per_device);
    const auto data = prepare_data(config, report.plan);
    const EdgeTestSets tests = build_edge_test_sets(data.test_pool, report.plan, config.test_mode,
                                                    config.ptd_fraction, config.seed);

    const auto edges = static_cast<std::size_t>(config.num_edges);
    const auto classes = static_cast<std::size_t>(config.num_classes);
    report.train_percent.assign(edges, std::vector<double>(classes, 0.0));
    report.test_counts.assign(edges, std::vector<std::int64_t>(classes, 0));
    report.test_totals.assign(edges, 0);
    for (std::size_t e = 0; e < edges; ++e) {
        const auto hist = report.plan.edge_label_histogram(static_cast<int>(e));
        for (std::size_t l = 0; l < classes; ++l) {
            // Multiply before dividing: device counts over a power-of-ten
            // edge size then stay exact in floating point (30, 10, ...).
            report.train_percent[e][l] =
                (100.0 * hist[l]) / static_cast<double>(config.devices_per_edge);
        }
        for (const auto& ex : tests.ttd[e].examples) {
            ++report.test_counts[e][static_cast<std::size_t>(ex.label)];
            ++report.test_totals[e];
        }
    }
    return report;
}

}  // namespace phefl
