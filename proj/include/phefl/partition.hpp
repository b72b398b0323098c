#ifndef PHEFL_PARTITION_HPP
#define PHEFL_PARTITION_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phefl/model.hpp"

namespace phefl {

// The four training-set distribution scenarios. All follow a cyclic layout:
// edge e (1-indexed) is centred on "predominant" label (e-1) mod num_classes,
// and every device holds examples of exactly one label.
//
//   D1: every device on the edge holds the predominant label (1 distinct
//       label per edge, 100% predominant share).
//   D2: labels {(e-1+j) mod C : j=0..4}, devices split evenly among them
//       (5 distinct labels, 20% predominant share).
//   D3: three devices hold the predominant label and seven devices hold one
//       label each of (e..e+6) mod C (8 distinct labels, 30% share).
//   D4: one device per label (10 distinct labels, 10% share).
enum class Scenario { kD1 = 1, kD2, kD3, kD4 };

Scenario scenario_from_string(std::string_view text);
std::string_view to_string(Scenario scenario);

// Whether per-edge test sets mirror the edge's training mix ("imbalanced") or
// contain the full pool for every label the edge trains on ("balanced").
enum class TestMode { kImbalanced, kBalanced };

TestMode test_mode_from_string(std::string_view text);
std::string_view to_string(TestMode mode);

// Static description of the device-level world: which device trains on which
// label, and how many examples each device holds.
struct PartitionPlan {
    Scenario scenario = Scenario::kD1;
    int num_edges = 10;
    int devices_per_edge = 10;
    int num_classes = 10;
    int samples_per_device = 50;
    // device_labels[edge][device] is the single class label that device
    // trains on; shape num_edges x devices_per_edge.
    std::vector<std::vector<int>> device_labels;

    int total_devices() const { return num_edges * devices_per_edge; }

    // Number of devices per class label on one edge (length num_classes).
    std::vector<int> edge_label_histogram(int edge) const;
    // Sorted distinct labels trained on by the given edge.
    std::vector<int> labels_present(int edge) const;
};

// Builds the label matrix for a scenario. Sizes that cannot reproduce the
// scenario's distinct-label count and predominant share exactly are rejected:
// D2 needs devices_per_edge divisible by 5 and num_classes >= 5, D3 needs
// devices_per_edge == 10 and num_classes >= 8, D4 needs
// devices_per_edge == num_classes.
std::vector<std::vector<int>> assign_device_labels(Scenario scenario, int num_edges,
                                                   int devices_per_edge, int num_classes);

// assign_device_labels plus validation, bundled into a plan.
PartitionPlan make_partition_plan(Scenario scenario, int num_edges, int devices_per_edge,
                                  int num_classes, int samples_per_device);

// Draws samples_per_device examples of each device's label from the pool,
// without replacement and without reuse across devices. Selection is a
// deterministic function of (pool order, plan, seed). Returns shards indexed
// [edge][device]. Throws ConfigError naming the label and shortfall when the
// pool cannot cover the demand.
std::vector<std::vector<Dataset>> partition_train(const Dataset& train_pool,
                                                  const PartitionPlan& plan, std::uint64_t seed);

// Per-edge test set whose label proportions equal the edge's training-shard
// proportions exactly. Requires an equal number of pool examples per label,
// divisible by devices_per_edge; every edge's set has that per-label pool
// size. Examples may be shared across edges but not within one edge.
std::vector<Dataset> build_imbalanced_test(const Dataset& test_pool, const PartitionPlan& plan);

// Per-edge test set containing the full per-label pool for every label
// present in the edge's training shard.
std::vector<Dataset> build_balanced_test(const Dataset& test_pool, const PartitionPlan& plan);

// Splits a test set into (personalization, evaluation) parts, stratified by
// label. The personalization part receives round(fraction * |ttd|) examples
// in total, with each label's share within one example of fraction * count.
// Deterministic given seed; the two parts are disjoint and exhaustive.
std::pair<Dataset, Dataset> split_ptd_etd(const Dataset& ttd, double fraction,
                                          std::uint64_t seed);

// One edge's test material: the full set plus its personalization/evaluation
// split, for all edges of a plan.
struct EdgeTestSets {
    TestMode mode = TestMode::kImbalanced;
    std::vector<Dataset> ttd;  // indexed by edge
    std::vector<Dataset> ptd;
    std::vector<Dataset> etd;
};

EdgeTestSets build_edge_test_sets(const Dataset& test_pool, const PartitionPlan& plan,
                                  TestMode mode, double ptd_fraction, std::uint64_t seed);

// Gaussian class clusters with centres on a sphere of radius `separation`.
// When dim >= num_classes the centre directions are orthonormalised, so any
// two centres are separation*sqrt(2) apart and classes are linearly separable
// for separation a few multiples of the unit noise. Features are affinely
// mapped into [0,1] (clipped beyond four standard deviations).
struct SyntheticPools {
    Dataset train_pool;
    Dataset test_pool;
};

SyntheticPools generate_synthetic(int num_classes, int train_per_label, int test_per_label,
                                  int dim, double separation, std::uint64_t seed);

// Reads an IDX image/label file pair (the MNIST container format: big-endian
// magic 0x00000803 for images, 0x00000801 for labels). Pixels are scaled to
// [0,1] and images flattened row-major. Malformed input raises DataError
// naming the byte offset.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// First per_label examples of each label 0..num_classes-1, in pool order.
// Used to level an ingested pool before partitioning. Throws ConfigError on
// shortfall.
Dataset take_per_label(const Dataset& pool, int num_classes, int per_label);

}  // namespace phefl

#endif  // PHEFL_PARTITION_HPP
