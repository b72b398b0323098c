#ifndef PHEFL_CONFIG_HPP
#define PHEFL_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phefl/model.hpp"
#include "phefl/partition.hpp"

namespace phefl {

// The three ways models flow upward each round: personalized leave-one-out
// mixing, a uniform global average, or edge-local aggregation only.
enum class Strategy { kPheFl, kEdgeCloud, kOnlyEdge };

Strategy strategy_from_string(std::string_view text);
std::string_view to_string(Strategy strategy);

// Complete description of one experiment. Parsed from a versioned key-value
// text document; every field maps to exactly one config key of the same name.
struct ExperimentConfig {
    // Required keys (no defaults).
    Scenario scenario = Scenario::kD1;
    Strategy strategy = Strategy::kPheFl;
    int rounds = 0;

    // Optional keys with defaults.
    int epochs = 5;
    int batch_size = 32;
    double learning_rate = 0.1;
    int num_edges = 10;
    int devices_per_edge = 10;
    int num_classes = 10;
    int samples_per_device = 50;
    int edge_aggregation_frequency = 1;
    TestMode test_mode = TestMode::kImbalanced;
    double ptd_fraction = 0.15;
    std::uint64_t seed = 1;
    std::optional<double> forced_alpha;  // personalized strategy only
    std::vector<int> hidden_dims = {64};

    // Data source: "synthetic" draws Gaussian clusters, "idx" reads files.
    std::string data_source = "synthetic";
    int synthetic_dim = 16;
    double synthetic_separation = 6.0;
    int synthetic_test_per_label = 100;
    int synthetic_train_per_label = 0;  // 0 = size the pool to the plan's demand
    std::string idx_train_images;
    std::string idx_train_labels;
    std::string idx_test_images;
    std::string idx_test_labels;

    // Cross-field consistency, including a dry run of the scenario layout so
    // size problems surface before any training starts.
    void validate() const;

    // Stable 64-bit digest of the canonical serialization.
    std::uint64_t fingerprint() const;

    ModelSpec model_spec(int input_dim) const;
};

// Parses a config document: `key = value` lines, blank lines and
// #-comments ignored. Requires schema_version = 1 and the three required
// keys; rejects unknown and duplicate keys.
ExperimentConfig parse_config_text(const std::string& text);

ExperimentConfig load_config_file(const std::string& path);

// Sets one field by config key name, with the same syntax as the file.
// Unknown keys throw ConfigError.
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

// Reads one field back in the textual form serialize_config emits.
// Unknown keys throw ConfigError, as does forced_alpha when unset.
std::string get_field(const ExperimentConfig& config, const std::string& key);

// Canonical text form: fixed key order, full-precision numbers. Parsing it
// reproduces the config exactly.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace phefl

#endif  // PHEFL_CONFIG_HPP
