#include "phefl/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "phefl/errors.hpp"
#include "phefl/rng.hpp"

namespace phefl {

namespace {

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

int parse_int(const std::string& key, const std::string& value) {
    int out = 0;
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last || value.empty()) {
        throw ConfigError("key \"" + key + "\": expected an integer, got \"" + value + "\"");
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last || value.empty()) {
        throw ConfigError("key \"" + key + "\": expected an unsigned integer, got \"" + value +
                          "\"");
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double out = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("key \"" + key + "\": expected a number, got \"" + value + "\"");
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    if (trim(value).empty()) return out;  // explicit empty list: no hidden layers
    std::stringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) {
        out.push_back(parse_int(key, trim(item)));
    }
    return out;
}

// Shortest decimal form that parses back to the same double (what the JSON
// library emits for numbers).
std::string format_double(double value) {
    return nlohmann::json(value).dump();
}

std::string format_int_list(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(values[i]);
    }
    return out;
}

void set_field(ExperimentConfig& config, const std::string& key, const std::string& value) {
    if (key == "scenario") {
        config.scenario = scenario_from_string(value);
    } else if (key == "strategy") {
        config.strategy = strategy_from_string(value);
    } else if (key == "rounds") {
        config.rounds = parse_int(key, value);
    } else if (key == "epochs") {
        config.epochs = parse_int(key, value);
    } else if (key == "batch_size") {
        config.batch_size = parse_int(key, value);
    } else if (key == "learning_rate") {
        config.learning_rate = parse_double(key, value);
    } else if (key == "num_edges") {
        config.num_edges = parse_int(key, value);
    } else if (key == "devices_per_edge") {
        config.devices_per_edge = parse_int(key, value);
    } else if (key == "num_classes") {
        config.num_classes = parse_int(key, value);
    } else if (key == "samples_per_device") {
        config.samples_per_device = parse_int(key, value);
    } else if (key == "edge_aggregation_frequency") {
        config.edge_aggregation_frequency = parse_int(key, value);
    } else if (key == "test_mode") {
        config.test_mode = test_mode_from_string(value);
    } else if (key == "ptd_fraction") {
        config.ptd_fraction = parse_double(key, value);
    } else if (key == "seed") {
        config.seed = parse_u64(key, value);
    } else if (key == "forced_alpha") {
        config.forced_alpha = parse_double(key, value);
    } else if (key == "hidden_dims") {
        config.hidden_dims = parse_int_list(key, value);
    } else if (key == "data_source") {
        config.data_source = value;
    } else if (key == "synthetic_dim") {
        config.synthetic_dim = parse_int(key, value);
    } else if (key == "synthetic_separation") {
        config.synthetic_separation = parse_double(key, value);
    } else if (key == "synthetic_test_per_label") {
        config.synthetic_test_per_label = parse_int(key, value);
    } else if (key == "synthetic_train_per_label") {
        config.synthetic_train_per_label = parse_int(key, value);
    } else if (key == "idx_train_images") {
        config.idx_train_images = value;
    } else if (key == "idx_train_labels") {
        config.idx_train_labels = value;
    } else if (key == "idx_test_images") {
        config.idx_test_images = value;
    } else if (key == "idx_test_labels") {
        config.idx_test_labels = value;
    } else {
        throw ConfigError("unknown config key \"" + key + "\"");
    }
}

}  // namespace

Strategy strategy_from_string(std::string_view text) {
    if (text == "phe_fl") return Strategy::kPheFl;
    if (text == "edge_cloud") return Strategy::kEdgeCloud;
    if (text == "only_edge") return Strategy::kOnlyEdge;
    throw ConfigError("unknown strategy \"" + std::string(text) +
                      "\" (expected phe_fl, edge_cloud, or only_edge)");
}

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::kPheFl: return "phe_fl";
        case Strategy::kEdgeCloud: return "edge_cloud";
        case Strategy::kOnlyEdge: return "only_edge";
    }
    throw InvalidArgument("invalid Strategy value");
}

void ExperimentConfig::validate() const {
    if (rounds < 0) throw ConfigError("rounds must be >= 0, got " + std::to_string(rounds));
    if (epochs < 1) throw ConfigError("epochs must be >= 1, got " + std::to_string(epochs));
    if (batch_size < 1) {
        throw ConfigError("batch_size must be >= 1, got " + std::to_string(batch_size));
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning_rate must be positive and finite");
    }
    if (num_edges < 1) throw ConfigError("num_edges must be >= 1");
    if (devices_per_edge < 1) throw ConfigError("devices_per_edge must be >= 1");
    if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (samples_per_device < 1) throw ConfigError("samples_per_device must be >= 1");
    if (edge_aggregation_frequency < 1) {
        throw ConfigError("edge_aggregation_frequency must be >= 1, got " +
                          std::to_string(edge_aggregation_frequency));
    }
    if (!(ptd_fraction > 0.0 && ptd_fraction < 1.0)) {
        throw ConfigError("ptd_fraction must lie in (0, 1)");
    }
    if (strategy == Strategy::kPheFl && num_edges < 2) {
        throw ConfigError("strategy phe_fl needs at least 2 edges: leave-one-out cloud "
                          "aggregation is undefined for a single edge (use only_edge)");
    }
    if (forced_alpha.has_value()) {
        if (strategy != Strategy::kPheFl) {
            throw ConfigError("forced_alpha applies only to strategy phe_fl");
        }
        if (!(*forced_alpha >= 0.0 && *forced_alpha <= 1.0)) {
            throw ConfigError("forced_alpha must lie in [0, 1], got " +
                              std::to_string(*forced_alpha));
        }
    }
    for (const int width : hidden_dims) {
        if (width < 1) throw ConfigError("hidden_dims entries must be >= 1");
    }
    if (data_source != "synthetic" && data_source != "idx") {
        throw ConfigError("data_source must be \"synthetic\" or \"idx\", got \"" + data_source +
                          "\"");
    }
    if (data_source == "synthetic") {
        if (synthetic_dim < 1) throw ConfigError("synthetic_dim must be >= 1");
        if (!(synthetic_separation >= 0.0) || !std::isfinite(synthetic_separation)) {
            throw ConfigError("synthetic_separation must be finite and >= 0");
        }
        if (synthetic_test_per_label < 1) {
            throw ConfigError("synthetic_test_per_label must be >= 1");
        }
        if (synthetic_train_per_label < 0) {
            throw ConfigError("synthetic_train_per_label must be >= 0 (0 sizes the pool "
                              "automatically)");
        }
    }
    // Dry-run the scenario layout so shape errors surface at config time.
    assign_device_labels(scenario, num_edges, devices_per_edge, num_classes);
}

std::uint64_t ExperimentConfig::fingerprint() const {
    return derive_seed(0x9e3779b97f4a7c15ULL, serialize_config(*this));
}

ModelSpec ExperimentConfig::model_spec(int input_dim) const {
    ModelSpec spec;
    spec.input_dim = input_dim;
    spec.hidden_dims = hidden_dims;
    spec.num_classes = num_classes;
    spec.validate();
    return spec;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig config;
    std::set<std::string> seen;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected `key = value`, got \"" + stripped + "\"");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        }
        if (!seen.insert(key).second) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key \"" + key +
                              "\"");
        }
        if (key == "schema_version") {
            if (value != "1") {
                throw ConfigError("unsupported schema_version " + value + " (this tool reads 1)");
            }
            continue;
        }
        set_field(config, key, value);
    }
    if (!seen.count("schema_version")) {
        throw ConfigError("missing required key \"schema_version\" (add `schema_version = 1`)");
    }
    for (const char* required : {"scenario", "strategy", "rounds"}) {
        if (!seen.count(required)) {
            throw ConfigError("missing required key \"" + std::string(required) + "\"");
        }
    }
    return config;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
    if (key == "schema_version") {
        throw ConfigError("schema_version cannot be overridden");
    }
    set_field(config, key, value);
}

std::string get_field(const ExperimentConfig& config, const std::string& key) {
    // Scan the canonical serialization rather than keeping a second
    // field-by-field chain that could drift from it.
    std::istringstream stream(serialize_config(config));
    std::string line;
    while (std::getline(stream, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        if (trim(line.substr(0, eq)) == key) return trim(line.substr(eq + 1));
    }
    if (key == "forced_alpha") throw ConfigError("key \"forced_alpha\" is not set");
    throw ConfigError("unknown config key \"" + key + "\"");
}

std::string serialize_config(const ExperimentConfig& config) {
    std::ostringstream out;
    out << "schema_version = 1\n";
    out << "scenario = " << to_string(config.scenario) << "\n";
    out << "strategy = " << to_string(config.strategy) << "\n";
    out << "rounds = " << config.rounds << "\n";
    out << "epochs = " << config.epochs << "\n";
    out << "batch_size = " << config.batch_size << "\n";
    out << "learning_rate = " << format_double(config.learning_rate) << "\n";
    out << "num_edges = " << config.num_edges << "\n";
    out << "devices_per_edge = " << config.devices_per_edge << "\n";
    out << "num_classes = " << config.num_classes << "\n";
    out << "samples_per_device = " << config.samples_per_device << "\n";
    out << "edge_aggregation_frequency = " << config.edge_aggregation_frequency << "\n";
    out << "test_mode = " << to_string(config.test_mode) << "\n";
    out << "ptd_fraction = " << format_double(config.ptd_fraction) << "\n";
    out << "seed = " << config.seed << "\n";
    if (config.forced_alpha.has_value()) {
        out << "forced_alpha = " << format_double(*config.forced_alpha) << "\n";
    }
    out << "hidden_dims = " << format_int_list(config.hidden_dims) << "\n";
    out << "data_source = " << config.data_source << "\n";
    out << "synthetic_dim = " << config.synthetic_dim << "\n";
    out << "synthetic_separation = " << format_double(config.synthetic_separation) << "\n";
    out << "synthetic_test_per_label = " << config.synthetic_test_per_label << "\n";
    out << "synthetic_train_per_label = " << config.synthetic_train_per_label << "\n";
    out << "idx_train_images = " << config.idx_train_images << "\n";
    out << "idx_train_labels = " << config.idx_train_labels << "\n";
    out << "idx_test_images = " << config.idx_test_images << "\n";
    out << "idx_test_labels = " << config.idx_test_labels << "\n";
    return out.str();
}

}  // namespace phefl
