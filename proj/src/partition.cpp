#include "phefl/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "phefl/errors.hpp"
#include "phefl/rng.hpp"

namespace phefl {

namespace {

// Pool indices grouped by class label, preserving pool order within a label.
std::vector<std::vector<std::size_t>> indices_by_label(const Dataset& pool, int num_classes) {
    std::vector<std::vector<std::size_t>> by_label(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < pool.examples.size(); ++i) {
        const int label = pool.examples[i].label;
        if (label < 0 || label >= num_classes) {
            throw DataError("pool example " + std::to_string(i) + " has label " +
                            std::to_string(label) + ", outside [0, " +
                            std::to_string(num_classes) + ")");
        }
        by_label[static_cast<std::size_t>(label)].push_back(i);
    }
    return by_label;
}

void check_plan_sizes(int num_edges, int devices_per_edge, int num_classes) {
    if (num_edges < 1 || devices_per_edge < 1 || num_classes < 1) {
        throw ConfigError("partition sizes must be positive (num_edges=" +
                          std::to_string(num_edges) + ", devices_per_edge=" +
                          std::to_string(devices_per_edge) + ", num_classes=" +
                          std::to_string(num_classes) + ")");
    }
}

Dataset slice(const Dataset& pool, const std::vector<std::size_t>& picks) {
    Dataset out;
    out.provenance = "slice";
    out.examples.reserve(picks.size());
    for (const std::size_t i : picks) out.examples.push_back(pool.examples[i]);
    return out;
}

}  // namespace

Scenario scenario_from_string(std::string_view text) {
    if (text == "D1") return Scenario::kD1;
    if (text == "D2") return Scenario::kD2;
    if (text == "D3") return Scenario::kD3;
    if (text == "D4") return Scenario::kD4;
    throw ConfigError("unknown scenario \"" + std::string(text) +
                      "\" (expected one of D1, D2, D3, D4)");
}

std::string_view to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::kD1: return "D1";
        case Scenario::kD2: return "D2";
        case Scenario::kD3: return "D3";
        case Scenario::kD4: return "D4";
    }
    throw InvalidArgument("invalid Scenario value");
}

TestMode test_mode_from_string(std::string_view text) {
    if (text == "imbalanced") return TestMode::kImbalanced;
    if (text == "balanced") return TestMode::kBalanced;
    throw ConfigError("unknown test mode \"" + std::string(text) +
                      "\" (expected \"imbalanced\" or \"balanced\")");
}

std::string_view to_string(TestMode mode) {
    switch (mode) {
        case TestMode::kImbalanced: return "imbalanced";
        case TestMode::kBalanced: return "balanced";
    }
    throw InvalidArgument("invalid TestMode value");
}

std::vector<int> PartitionPlan::edge_label_histogram(int edge) const {
    if (edge < 0 || edge >= num_edges) {
        throw InvalidArgument("edge index " + std::to_string(edge) + " outside [0, " +
                              std::to_string(num_edges) + ")");
    }
    std::vector<int> hist(static_cast<std::size_t>(num_classes), 0);
    for (const int label : device_labels[static_cast<std::size_t>(edge)]) {
        ++hist[static_cast<std::size_t>(label)];
    }
    return hist;
}

std::vector<int> PartitionPlan::labels_present(int edge) const {
    const auto hist = edge_label_histogram(edge);
    std::vector<int> present;
    for (int label = 0; label < num_classes; ++label) {
        if (hist[static_cast<std::size_t>(label)] > 0) present.push_back(label);
    }
    return present;
}

std::vector<std::vector<int>> assign_device_labels(Scenario scenario, int num_edges,
                                                   int devices_per_edge, int num_classes) {
    check_plan_sizes(num_edges, devices_per_edge, num_classes);
    switch (scenario) {
        case Scenario::kD1:
            break;  // any sizes: one label per edge
        case Scenario::kD2:
            if (devices_per_edge % 5 != 0) {
                throw ConfigError("scenario D2 needs devices_per_edge divisible by 5 "
                                  "(5 labels with equal device counts), got " +
                                  std::to_string(devices_per_edge));
            }
            if (num_classes < 5) {
                throw ConfigError("scenario D2 needs at least 5 classes, got " +
                                  std::to_string(num_classes));
            }
            break;
        case Scenario::kD3:
            if (devices_per_edge != 10) {
                throw ConfigError("scenario D3 needs exactly 10 devices per edge "
                                  "(3 on the predominant label + 7 singletons), got " +
                                  std::to_string(devices_per_edge));
            }
            if (num_classes < 8) {
                throw ConfigError("scenario D3 needs at least 8 classes, got " +
                                  std::to_string(num_classes));
            }
            break;
        case Scenario::kD4:
            if (devices_per_edge != num_classes) {
                throw ConfigError("scenario D4 needs devices_per_edge == num_classes "
                                  "(one device per label), got " +
                                  std::to_string(devices_per_edge) + " devices and " +
                                  std::to_string(num_classes) + " classes");
            }
            break;
    }

    std::vector<std::vector<int>> labels(static_cast<std::size_t>(num_edges));
    for (int e = 0; e < num_edges; ++e) {
        const int base = e % num_classes;  // predominant label of 1-indexed edge e+1
        auto& row = labels[static_cast<std::size_t>(e)];
        row.reserve(static_cast<std::size_t>(devices_per_edge));
        switch (scenario) {
            case Scenario::kD1:
                row.assign(static_cast<std::size_t>(devices_per_edge), base);
                break;
            case Scenario::kD2: {
                const int per_label = devices_per_edge / 5;
                for (int j = 0; j < 5; ++j) {
                    for (int r = 0; r < per_label; ++r) row.push_back((base + j) % num_classes);
                }
                break;
            }
            case Scenario::kD3:
                row.assign(3, base);
                for (int j = 1; j <= 7; ++j) row.push_back((base + j) % num_classes);
                break;
            case Scenario::kD4:
                for (int d = 0; d < devices_per_edge; ++d) row.push_back((base + d) % num_classes);
                break;
        }
    }
    return labels;
}

PartitionPlan make_partition_plan(Scenario scenario, int num_edges, int devices_per_edge,
                                  int num_classes, int samples_per_device) {
    if (samples_per_device < 1) {
        throw ConfigError("samples_per_device must be positive, got " +
                          std::to_string(samples_per_device));
    }
    PartitionPlan plan;
    plan.scenario = scenario;
    plan.num_edges = num_edges;
    plan.devices_per_edge = devices_per_edge;
    plan.num_classes = num_classes;
    plan.samples_per_device = samples_per_device;
    plan.device_labels = assign_device_labels(scenario, num_edges, devices_per_edge, num_classes);
    return plan;
}

std::vector<std::vector<Dataset>> partition_train(const Dataset& train_pool,
                                                  const PartitionPlan& plan, std::uint64_t seed) {
    auto by_label = indices_by_label(train_pool, plan.num_classes);

    // Check the pool against per-label demand before drawing anything.
    std::vector<std::size_t> demand(static_cast<std::size_t>(plan.num_classes), 0);
    for (const auto& row : plan.device_labels) {
        for (const int label : row) {
            demand[static_cast<std::size_t>(label)] +=
                static_cast<std::size_t>(plan.samples_per_device);
        }
    }
    for (int label = 0; label < plan.num_classes; ++label) {
        const std::size_t have = by_label[static_cast<std::size_t>(label)].size();
        const std::size_t need = demand[static_cast<std::size_t>(label)];
        if (have < need) {
            throw ConfigError("label " + std::to_string(label) + ": need " +
                              std::to_string(need) + " training examples, pool has " +
                              std::to_string(have) + " (shortfall " +
                              std::to_string(need - have) + ")");
        }
    }

    // Shuffle each label's candidates once, then hand out consecutive runs in
    // (edge, device) order. Each pool example is used at most once.
    for (int label = 0; label < plan.num_classes; ++label) {
        Rng rng(derive_seed(seed, "train-partition", {static_cast<std::uint64_t>(label)}));
        rng.shuffle(by_label[static_cast<std::size_t>(label)]);
    }
    std::vector<std::size_t> cursor(static_cast<std::size_t>(plan.num_classes), 0);

    std::vector<std::vector<Dataset>> shards(static_cast<std::size_t>(plan.num_edges));
    for (int e = 0; e < plan.num_edges; ++e) {
        auto& edge_shards = shards[static_cast<std::size_t>(e)];
        edge_shards.reserve(static_cast<std::size_t>(plan.devices_per_edge));
        for (int d = 0; d < plan.devices_per_edge; ++d) {
            const auto label =
                static_cast<std::size_t>(plan.device_labels[static_cast<std::size_t>(e)]
                                                           [static_cast<std::size_t>(d)]);
            std::vector<std::size_t> picks(
                by_label[label].begin() + static_cast<std::ptrdiff_t>(cursor[label]),
                by_label[label].begin() +
                    static_cast<std::ptrdiff_t>(cursor[label] +
                                                static_cast<std::size_t>(plan.samples_per_device)));
            cursor[label] += static_cast<std::size_t>(plan.samples_per_device);
            edge_shards.push_back(slice(train_pool, picks));
        }
    }
    return shards;
}

std::vector<Dataset> build_imbalanced_test(const Dataset& test_pool, const PartitionPlan& plan) {
    const auto by_label = indices_by_label(test_pool, plan.num_classes);

    // The mirrored proportions are exact only when every label has the same
    // pool size and devices_per_edge divides it.
    const std::size_t per_label = by_label.empty() ? 0 : by_label[0].size();
    for (int label = 1; label < plan.num_classes; ++label) {
        if (by_label[static_cast<std::size_t>(label)].size() != per_label) {
            throw ConfigError("imbalanced test set needs an equal number of pool examples "
                              "per label; label 0 has " + std::to_string(per_label) +
                              ", label " + std::to_string(label) + " has " +
                              std::to_string(by_label[static_cast<std::size_t>(label)].size()));
        }
    }
    if (per_label == 0) {
        throw ConfigError("imbalanced test set: test pool is empty");
    }
    if (per_label % static_cast<std::size_t>(plan.devices_per_edge) != 0) {
        throw ConfigError("imbalanced test set: per-label pool size " +
                          std::to_string(per_label) + " is not divisible by devices_per_edge " +
                          std::to_string(plan.devices_per_edge) +
                          ", so training proportions cannot be mirrored exactly");
    }
    const std::size_t unit = per_label / static_cast<std::size_t>(plan.devices_per_edge);

    std::vector<Dataset> ttd;
    ttd.reserve(static_cast<std::size_t>(plan.num_edges));
    for (int e = 0; e < plan.num_edges; ++e) {
        const auto hist = plan.edge_label_histogram(e);
        std::vector<std::size_t> picks;
        picks.reserve(per_label);
        for (int label = 0; label < plan.num_classes; ++label) {
            const std::size_t count = static_cast<std::size_t>(hist[static_cast<std::size_t>(
                                          label)]) * unit;
            const auto& candidates = by_label[static_cast<std::size_t>(label)];
            picks.insert(picks.end(), candidates.begin(),
                         candidates.begin() + static_cast<std::ptrdiff_t>(count));
        }
        ttd.push_back(slice(test_pool, picks));
    }
    return ttd;
}

std::vector<Dataset> build_balanced_test(const Dataset& test_pool, const PartitionPlan& plan) {
    const auto by_label = indices_by_label(test_pool, plan.num_classes);

    std::vector<Dataset> ttd;
    ttd.reserve(static_cast<std::size_t>(plan.num_edges));
    for (int e = 0; e < plan.num_edges; ++e) {
        std::vector<std::size_t> picks;
        for (const int label : plan.labels_present(e)) {
            const auto& candidates = by_label[static_cast<std::size_t>(label)];
            if (candidates.empty()) {
                throw ConfigError("balanced test set: pool has no examples of label " +
                                  std::to_string(label) + " needed by edge " + std::to_string(e));
            }
            picks.insert(picks.end(), candidates.begin(), candidates.end());
        }
        ttd.push_back(slice(test_pool, picks));
    }
    return ttd;
}

std::pair<Dataset, Dataset> split_ptd_etd(const Dataset& ttd, double fraction,
                                          std::uint64_t seed) {
    if (ttd.empty()) {
        throw ConfigError("cannot split an empty test set");
    }
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw InvalidArgument("split fraction must lie in (0, 1), got " +
                              std::to_string(fraction));
    }

    // Group by label. Labels can be any ints here; an ordered map keeps the
    // apportionment order independent of example order.
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < ttd.examples.size(); ++i) {
        by_label[ttd.examples[i].label].push_back(i);
    }

    // Largest-remainder apportionment: the total hits round(fraction * n)
    // exactly while each label stays within one example of its exact share.
    const auto total_target = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(ttd.examples.size())));
    struct Share {
        int label;
        std::size_t base;
        double remainder;
    };
    std::vector<Share> shares;
    shares.reserve(by_label.size());
    std::size_t assigned = 0;
    for (const auto& [label, indices] : by_label) {
        const double exact = fraction * static_cast<double>(indices.size());
        const auto base = static_cast<std::size_t>(exact);
        shares.push_back({label, base, exact - static_cast<double>(base)});
        assigned += base;
    }
    std::size_t leftover = total_target > assigned ? total_target - assigned : 0;
    std::stable_sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
        if (a.remainder != b.remainder) return a.remainder > b.remainder;
        return a.label < b.label;
    });
    std::map<int, std::size_t> take;
    for (const auto& share : shares) {
        std::size_t count = share.base;
        if (leftover > 0) {
            ++count;
            --leftover;
        }
        take[share.label] = count;
    }

    // Within each label, choose the personalization examples at random.
    std::vector<char> in_ptd(ttd.examples.size(), 0);
    for (auto& [label, indices] : by_label) {
        Rng rng(derive_seed(seed, "ptd-split", {static_cast<std::uint64_t>(label)}));
        rng.shuffle(indices);
        for (std::size_t i = 0; i < take[label]; ++i) in_ptd[indices[i]] = 1;
    }

    std::pair<Dataset, Dataset> out;
    out.first.provenance = "slice";
    out.second.provenance = "slice";
    for (std::size_t i = 0; i < ttd.examples.size(); ++i) {
        (in_ptd[i] ? out.first : out.second).examples.push_back(ttd.examples[i]);
    }
    return out;
}

EdgeTestSets build_edge_test_sets(const Dataset& test_pool, const PartitionPlan& plan,
                                  TestMode mode, double ptd_fraction, std::uint64_t seed) {
    EdgeTestSets sets;
    sets.mode = mode;
    sets.ttd = mode == TestMode::kImbalanced ? build_imbalanced_test(test_pool, plan)
                                             : build_balanced_test(test_pool, plan);
    sets.ptd.reserve(sets.ttd.size());
    sets.etd.reserve(sets.ttd.size());
    for (std::size_t e = 0; e < sets.ttd.size(); ++e) {
        auto [ptd, etd] = split_ptd_etd(sets.ttd[e], ptd_fraction,
                                        derive_seed(seed, "edge-test-split", {e}));
        sets.ptd.push_back(std::move(ptd));
        sets.etd.push_back(std::move(etd));
    }
    return sets;
}

namespace {

// Class centre directions: orthonormal when the feature space has room for
// them (guaranteeing pairwise distance separation*sqrt(2)), plain unit
// vectors otherwise.
std::vector<std::vector<double>> centre_directions(int num_classes, int dim, Rng& rng) {
    std::vector<std::vector<double>> dirs;
    dirs.reserve(static_cast<std::size_t>(num_classes));
    const bool orthogonalise = dim >= num_classes;
    while (dirs.size() < static_cast<std::size_t>(num_classes)) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (auto& x : v) x = rng.next_gaussian();
        if (orthogonalise) {
            for (const auto& u : dirs) {
                double dot = 0.0;
                for (int j = 0; j < dim; ++j) dot += v[static_cast<std::size_t>(j)] *
                                                     u[static_cast<std::size_t>(j)];
                for (int j = 0; j < dim; ++j) v[static_cast<std::size_t>(j)] -=
                    dot * u[static_cast<std::size_t>(j)];
            }
        }
        double norm = 0.0;
        for (const double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-6) continue;  // degenerate draw; take a fresh one
        for (auto& x : v) x /= norm;
        dirs.push_back(std::move(v));
    }
    return dirs;
}

Dataset synthetic_pool(const std::vector<std::vector<double>>& centres, int per_label, int dim,
                       double half_range, std::uint64_t seed, std::string_view role) {
    Dataset pool;
    pool.provenance = "synthetic";
    pool.examples.reserve(static_cast<std::size_t>(per_label) * centres.size());
    for (std::size_t c = 0; c < centres.size(); ++c) {
        Rng rng(derive_seed(seed, role, {c}));
        for (int i = 0; i < per_label; ++i) {
            LabeledExample ex;
            ex.label = static_cast<int>(c);
            ex.features.resize(static_cast<std::size_t>(dim));
            for (int j = 0; j < dim; ++j) {
                const double raw = centres[c][static_cast<std::size_t>(j)] + rng.next_gaussian();
                ex.features[static_cast<std::size_t>(j)] =
                    std::clamp(0.5 + raw / (2.0 * half_range), 0.0, 1.0);
            }
            pool.examples.push_back(std::move(ex));
        }
    }
    return pool;
}

}  // namespace

SyntheticPools generate_synthetic(int num_classes, int train_per_label, int test_per_label,
                                  int dim, double separation, std::uint64_t seed) {
    if (num_classes < 1 || dim < 1) {
        throw ConfigError("synthetic data needs num_classes >= 1 and dim >= 1, got " +
                          std::to_string(num_classes) + " and " + std::to_string(dim));
    }
    if (train_per_label < 0 || test_per_label < 0) {
        throw ConfigError("synthetic per-label counts must be non-negative");
    }
    if (!(separation >= 0.0) || !std::isfinite(separation)) {
        throw ConfigError("synthetic separation must be finite and non-negative, got " +
                          std::to_string(separation));
    }

    std::vector<std::vector<double>> centres;
    if (separation == 0.0) {
        centres.assign(static_cast<std::size_t>(num_classes),
                       std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    } else {
        Rng rng(derive_seed(seed, "synthetic-centres"));
        centres = centre_directions(num_classes, dim, rng);
        for (auto& c : centres) {
            for (auto& x : c) x *= separation;
        }
    }

    // Affine map into [0,1]: centre coordinates span at most +-separation and
    // the unit noise rarely exceeds four standard deviations.
    const double half_range = separation + 4.0;
    SyntheticPools pools;
    pools.train_pool =
        synthetic_pool(centres, train_per_label, dim, half_range, seed, "synthetic-train");
    pools.test_pool =
        synthetic_pool(centres, test_per_label, dim, half_range, seed, "synthetic-test");
    return pools;
}

namespace {

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path, std::uint64_t& offset) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (in.gcount() != 4) {
        throw DataError(path + ": unexpected end of file at offset " + std::to_string(offset) +
                        " (wanted 4 bytes, got " + std::to_string(in.gcount()) + ")");
    }
    offset += 4;
    return (static_cast<std::uint32_t>(bytes[0]) << 24) |
           (static_cast<std::uint32_t>(bytes[1]) << 16) |
           (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

std::vector<unsigned char> read_payload(std::ifstream& in, const std::string& path,
                                        std::uint64_t& offset, std::size_t count) {
    std::vector<unsigned char> payload(count);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got != count) {
        throw DataError(path + ": unexpected end of file at offset " +
                        std::to_string(offset + got) + " (payload needs " +
                        std::to_string(count) + " bytes, got " + std::to_string(got) + ")");
    }
    offset += count;
    return payload;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw DataError("cannot open image file " + images_path);
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw DataError("cannot open label file " + labels_path);

    std::uint64_t img_off = 0;
    const std::uint32_t img_magic = read_be_u32(images, images_path, img_off);
    if (img_magic != 0x00000803u) {
        char text[64];
        std::snprintf(text, sizeof(text), "0x%08x", img_magic);
        throw DataError(images_path + ": bad image magic " + text +
                        " at offset 0 (expected 0x00000803)");
    }
    const std::uint32_t img_count = read_be_u32(images, images_path, img_off);
    const std::uint32_t rows = read_be_u32(images, images_path, img_off);
    const std::uint32_t cols = read_be_u32(images, images_path, img_off);
    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    if (dim == 0) {
        throw DataError(images_path + ": zero image dimensions (" + std::to_string(rows) + "x" +
                        std::to_string(cols) + ") at offset 8");
    }
    const auto pixels = read_payload(images, images_path, img_off, img_count * dim);

    std::uint64_t lab_off = 0;
    const std::uint32_t lab_magic = read_be_u32(labels, labels_path, lab_off);
    if (lab_magic != 0x00000801u) {
        char text[64];
        std::snprintf(text, sizeof(text), "0x%08x", lab_magic);
        throw DataError(labels_path + ": bad label magic " + text +
                        " at offset 0 (expected 0x00000801)");
    }
    const std::uint32_t lab_count = read_be_u32(labels, labels_path, lab_off);
    if (lab_count != img_count) {
        throw DataError(labels_path + ": label count " + std::to_string(lab_count) +
                        " at offset 4 does not match image count " + std::to_string(img_count));
    }
    const auto raw_labels = read_payload(labels, labels_path, lab_off, lab_count);

    Dataset out;
    out.provenance = "idx-file";
    out.examples.resize(img_count);
    for (std::size_t i = 0; i < img_count; ++i) {
        auto& ex = out.examples[i];
        ex.label = static_cast<int>(raw_labels[i]);
        ex.features.resize(dim);
        const std::size_t base = i * dim;
        for (std::size_t j = 0; j < dim; ++j) {
            ex.features[j] = static_cast<double>(pixels[base + j]) / 255.0;
        }
    }
    return out;
}

Dataset take_per_label(const Dataset& pool, int num_classes, int per_label) {
    if (per_label < 1) {
        throw ConfigError("take_per_label needs a positive per-label count, got " +
                          std::to_string(per_label));
    }
    const auto by_label = indices_by_label(pool, num_classes);
    std::vector<std::size_t> picks;
    picks.reserve(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(per_label));
    for (int label = 0; label < num_classes; ++label) {
        const auto& candidates = by_label[static_cast<std::size_t>(label)];
        if (candidates.size() < static_cast<std::size_t>(per_label)) {
            throw ConfigError("label " + std::to_string(label) + ": need " +
                              std::to_string(per_label) + " examples, pool has " +
                              std::to_string(candidates.size()));
        }
        picks.insert(picks.end(), candidates.begin(),
                     candidates.begin() + static_cast<std::ptrdiff_t>(per_label));
    }
    return slice(pool, picks);
}

}  // namespace phefl
