#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "phefl/errors.hpp"
#include "phefl/partition.hpp"
#include "phefl/rng.hpp"

using namespace phefl;

namespace {

// Pool with `per_label` examples of each class whose feature[0] is a unique
// identity tag, so without-replacement behaviour can be checked exactly.
Dataset tagged_pool(int num_classes, int per_label) {
    Dataset pool;
    pool.provenance = "synthetic";
    const int total = num_classes * per_label;
    int id = 0;
    for (int label = 0; label < num_classes; ++label) {
        for (int i = 0; i < per_label; ++i) {
            LabeledExample ex;
            ex.features = {static_cast<double>(++id) / (total + 1),
                           static_cast<double>(label) / num_classes};
            ex.label = label;
            pool.examples.push_back(std::move(ex));
        }
    }
    return pool;
}

std::vector<int> label_counts(const Dataset& d, int num_classes) {
    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (const auto& ex : d.examples) ++counts[static_cast<std::size_t>(ex.label)];
    return counts;
}

// Published label-percentage matrix for the imbalanced D3 test sets
// (rows = edges 1..10, columns = labels 0..9).
constexpr int kD3ImbalancedPercent[10][10] = {
    {30, 10, 10, 10, 10, 10, 10, 10, 0, 0},
    {0, 30, 10, 10, 10, 10, 10, 10, 10, 0},
    {0, 0, 30, 10, 10, 10, 10, 10, 10, 10},
    {10, 0, 0, 30, 10, 10, 10, 10, 10, 10},
    {10, 10, 0, 0, 30, 10, 10, 10, 10, 10},
    {10, 10, 10, 0, 0, 30, 10, 10, 10, 10},
    {10, 10, 10, 10, 0, 0, 30, 10, 10, 10},
    {10, 10, 10, 10, 10, 0, 0, 30, 10, 10},
    {10, 10, 10, 10, 10, 10, 0, 0, 30, 10},
    {10, 10, 10, 10, 10, 10, 10, 0, 0, 30},
};

// Nearest-centroid classifier, fit on one pool and scored on another.
// Independent of the library's model code.
double centroid_accuracy(const Dataset& train, const Dataset& test, int num_classes) {
    REQUIRE(!train.empty());
    REQUIRE(!test.empty());
    const std::size_t dim = train.examples[0].features.size();
    std::vector<std::vector<double>> centroids(
        static_cast<std::size_t>(num_classes), std::vector<double>(dim, 0.0));
    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (const auto& ex : train.examples) {
        auto& c = centroids[static_cast<std::size_t>(ex.label)];
        for (std::size_t j = 0; j < dim; ++j) c[j] += ex.features[j];
        ++counts[static_cast<std::size_t>(ex.label)];
    }
    for (int label = 0; label < num_classes; ++label) {
        REQUIRE(counts[static_cast<std::size_t>(label)] > 0);
        for (auto& x : centroids[static_cast<std::size_t>(label)]) {
            x /= counts[static_cast<std::size_t>(label)];
        }
    }
    int hits = 0;
    for (const auto& ex : test.examples) {
        int best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int label = 0; label < num_classes; ++label) {
            double dist = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double d = ex.features[j] - centroids[static_cast<std::size_t>(label)][j];
                dist += d * d;
            }
            if (dist < best_dist) {
                best_dist = dist;
                best = label;
            }
        }
        if (best == ex.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(test.examples.size());
}

void append_be32(std::string& out, std::uint32_t value) {
    out.push_back(static_cast<char>((value >> 24) & 0xff));
    out.push_back(static_cast<char>((value >> 16) & 0xff));
    out.push_back(static_cast<char>((value >> 8) & 0xff));
    out.push_back(static_cast<char>(value & 0xff));
}

std::filesystem::path write_temp(const std::string& name, const std::string& bytes) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    return path;
}

// A 3-image, 2x2-pixel IDX pair with distinctive pixel values.
struct IdxFixture {
    std::filesystem::path images;
    std::filesystem::path labels;
    std::vector<std::vector<unsigned char>> pixels{{0, 51, 102, 255},
                                                   {10, 20, 30, 40},
                                                   {200, 150, 100, 50}};
    std::vector<int> truth{0, 9, 3};

    IdxFixture() {
        std::string img;
        append_be32(img, 0x00000803u);
        append_be32(img, 3);
        append_be32(img, 2);
        append_be32(img, 2);
        for (const auto& image : pixels) {
            for (const unsigned char p : image) img.push_back(static_cast<char>(p));
        }
        std::string lab;
        append_be32(lab, 0x00000801u);
        append_be32(lab, 3);
        for (const int l : truth) lab.push_back(static_cast<char>(l));
        images = write_temp("phefl_test_images.idx", img);
        labels = write_temp("phefl_test_labels.idx", lab);
    }
};

}  // namespace

TEST_CASE("scenario and test-mode names round-trip") {
    for (const auto s : {Scenario::kD1, Scenario::kD2, Scenario::kD3, Scenario::kD4}) {
        CHECK(scenario_from_string(to_string(s)) == s);
    }
    CHECK(test_mode_from_string("imbalanced") == TestMode::kImbalanced);
    CHECK(test_mode_from_string("balanced") == TestMode::kBalanced);
    CHECK_THROWS_AS(scenario_from_string("D5"), ConfigError);
    CHECK_THROWS_AS(test_mode_from_string("mixed"), ConfigError);
}

TEST_CASE("assign_device_labels D3 edge 1 holds three predominant plus seven singles") {
    const auto labels = assign_device_labels(Scenario::kD3, 10, 10, 10);
    std::multiset<int> edge1(labels[0].begin(), labels[0].end());
    CHECK(edge1 == std::multiset<int>{0, 0, 0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("assign_device_labels D1 edge 4 gives every device label 3") {
    const auto labels = assign_device_labels(Scenario::kD1, 10, 10, 10);
    for (const int label : labels[3]) CHECK(label == 3);
}

TEST_CASE("assign_device_labels D4 places one device on every label") {
    const auto labels = assign_device_labels(Scenario::kD4, 10, 10, 10);
    for (int e = 0; e < 10; ++e) {
        std::set<int> distinct(labels[static_cast<std::size_t>(e)].begin(),
                               labels[static_cast<std::size_t>(e)].end());
        CHECK(distinct == std::set<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    }
}

TEST_CASE("assign_device_labels D2 uses five cyclic labels with two devices each") {
    const auto labels = assign_device_labels(Scenario::kD2, 10, 10, 10);
    for (int e = 0; e < 10; ++e) {
        std::map<int, int> counts;
        for (const int label : labels[static_cast<std::size_t>(e)]) ++counts[label];
        CHECK(counts.size() == 5);
        for (int j = 0; j < 5; ++j) {
            const int expected = (e + j) % 10;
            CHECK(counts[expected] == 2);
        }
    }
}

TEST_CASE("every scenario reproduces the published distinct-label counts and shares") {
    struct Row {
        Scenario scenario;
        int distinct;
        double share;
    };
    const Row rows[] = {{Scenario::kD1, 1, 1.0},
                        {Scenario::kD2, 5, 0.2},
                        {Scenario::kD3, 8, 0.3},
                        {Scenario::kD4, 10, 0.1}};
    for (const auto& row : rows) {
        const auto plan = make_partition_plan(row.scenario, 10, 10, 10, 50);
        for (int e = 0; e < 10; ++e) {
            const auto hist = plan.edge_label_histogram(e);
            CHECK(static_cast<int>(plan.labels_present(e).size()) == row.distinct);
            const int predominant = hist[static_cast<std::size_t>(e % 10)];
            CHECK(static_cast<double>(predominant) / 10.0 == doctest::Approx(row.share));
            // The predominant label must also be the (weak) mode of the edge.
            for (const int count : hist) CHECK(count <= predominant);
        }
    }
}

TEST_CASE("assign_device_labels rejects sizes that break a scenario") {
    CHECK_THROWS_AS(assign_device_labels(Scenario::kD2, 10, 7, 10), ConfigError);
    CHECK_THROWS_AS(assign_device_labels(Scenario::kD2, 10, 10, 4), ConfigError);
    CHECK_THROWS_AS(assign_device_labels(Scenario::kD3, 10, 8, 10), ConfigError);
    CHECK_THROWS_AS(assign_device_labels(Scenario::kD3, 10, 10, 7), ConfigError);
    CHECK_THROWS_AS(assign_device_labels(Scenario::kD4, 10, 10, 9), ConfigError);
    CHECK_THROWS_AS(assign_device_labels(Scenario::kD1, 0, 10, 10), ConfigError);
    CHECK_NOTHROW(assign_device_labels(Scenario::kD1, 3, 4, 10));
    CHECK_NOTHROW(assign_device_labels(Scenario::kD2, 10, 15, 10));
}

TEST_CASE("partition_train consumes the whole pool exactly once under D4") {
    const auto plan = make_partition_plan(Scenario::kD4, 10, 10, 10, 50);
    const auto pool = tagged_pool(10, 500);  // demand is exactly 10 devices x 50 per label
    const auto shards = partition_train(pool, plan, 42);

    std::set<double> seen;
    std::size_t total = 0;
    for (const auto& edge : shards) {
        for (const auto& shard : edge) {
            CHECK(shard.examples.size() == 50);
            for (const auto& ex : shard.examples) {
                seen.insert(ex.features[0]);
                ++total;
            }
        }
    }
    CHECK(total == 5000);
    CHECK(seen.size() == 5000);  // no example reused anywhere
}

TEST_CASE("partition_train shards hold only the planned label") {
    const auto plan = make_partition_plan(Scenario::kD3, 10, 10, 10, 20);
    const auto pool = tagged_pool(10, 2000);
    const auto shards = partition_train(pool, plan, 7);
    for (int e = 0; e < 10; ++e) {
        for (int d = 0; d < 10; ++d) {
            const auto& shard = shards[static_cast<std::size_t>(e)][static_cast<std::size_t>(d)];
            CHECK(shard.examples.size() == 20);
            for (const auto& ex : shard.examples) {
                CHECK(ex.label ==
                      plan.device_labels[static_cast<std::size_t>(e)][static_cast<std::size_t>(d)]);
            }
        }
    }
}

TEST_CASE("partition_train D3 edge aggregate carries 30% predominant label") {
    const auto plan = make_partition_plan(Scenario::kD3, 10, 10, 10, 50);
    const auto pool = tagged_pool(10, 2000);
    const auto shards = partition_train(pool, plan, 3);
    for (int e = 0; e < 10; ++e) {
        Dataset merged;
        for (const auto& shard : shards[static_cast<std::size_t>(e)]) {
            merged.examples.insert(merged.examples.end(), shard.examples.begin(),
                                   shard.examples.end());
        }
        const auto counts = label_counts(merged, 10);
        CHECK(merged.examples.size() == 500);
        CHECK(counts[static_cast<std::size_t>(e % 10)] == 150);  // 30% of 500
    }
}

TEST_CASE("partition_train reports the label and shortfall when the pool is thin") {
    const auto plan = make_partition_plan(Scenario::kD1, 10, 10, 10, 50);
    auto pool = tagged_pool(10, 500);
    // Remove one label-0 example: demand 500, supply 499.
    const auto it = std::find_if(pool.examples.begin(), pool.examples.end(),
                                 [](const LabeledExample& ex) { return ex.label == 0; });
    pool.examples.erase(it);
    try {
        partition_train(pool, plan, 1);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("label 0") != std::string::npos);
        CHECK(what.find("shortfall 1") != std::string::npos);
    }
}

TEST_CASE("partition_train is a deterministic function of the seed") {
    const auto plan = make_partition_plan(Scenario::kD2, 10, 10, 10, 10);
    const auto pool = tagged_pool(10, 500);
    const auto a = partition_train(pool, plan, 99);
    const auto b = partition_train(pool, plan, 99);
    const auto c = partition_train(pool, plan, 100);
    bool any_diff = false;
    for (int e = 0; e < 10; ++e) {
        for (int d = 0; d < 10; ++d) {
            const auto& sa = a[static_cast<std::size_t>(e)][static_cast<std::size_t>(d)];
            const auto& sb = b[static_cast<std::size_t>(e)][static_cast<std::size_t>(d)];
            const auto& sc = c[static_cast<std::size_t>(e)][static_cast<std::size_t>(d)];
            REQUIRE(sa.examples.size() == sb.examples.size());
            for (std::size_t i = 0; i < sa.examples.size(); ++i) {
                CHECK(sa.examples[i].features == sb.examples[i].features);
                if (sa.examples[i].features != sc.examples[i].features) any_diff = true;
            }
        }
    }
    CHECK(any_diff);  // a different seed reshuffles the draw
}

TEST_CASE("build_imbalanced_test reproduces the published D3 matrix") {
    const auto plan = make_partition_plan(Scenario::kD3, 10, 10, 10, 50);
    const auto ttd = build_imbalanced_test(tagged_pool(10, 100), plan);
    REQUIRE(ttd.size() == 10);
    for (int e = 0; e < 10; ++e) {
        const auto& set = ttd[static_cast<std::size_t>(e)];
        CHECK(set.examples.size() == 100);  // equal sizes across edges
        const auto counts = label_counts(set, 10);
        for (int label = 0; label < 10; ++label) {
            CHECK(counts[static_cast<std::size_t>(label)] ==
                  kD3ImbalancedPercent[e][label]);  // percent of 100
        }
        // No within-edge duplicates.
        std::set<double> ids;
        for (const auto& ex : set.examples) ids.insert(ex.features[0]);
        CHECK(ids.size() == set.examples.size());
    }
}

TEST_CASE("build_imbalanced_test under D1 mirrors the single training label") {
    const auto plan = make_partition_plan(Scenario::kD1, 10, 10, 10, 50);
    const auto ttd = build_imbalanced_test(tagged_pool(10, 100), plan);
    for (int e = 0; e < 10; ++e) {
        const auto counts = label_counts(ttd[static_cast<std::size_t>(e)], 10);
        for (int label = 0; label < 10; ++label) {
            CHECK(counts[static_cast<std::size_t>(label)] == (label == e ? 100 : 0));
        }
    }
}

TEST_CASE("build_imbalanced_test under D4 gives every edge the same composition") {
    const auto plan = make_partition_plan(Scenario::kD4, 10, 10, 10, 50);
    const auto ttd = build_imbalanced_test(tagged_pool(10, 100), plan);
    for (int e = 1; e < 10; ++e) {
        REQUIRE(ttd[static_cast<std::size_t>(e)].examples.size() ==
                ttd[0].examples.size());
        const auto a = label_counts(ttd[0], 10);
        const auto b = label_counts(ttd[static_cast<std::size_t>(e)], 10);
        CHECK(a == b);
        for (int label = 0; label < 10; ++label) CHECK(a[static_cast<std::size_t>(label)] == 10);
    }
}

TEST_CASE("build_imbalanced_test rejects unusable pools") {
    const auto plan = make_partition_plan(Scenario::kD3, 10, 10, 10, 50);
    auto uneven = tagged_pool(10, 100);
    uneven.examples.pop_back();  // label 9 now has 99 examples
    CHECK_THROWS_AS(build_imbalanced_test(uneven, plan), ConfigError);
    CHECK_THROWS_AS(build_imbalanced_test(tagged_pool(10, 95), plan), ConfigError);
    CHECK_THROWS_AS(build_imbalanced_test(Dataset{}, plan), ConfigError);
}

TEST_CASE("build_balanced_test matches the published D3 sizes and absences") {
    const auto plan = make_partition_plan(Scenario::kD3, 10, 10, 10, 50);
    const auto ttd = build_balanced_test(tagged_pool(10, 100), plan);
    for (int e = 0; e < 10; ++e) {
        const auto& set = ttd[static_cast<std::size_t>(e)];
        CHECK(set.examples.size() == 800);
        const auto counts = label_counts(set, 10);
        for (int label = 0; label < 10; ++label) {
            const int expected = kD3ImbalancedPercent[e][label] > 0 ? 100 : 0;
            CHECK(counts[static_cast<std::size_t>(label)] == expected);
        }
    }
    // Edge 3 of the published table: labels 0 and 1 absent, 2..9 in full.
    const auto edge3 = label_counts(ttd[2], 10);
    CHECK(edge3[0] == 0);
    CHECK(edge3[1] == 0);
    for (int label = 2; label < 10; ++label) CHECK(edge3[static_cast<std::size_t>(label)] == 100);
}

TEST_CASE("build_balanced_test under D1 keeps only the edge's label") {
    const auto plan = make_partition_plan(Scenario::kD1, 10, 10, 10, 50);
    const auto ttd = build_balanced_test(tagged_pool(10, 100), plan);
    for (int e = 0; e < 10; ++e) {
        CHECK(ttd[static_cast<std::size_t>(e)].examples.size() == 100);
        for (const auto& ex : ttd[static_cast<std::size_t>(e)].examples) CHECK(ex.label == e);
    }
}

TEST_CASE("build_balanced_test reports a label missing from the pool") {
    const auto plan = make_partition_plan(Scenario::kD1, 10, 10, 10, 50);
    auto pool = tagged_pool(10, 50);
    std::erase_if(pool.examples, [](const LabeledExample& ex) { return ex.label == 9; });
    try {
        build_balanced_test(pool, plan);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("label 9") != std::string::npos);
    }
}

TEST_CASE("split_ptd_etd takes exactly 15% of a balanced D3 set") {
    const auto plan = make_partition_plan(Scenario::kD3, 10, 10, 10, 50);
    const auto ttd = build_balanced_test(tagged_pool(10, 100), plan);
    const auto [ptd, etd] = split_ptd_etd(ttd[0], 0.15, 5);
    CHECK(ptd.examples.size() == 120);
    CHECK(etd.examples.size() == 680);
    const auto counts = label_counts(ptd, 10);
    for (int label = 0; label < 8; ++label) {
        CHECK(counts[static_cast<std::size_t>(label)] == 15);  // stratified: 15% of 100
    }
}

TEST_CASE("split_ptd_etd hits the rounded total with per-label shares within one") {
    const auto plan = make_partition_plan(Scenario::kD3, 10, 10, 10, 50);
    const auto ttd = build_imbalanced_test(tagged_pool(10, 100), plan);
    const auto [ptd, etd] = split_ptd_etd(ttd[0], 0.15, 11);
    CHECK(ptd.examples.size() == 15);  // round(0.15 * 100)
    CHECK(etd.examples.size() == 85);
    const auto ttd_counts = label_counts(ttd[0], 10);
    const auto ptd_counts = label_counts(ptd, 10);
    for (int label = 0; label < 10; ++label) {
        const double exact = 0.15 * ttd_counts[static_cast<std::size_t>(label)];
        CHECK(std::abs(ptd_counts[static_cast<std::size_t>(label)] - exact) <= 1.0);
    }
}

TEST_CASE("split_ptd_etd is disjoint, exhaustive, and deterministic") {
    const auto plan = make_partition_plan(Scenario::kD2, 10, 10, 10, 50);
    const auto ttd = build_imbalanced_test(tagged_pool(10, 200), plan);
    const auto [ptd1, etd1] = split_ptd_etd(ttd[4], 0.15, 21);
    const auto [ptd2, etd2] = split_ptd_etd(ttd[4], 0.15, 21);
    const auto [ptd3, etd3] = split_ptd_etd(ttd[4], 0.15, 22);

    std::set<double> ptd_ids, etd_ids;
    for (const auto& ex : ptd1.examples) ptd_ids.insert(ex.features[0]);
    for (const auto& ex : etd1.examples) etd_ids.insert(ex.features[0]);
    CHECK(ptd_ids.size() + etd_ids.size() == ttd[4].examples.size());
    for (const double id : ptd_ids) CHECK(etd_ids.count(id) == 0);

    REQUIRE(ptd1.examples.size() == ptd2.examples.size());
    for (std::size_t i = 0; i < ptd1.examples.size(); ++i) {
        CHECK(ptd1.examples[i].features == ptd2.examples[i].features);
    }
    bool differs = ptd1.examples.size() != ptd3.examples.size();
    for (std::size_t i = 0; !differs && i < ptd1.examples.size(); ++i) {
        differs = ptd1.examples[i].features != ptd3.examples[i].features;
    }
    CHECK(differs);
}

TEST_CASE("split_ptd_etd keeps at least one example for modest labels") {
    // Label 0 holds 7 examples (>= 1/0.15), label 1 the other 93.
    Dataset ttd;
    ttd.provenance = "slice";
    for (int i = 0; i < 100; ++i) {
        ttd.examples.push_back({{static_cast<double>(i) / 100.0}, i < 7 ? 0 : 1});
    }
    const auto [ptd, etd] = split_ptd_etd(ttd, 0.15, 9);
    CHECK(ptd.examples.size() == 15);
    const auto counts = label_counts(ptd, 2);
    CHECK(counts[0] >= 1);
}

TEST_CASE("split_ptd_etd rejects bad inputs") {
    CHECK_THROWS_AS(split_ptd_etd(Dataset{}, 0.15, 1), ConfigError);
    Dataset one;
    one.examples.push_back({{0.5}, 0});
    CHECK_THROWS_AS(split_ptd_etd(one, 0.0, 1), InvalidArgument);
    CHECK_THROWS_AS(split_ptd_etd(one, 1.0, 1), InvalidArgument);
}

TEST_CASE("build_edge_test_sets bundles per-edge splits consistently") {
    const auto plan = make_partition_plan(Scenario::kD3, 10, 10, 10, 50);
    const auto sets = build_edge_test_sets(tagged_pool(10, 100), plan,
                                           TestMode::kBalanced, 0.15, 17);
    REQUIRE(sets.ttd.size() == 10);
    REQUIRE(sets.ptd.size() == 10);
    REQUIRE(sets.etd.size() == 10);
    CHECK(sets.mode == TestMode::kBalanced);
    for (int e = 0; e < 10; ++e) {
        CHECK(sets.ptd[static_cast<std::size_t>(e)].examples.size() +
                  sets.etd[static_cast<std::size_t>(e)].examples.size() ==
              sets.ttd[static_cast<std::size_t>(e)].examples.size());
        CHECK(sets.ptd[static_cast<std::size_t>(e)].examples.size() == 120);
    }
    // Edges draw distinct split streams: edge 0 and edge 1 personalize on
    // different id sets even where their pools overlap.
    std::set<double> a, b;
    for (const auto& ex : sets.ptd[0].examples) a.insert(ex.features[0]);
    for (const auto& ex : sets.ptd[1].examples) b.insert(ex.features[0]);
    CHECK(a != b);
}

TEST_CASE("generate_synthetic honours per-label counts in both pools") {
    const auto pools = generate_synthetic(10, 30, 20, 16, 6.0, 123);
    CHECK(pools.train_pool.examples.size() == 300);
    CHECK(pools.test_pool.examples.size() == 200);
    CHECK(pools.train_pool.provenance == "synthetic");
    const auto train_counts = label_counts(pools.train_pool, 10);
    const auto test_counts = label_counts(pools.test_pool, 10);
    for (int label = 0; label < 10; ++label) {
        CHECK(train_counts[static_cast<std::size_t>(label)] == 30);
        CHECK(test_counts[static_cast<std::size_t>(label)] == 20);
    }
}

TEST_CASE("generate_synthetic keeps features inside the unit interval") {
    const auto pools = generate_synthetic(5, 40, 40, 8, 6.0, 7);
    for (const auto* pool : {&pools.train_pool, &pools.test_pool}) {
        for (const auto& ex : pool->examples) {
            CHECK(ex.features.size() == 8);
            for (const double x : ex.features) {
                CHECK(x >= 0.0);
                CHECK(x <= 1.0);
            }
        }
    }
}

TEST_CASE("generate_synthetic is deterministic in the seed") {
    const auto a = generate_synthetic(10, 10, 10, 16, 6.0, 55);
    const auto b = generate_synthetic(10, 10, 10, 16, 6.0, 55);
    const auto c = generate_synthetic(10, 10, 10, 16, 6.0, 56);
    REQUIRE(a.train_pool.examples.size() == b.train_pool.examples.size());
    bool identical = true;
    bool differs_from_c = false;
    for (std::size_t i = 0; i < a.train_pool.examples.size(); ++i) {
        if (a.train_pool.examples[i].features != b.train_pool.examples[i].features) {
            identical = false;
        }
        if (a.train_pool.examples[i].features != c.train_pool.examples[i].features) {
            differs_from_c = true;
        }
    }
    CHECK(identical);
    CHECK(differs_from_c);
}

TEST_CASE("generate_synthetic at zero separation is label-free noise") {
    const auto pools = generate_synthetic(10, 100, 150, 16, 0.0, 31);
    REQUIRE(pools.test_pool.examples.size() == 1500);
    const double acc = centroid_accuracy(pools.train_pool, pools.test_pool, 10);
    CHECK(acc > 0.05);
    CHECK(acc < 0.15);
}

TEST_CASE("generate_synthetic at separation six is centroid-separable") {
    const auto pools = generate_synthetic(10, 100, 100, 16, 6.0, 42);
    const double acc = centroid_accuracy(pools.train_pool, pools.test_pool, 10);
    CHECK(acc >= 0.99);
}

TEST_CASE("generate_synthetic tolerates fewer dimensions than classes") {
    const auto pools = generate_synthetic(10, 20, 20, 2, 6.0, 3);
    CHECK(pools.train_pool.examples.size() == 200);
    for (const auto& ex : pools.train_pool.examples) CHECK(ex.features.size() == 2);
}

TEST_CASE("generate_synthetic rejects bad shapes") {
    CHECK_THROWS_AS(generate_synthetic(0, 10, 10, 16, 6.0, 1), ConfigError);
    CHECK_THROWS_AS(generate_synthetic(10, 10, 10, 0, 6.0, 1), ConfigError);
    CHECK_THROWS_AS(generate_synthetic(10, -1, 10, 16, 6.0, 1), ConfigError);
    CHECK_THROWS_AS(generate_synthetic(10, 10, 10, 16, -2.0, 1), ConfigError);
}

TEST_CASE("load_idx round-trips a crafted file pair") {
    const IdxFixture fx;
    const auto data = load_idx(fx.images.string(), fx.labels.string());
    CHECK(data.provenance == "idx-file");
    REQUIRE(data.examples.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(data.examples[i].label == fx.truth[i]);
        REQUIRE(data.examples[i].features.size() == 4);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(data.examples[i].features[j] ==
                  doctest::Approx(fx.pixels[i][j] / 255.0).epsilon(1e-12));
        }
    }
    // Pixel 255 must map to exactly 1.0 and pixel 0 to exactly 0.0.
    CHECK(data.examples[0].features[0] == 0.0);
    CHECK(data.examples[0].features[3] == 1.0);
}

TEST_CASE("load_idx names the offset of a bad magic number") {
    const IdxFixture fx;
    std::string img;
    append_be32(img, 0x00000802u);  // wrong type code
    append_be32(img, 0);
    append_be32(img, 2);
    append_be32(img, 2);
    const auto bad = write_temp("phefl_test_badmagic.idx", img);
    try {
        load_idx(bad.string(), fx.labels.string());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string what = e.what();
        CHECK(what.find("magic") != std::string::npos);
        CHECK(what.find("offset 0") != std::string::npos);
    }
}

TEST_CASE("load_idx names the offset of a truncation") {
    const IdxFixture fx;
    std::string img;
    append_be32(img, 0x00000803u);
    append_be32(img, 3);
    append_be32(img, 2);
    append_be32(img, 2);
    img += std::string(7, '\x01');  // needs 12 payload bytes, has 7
    const auto bad = write_temp("phefl_test_short.idx", img);
    try {
        load_idx(bad.string(), fx.labels.string());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string what = e.what();
        CHECK(what.find("end of file") != std::string::npos);
        CHECK(what.find("offset 23") != std::string::npos);  // 16-byte header + 7 read
    }
}

TEST_CASE("load_idx rejects a count mismatch between the two files") {
    const IdxFixture fx;
    std::string lab;
    append_be32(lab, 0x00000801u);
    append_be32(lab, 2);  // images file says 3
    lab.push_back('\x00');
    lab.push_back('\x01');
    const auto bad = write_temp("phefl_test_count.idx", lab);
    try {
        load_idx(fx.images.string(), bad.string());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("does not match") != std::string::npos);
    }
}

TEST_CASE("load_idx rejects missing files and zero dimensions") {
    const IdxFixture fx;
    CHECK_THROWS_AS(load_idx("/nonexistent/images.idx", fx.labels.string()), DataError);
    std::string img;
    append_be32(img, 0x00000803u);
    append_be32(img, 1);
    append_be32(img, 0);
    append_be32(img, 4);
    const auto bad = write_temp("phefl_test_zerodim.idx", img);
    CHECK_THROWS_AS(load_idx(bad.string(), fx.labels.string()), DataError);
}

TEST_CASE("take_per_label levels a pool in order and reports shortfalls") {
    Dataset pool;
    for (int i = 0; i < 12; ++i) {
        pool.examples.push_back({{static_cast<double>(i)}, i % 2});
    }
    const auto levelled = take_per_label(pool, 2, 3);
    CHECK(levelled.examples.size() == 6);
    const auto counts = label_counts(levelled, 2);
    CHECK(counts[0] == 3);
    CHECK(counts[1] == 3);
    // First three of each label in pool order: even ids 0,2,4 then odd 1,3,5.
    CHECK(levelled.examples[0].features[0] == 0.0);
    CHECK(levelled.examples[2].features[0] == 4.0);
    CHECK(levelled.examples[3].features[0] == 1.0);
    CHECK_THROWS_AS(take_per_label(pool, 2, 7), ConfigError);
}
