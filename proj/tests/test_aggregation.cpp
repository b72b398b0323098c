#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "phefl/aggregation.hpp"
#include "phefl/errors.hpp"
#include "phefl/rng.hpp"
#include "test_helpers.hpp"

using namespace phefl;

namespace {

// One-coordinate model with an arbitrary (but shared) fingerprint, for
// pencil-and-paper arithmetic cases.
WeightedModel scalar_model(double value, std::int64_t weight, std::uint64_t fingerprint = 99) {
    WeightedModel m;
    m.params.values = {value};
    m.params.spec_fingerprint = fingerprint;
    m.weight = weight;
    return m;
}

WeightedModel random_model(const ModelSpec& spec, std::uint64_t seed, std::int64_t weight) {
    WeightedModel m;
    m.params = phefl::test::random_params(spec, seed);
    m.weight = weight;
    return m;
}

bool bit_equal(const ParameterVector& a, const ParameterVector& b) {
    return a.spec_fingerprint == b.spec_fingerprint && a.values.size() == b.values.size() &&
           std::memcmp(a.values.data(), b.values.data(),
                       a.values.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("weighted_average of identical models is exactly that model") {
    const ModelSpec spec{4, {8}, 3};
    const auto pv = phefl::test::random_params(spec, 17);
    std::vector<WeightedModel> models;
    for (std::int64_t w : {1, 3, 7}) models.push_back({pv, w});
    const auto avg = weighted_average(models);
    CHECK(bit_equal(avg, pv));
}

TEST_CASE("weighted_average matches scalar arithmetic") {
    const auto avg = weighted_average({scalar_model(0.0, 1), scalar_model(4.0, 3)});
    CHECK(avg.values[0] == 3.0);  // (1*0 + 3*4) / 4
}

TEST_CASE("weighted_average stays inside the coordinate-wise envelope") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(6));
        const int dim = 1 + static_cast<int>(rng.next_below(12));
        std::vector<WeightedModel> models;
        for (int c = 0; c < n; ++c) {
            WeightedModel m;
            m.params.spec_fingerprint = 7;
            for (int i = 0; i < dim; ++i) m.params.values.push_back(rng.next_uniform(-5, 5));
            m.weight = 1 + static_cast<std::int64_t>(rng.next_below(50));
            models.push_back(std::move(m));
        }
        const auto avg = weighted_average(models);
        for (int i = 0; i < dim; ++i) {
            double lo = models[0].params.values[static_cast<std::size_t>(i)];
            double hi = lo;
            for (const auto& m : models) {
                lo = std::min(lo, m.params.values[static_cast<std::size_t>(i)]);
                hi = std::max(hi, m.params.values[static_cast<std::size_t>(i)]);
            }
            const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
            CHECK(avg.values[static_cast<std::size_t>(i)] >= lo - slack);
            CHECK(avg.values[static_cast<std::size_t>(i)] <= hi + slack);
        }
    }
}

TEST_CASE("weighted_average rejects malformed input") {
    CHECK_THROWS_AS(weighted_average({}), AggregationError);
    CHECK_THROWS_AS(weighted_average({scalar_model(1.0, 0)}), AggregationError);
    CHECK_THROWS_AS(weighted_average({scalar_model(1.0, -3)}), AggregationError);
    CHECK_THROWS_AS(weighted_average({scalar_model(1.0, 1, 5), scalar_model(2.0, 1, 6)}),
                    AggregationError);
    WeightedModel wrong_len = scalar_model(1.0, 1);
    wrong_len.params.values.push_back(2.0);
    CHECK_THROWS_AS(weighted_average({scalar_model(1.0, 1), wrong_len}), AggregationError);
}

TEST_CASE("weighted_average is bit-deterministic across repeated calls") {
    const ModelSpec spec{6, {12}, 4};
    std::vector<WeightedModel> models;
    for (int c = 0; c < 5; ++c) {
        models.push_back(random_model(spec, 100 + static_cast<std::uint64_t>(c), 2 * c + 1));
    }
    CHECK(bit_equal(weighted_average(models), weighted_average(models)));
}

TEST_CASE("cloud_aggregate_per_edge leaves each edge out (equal weights)") {
    const auto cams = cloud_aggregate_per_edge(
        {scalar_model(1.0, 1), scalar_model(2.0, 1), scalar_model(3.0, 1)});
    REQUIRE(cams.size() == 3);
    CHECK(cams[0].values[0] == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(cams[1].values[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(cams[2].values[0] == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("cloud_aggregate_per_edge with two edges swaps them") {
    const ModelSpec spec{3, {5}, 2};
    const auto a = random_model(spec, 1, 10);
    const auto b = random_model(spec, 2, 20);
    const auto cams = cloud_aggregate_per_edge({a, b});
    REQUIRE(cams.size() == 2);
    CHECK(bit_equal(cams[0], b.params));
    CHECK(bit_equal(cams[1], a.params));
}

TEST_CASE("cloud_aggregate_per_edge respects unequal weights") {
    const auto cams = cloud_aggregate_per_edge(
        {scalar_model(0.0, 1), scalar_model(3.0, 1), scalar_model(6.0, 2)});
    CHECK(cams[0].values[0] == doctest::Approx(5.0).epsilon(1e-15));  // (1*3 + 2*6) / 3
    CHECK(cams[1].values[0] == doctest::Approx(4.0).epsilon(1e-15));  // (1*0 + 2*6) / 3
    CHECK(cams[2].values[0] == doctest::Approx(1.5).epsilon(1e-15));  // (0 + 3) / 2
}

TEST_CASE("cloud_aggregate_per_edge needs at least two edges") {
    CHECK_THROWS_AS(cloud_aggregate_per_edge({scalar_model(1.0, 1)}), ConfigError);
    CHECK_THROWS_AS(cloud_aggregate_per_edge({}), ConfigError);
}

TEST_CASE("compute_alpha follows the accuracy ratio") {
    CHECK(compute_alpha(0.8, 0.2) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(compute_alpha(0.3, 0.1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(compute_alpha(0.0, 0.7) == 0.0);
    CHECK(compute_alpha(0.7, 0.0) == 1.0);
}

TEST_CASE("compute_alpha returns one half when both accuracies vanish or tie") {
    CHECK(compute_alpha(0.0, 0.0) == 0.5);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        const double x = rng.next_uniform(1e-6, 1.0);
        CHECK(compute_alpha(x, x) == 0.5);
    }
}

TEST_CASE("compute_alpha is monotone in both arguments") {
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        const double edge = rng.next_uniform(0.01, 1.0);
        const double cloud = rng.next_uniform(0.01, 1.0);
        const double bump = rng.next_uniform(0.001, 1.0 - std::max(edge, cloud) + 0.0);
        if (edge + bump <= 1.0) {
            CHECK(compute_alpha(edge + bump, cloud) > compute_alpha(edge, cloud));
        }
        if (cloud + bump <= 1.0) {
            CHECK(compute_alpha(edge, cloud + bump) < compute_alpha(edge, cloud));
        }
    }
}

TEST_CASE("compute_alpha rejects accuracies outside the unit interval") {
    CHECK_THROWS_AS(compute_alpha(-0.1, 0.5), InvalidArgument);
    CHECK_THROWS_AS(compute_alpha(0.5, 1.1), InvalidArgument);
    CHECK_THROWS_AS(compute_alpha(std::nan(""), 0.5), InvalidArgument);
}

TEST_CASE("personalize at the boundaries returns the input bit-for-bit") {
    const ModelSpec spec{5, {9}, 3};
    const auto eam = phefl::test::random_params(spec, 21);
    const auto cam = phefl::test::random_params(spec, 22);
    CHECK(bit_equal(personalize(eam, cam, 1.0), eam));
    CHECK(bit_equal(personalize(eam, cam, 0.0), cam));
}

TEST_CASE("personalize matches scalar arithmetic") {
    ParameterVector eam, cam;
    eam.values = {10.0};
    cam.values = {0.0};
    CHECK(personalize(eam, cam, 0.8).values[0] == 8.0);
}

TEST_CASE("personalize of a model with itself is inert for any alpha") {
    const ModelSpec spec{4, {7}, 2};
    const auto pv = phefl::test::random_params(spec, 30);
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        const double alpha = rng.next_double01();
        CHECK(bit_equal(personalize(pv, pv, alpha), pv));
    }
}

TEST_CASE("personalize validates shapes and alpha") {
    const ModelSpec a{4, {7}, 2};
    const ModelSpec b{4, {8}, 2};
    const auto pa = phefl::test::random_params(a, 1);
    const auto pb = phefl::test::random_params(b, 2);
    CHECK_THROWS_AS(personalize(pa, pb, 0.5), AggregationError);
    CHECK_THROWS_AS(personalize(pa, pa, -0.01), InvalidArgument);
    CHECK_THROWS_AS(personalize(pa, pa, 1.01), InvalidArgument);
}

TEST_CASE("global_aggregate averages every edge") {
    const auto gm = global_aggregate(
        {scalar_model(1.0, 1), scalar_model(2.0, 1), scalar_model(3.0, 1)});
    CHECK(gm.values[0] == doctest::Approx(2.0).epsilon(1e-15));
    const auto single = global_aggregate({scalar_model(7.5, 4)});
    CHECK(single.values[0] == 7.5);
}

TEST_CASE("global model equals the alpha-weighted mix of own edge and the rest") {
    // GM = (|D_e|/|D|) * EAM_e + (|D - D_e|/|D|) * CAM_e for every edge e,
    // which is personalize(EAM_e, CAM_e, |D_e|/|D|).
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 2 + static_cast<int>(rng.next_below(5));
        const int dim = 1 + static_cast<int>(rng.next_below(40));
        std::vector<WeightedModel> models;
        std::int64_t total = 0;
        for (int e = 0; e < k; ++e) {
            WeightedModel m;
            m.params.spec_fingerprint = 3;
            for (int i = 0; i < dim; ++i) m.params.values.push_back(rng.next_uniform(-2, 2));
            m.weight = 1 + static_cast<std::int64_t>(rng.next_below(50));
            total += m.weight;
            models.push_back(std::move(m));
        }
        const auto gm = global_aggregate(models);
        const auto cams = cloud_aggregate_per_edge(models);
        for (int e = 0; e < k; ++e) {
            const double share = static_cast<double>(models[static_cast<std::size_t>(e)].weight) /
                                 static_cast<double>(total);
            const auto mixed = personalize(models[static_cast<std::size_t>(e)].params,
                                           cams[static_cast<std::size_t>(e)], share);
            for (int i = 0; i < dim; ++i) {
                CHECK(std::abs(mixed.values[static_cast<std::size_t>(i)] -
                               gm.values[static_cast<std::size_t>(i)]) <= 1e-12);
            }
        }
    }
}
