#ifndef PHEFL_AGGREGATION_HPP
#define PHEFL_AGGREGATION_HPP

#include <cstdint>
#include <vector>

#include "phefl/model.hpp"

namespace phefl {

// A parameter vector together with the example count of the data it was
// trained (or aggregated) on. The count is the aggregation weight.
struct WeightedModel {
    ParameterVector params;
    std::int64_t weight = 1;
};

// One edge's mixing decision in one round: the two accuracies measured on the
// edge's personalization set and the ratio derived from them.
struct AlphaRecord {
    int edge_id = 0;
    double acc_edge = 0.0;
    double acc_cloud = 0.0;
    double alpha = 0.0;
    int round = 0;
};

// Convex combination of models with weights w_c / sum(w). Summation follows
// ascending model index, so the result is a bit-deterministic function of the
// input order. Identical inputs average to themselves exactly. Throws
// AggregationError on an empty list, mismatched fingerprints, or
// non-positive weights.
ParameterVector weighted_average(const std::vector<WeightedModel>& models);

// Leave-one-out cloud aggregation: output e is the weighted average of every
// model except e, i.e. what the rest of the federation believes. Requires at
// least two models (with one, there is nothing to aggregate for the excluded
// edge); throws ConfigError otherwise.
std::vector<ParameterVector> cloud_aggregate_per_edge(const std::vector<WeightedModel>& models);

// alpha = acc_edge / (acc_edge + acc_cloud), the share of trust given to the
// edge's own aggregate. When both accuracies are exactly zero there is no
// evidence either way and the result is 0.5. Inputs outside [0,1] throw
// InvalidArgument.
double compute_alpha(double acc_edge, double acc_cloud);

// alpha * eam + (1 - alpha) * cam, coordinate-wise. The boundaries return
// the corresponding input bit-for-bit, and mixing a model with itself returns
// it unchanged for any alpha.
ParameterVector personalize(const ParameterVector& eam, const ParameterVector& cam, double alpha);

// Plain weighted average over every edge (no exclusion): the uniform global
// model that EdgeCloud broadcasts. A single model passes through unchanged.
ParameterVector global_aggregate(const std::vector<WeightedModel>& models);

}  // namespace phefl

#endif  // PHEFL_AGGREGATION_HPP
