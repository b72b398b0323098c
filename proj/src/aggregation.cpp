#include "phefl/aggregation.hpp"

#include <string>

#include "phefl/errors.hpp"

namespace phefl {

namespace {

void check_models(const std::vector<WeightedModel>& models) {
    if (models.empty()) {
        throw AggregationError("cannot aggregate an empty model list");
    }
    const auto& first = models[0].params;
    for (std::size_t c = 0; c < models.size(); ++c) {
        const auto& m = models[c];
        if (m.weight < 1) {
            throw AggregationError("model " + std::to_string(c) + " has non-positive weight " +
                                   std::to_string(m.weight));
        }
        if (m.params.spec_fingerprint != first.spec_fingerprint ||
            m.params.values.size() != first.values.size()) {
            throw AggregationError("model " + std::to_string(c) +
                                   " does not match the shape of model 0");
        }
    }
}

}  // namespace

ParameterVector weighted_average(const std::vector<WeightedModel>& models) {
    check_models(models);

    std::int64_t total = 0;
    for (const auto& m : models) total += m.weight;

    // Accumulate deviations from the first model rather than raw values:
    // identical inputs then average to themselves exactly, and the sum stays
    // in fixed ascending model order for bit-reproducibility.
    ParameterVector out = models[0].params;
    for (std::size_t c = 1; c < models.size(); ++c) {
        const double ratio =
            static_cast<double>(models[c].weight) / static_cast<double>(total);
        const auto& values = models[c].params.values;
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            out.values[i] += ratio * (values[i] - models[0].params.values[i]);
        }
    }
    return out;
}

std::vector<ParameterVector> cloud_aggregate_per_edge(const std::vector<WeightedModel>& models) {
    if (models.size() < 2) {
        throw ConfigError("leave-one-out cloud aggregation needs at least 2 edges, got " +
                          std::to_string(models.size()) +
                          " (with a single edge, only edge-level aggregation is meaningful)");
    }
    check_models(models);

    std::vector<ParameterVector> cams;
    cams.reserve(models.size());
    for (std::size_t e = 0; e < models.size(); ++e) {
        std::vector<WeightedModel> rest;
        rest.reserve(models.size() - 1);
        for (std::size_t k = 0; k < models.size(); ++k) {
            if (k != e) rest.push_back(models[k]);
        }
        cams.push_back(weighted_average(rest));
    }
    return cams;
}

double compute_alpha(double acc_edge, double acc_cloud) {
    if (!(acc_edge >= 0.0 && acc_edge <= 1.0) || !(acc_cloud >= 0.0 && acc_cloud <= 1.0)) {
        throw InvalidArgument("accuracies must lie in [0,1], got " + std::to_string(acc_edge) +
                              " and " + std::to_string(acc_cloud));
    }
    if (acc_edge == 0.0 && acc_cloud == 0.0) return 0.5;
    return acc_edge / (acc_edge + acc_cloud);
}

ParameterVector personalize(const ParameterVector& eam, const ParameterVector& cam,
                            double alpha) {
    if (eam.spec_fingerprint != cam.spec_fingerprint ||
        eam.values.size() != cam.values.size()) {
        throw AggregationError("edge and cloud models do not share a shape");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("alpha must lie in [0,1], got " + std::to_string(alpha));
    }
    // Exact boundaries: hand back the input itself.
    if (alpha == 1.0) return eam;
    if (alpha == 0.0) return cam;
    // cam + alpha*(eam - cam): mixing a model with itself is exact for any
    // alpha, since every deviation term is exactly zero.
    ParameterVector out = cam;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] += alpha * (eam.values[i] - cam.values[i]);
    }
    return out;
}

ParameterVector global_aggregate(const std::vector<WeightedModel>& models) {
    return weighted_average(models);
}

}  // namespace phefl
