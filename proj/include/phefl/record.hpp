#ifndef PHEFL_RECORD_HPP
#define PHEFL_RECORD_HPP

#include <vector>

#include "phefl/aggregation.hpp"

namespace phefl {

// Everything observed in one federation round. `alphas` is filled only when
// the personalized strategy runs; baselines leave it empty. The wall time is
// informational and never serialized, so archives stay byte-comparable.
struct RoundRecord {
    int round = 0;                      // 1-based round index t
    std::vector<double> edge_accuracy;  // accuracy per edge on its evaluation set
    std::vector<AlphaRecord> alphas;    // per-edge mixing decisions (personalized runs)
    double mean_accuracy = 0.0;         // arithmetic mean of edge_accuracy
    double wall_time_seconds = 0.0;
};

using RoundLog = std::vector<RoundRecord>;

}  // namespace phefl

#endif  // PHEFL_RECORD_HPP
