#ifndef PHEFL_METRICS_HPP
#define PHEFL_METRICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phefl/record.hpp"

namespace phefl {

// Per-round mean accuracies of one run, tagged with the strategy that
// produced them and a fingerprint of the configuration it ran under.
struct AccuracySeries {
    std::string strategy;
    std::uint64_t config_fingerprint = 0;
    std::vector<double> values;
};

// Extracts the mean-accuracy series from a round log.
AccuracySeries make_series(std::string strategy, std::uint64_t config_fingerprint,
                           const RoundLog& log);

// Highest accuracy achieved within the first n rounds. Requires
// 1 <= n <= series length.
double acc_n(const std::vector<double>& series, int n);

// How the 10-entry windows of drop_m walk the series once the threshold has
// been reached: sliding starts a window at every index, anchored tiles
// consecutive disjoint windows from the crossing point. Both include a final
// shorter window so late crashes stay visible.
enum class DropWindowMode { kSliding, kAnchored };

DropWindowMode drop_window_mode_from_string(std::string_view text);
std::string_view to_string(DropWindowMode mode);

// Largest within-window accuracy drop (window max minus window min) after the
// series first reaches m_percent. Returns nullopt when the series never
// reaches the threshold, which reports as "unmeasurable".
std::optional<double> drop_m(const std::vector<double>& series, double m_percent,
                             DropWindowMode mode = DropWindowMode::kSliding, int window = 10);

// Trailing moving average; entry i averages entries max(0, i-window+1)..i,
// so leading entries average over what exists.
std::vector<double> rolling_mean(const std::vector<double>& series, int window);

// One strategy's scorecard within a comparison.
struct StrategyComparison {
    std::string strategy;
    double acc_n = 0.0;
    std::optional<double> drop_m;
    double final_rolling_mean = 0.0;
    // Competition rank by acc_n, descending: 1 + number of strictly better
    // runs. Ties share a rank.
    int rank = 0;
};

// Scores every run and ranks them by AccN. Output order follows input order;
// ranks are independent of it.
std::vector<StrategyComparison> compare_strategies(const std::vector<AccuracySeries>& runs,
                                                   int n, double m_percent,
                                                   DropWindowMode mode = DropWindowMode::kSliding,
                                                   int window = 10);

}  // namespace phefl

#endif  // PHEFL_METRICS_HPP
