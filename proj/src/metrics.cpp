#include "phefl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "phefl/errors.hpp"

namespace phefl {

AccuracySeries make_series(std::string strategy, std::uint64_t config_fingerprint,
                           const RoundLog& log) {
    AccuracySeries series;
    series.strategy = std::move(strategy);
    series.config_fingerprint = config_fingerprint;
    series.values.reserve(log.size());
    for (const auto& record : log) series.values.push_back(record.mean_accuracy);
    return series;
}

double acc_n(const std::vector<double>& series, int n) {
    if (n < 1 || static_cast<std::size_t>(n) > series.size()) {
        throw InvalidArgument("acc_n: n must lie in [1, " + std::to_string(series.size()) +
                              "], got " + std::to_string(n));
    }
    return *std::max_element(series.begin(), series.begin() + n);
}

DropWindowMode drop_window_mode_from_string(std::string_view text) {
    if (text == "sliding") return DropWindowMode::kSliding;
    if (text == "anchored") return DropWindowMode::kAnchored;
    throw ConfigError("unknown drop window mode \"" + std::string(text) +
                      "\" (expected \"sliding\" or \"anchored\")");
}

std::string_view to_string(DropWindowMode mode) {
    switch (mode) {
        case DropWindowMode::kSliding: return "sliding";
        case DropWindowMode::kAnchored: return "anchored";
    }
    throw InvalidArgument("invalid DropWindowMode value");
}

std::optional<double> drop_m(const std::vector<double>& series, double m_percent,
                             DropWindowMode mode, int window) {
    if (series.empty()) {
        throw InvalidArgument("drop_m: series must be non-empty");
    }
    if (!(m_percent >= 0.0 && m_percent <= 100.0)) {
        throw InvalidArgument("drop_m: threshold must lie in [0, 100] percent, got " +
                              std::to_string(m_percent));
    }
    if (window < 1) {
        throw InvalidArgument("drop_m: window must be positive, got " + std::to_string(window));
    }

    const double threshold = m_percent / 100.0;
    std::size_t first = series.size();
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i] >= threshold) {
            first = i;
            break;
        }
    }
    if (first == series.size()) return std::nullopt;  // never reached: unmeasurable

    const std::size_t stride = mode == DropWindowMode::kSliding
                                   ? 1
                                   : static_cast<std::size_t>(window);
    double worst = 0.0;
    for (std::size_t start = first; start < series.size(); start += stride) {
        const std::size_t stop =
            std::min(series.size(), start + static_cast<std::size_t>(window));
        double lo = series[start];
        double hi = series[start];
        for (std::size_t i = start + 1; i < stop; ++i) {
            lo = std::min(lo, series[i]);
            hi = std::max(hi, series[i]);
        }
        worst = std::max(worst, hi - lo);
    }
    return worst;
}

std::vector<double> rolling_mean(const std::vector<double>& series, int window) {
    if (window < 1) {
        throw InvalidArgument("rolling_mean: window must be positive, got " +
                              std::to_string(window));
    }
    std::vector<double> out;
    out.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::size_t begin = i + 1 >= static_cast<std::size_t>(window)
                                      ? i + 1 - static_cast<std::size_t>(window)
                                      : 0;
        double sum = 0.0;
        for (std::size_t j = begin; j <= i; ++j) sum += series[j];
        out.push_back(sum / static_cast<double>(i - begin + 1));
    }
    return out;
}

std::vector<StrategyComparison> compare_strategies(const std::vector<AccuracySeries>& runs,
                                                   int n, double m_percent, DropWindowMode mode,
                                                   int window) {
    if (runs.empty()) {
        throw InvalidArgument("compare_strategies: need at least one run");
    }
    std::vector<StrategyComparison> report;
    report.reserve(runs.size());
    for (const auto& run : runs) {
        StrategyComparison entry;
        entry.strategy = run.strategy;
        entry.acc_n = acc_n(run.values, n);
        entry.drop_m = drop_m(run.values, m_percent, mode, window);
        entry.final_rolling_mean = rolling_mean(run.values, window).back();
        report.push_back(std::move(entry));
    }
    for (auto& entry : report) {
        entry.rank = 1;
        for (const auto& other : report) {
            if (other.acc_n > entry.acc_n) ++entry.rank;
        }
    }
    return report;
}

}  // namespace phefl
