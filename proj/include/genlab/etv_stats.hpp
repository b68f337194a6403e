#pragma once

/// @file etv_stats.hpp
/// @brief ETV frequency tables and cross-run pooling.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include <genlab/genealogy.hpp>

namespace genlab {

struct EtvHistogram {
    std::map<std::uint32_t, std::uint64_t> counts; // n(x)
    std::uint64_t total = 0;                       // node count of the genealogy
    int horizon = 0;

    bool operator==(const EtvHistogram&) const = default;
};

inline EtvHistogram histogram(const EtvTable& table) {
    if (table.size() == 0) {
        throw std::invalid_argument("histogram: empty ETV table");
    }
    EtvHistogram h;
    h.horizon = table.horizon();
    for (std::uint32_t v : table.values()) {
        ++h.counts[v];
    }
    h.total = table.size();
    return h;
}

/// Pooled frequencies sum_r n_r(x) / sum_r N_r over the observed support.
struct PooledDistribution {
    std::vector<std::uint32_t> x;
    std::vector<double> frequency;
    std::vector<std::uint64_t> count;
    std::uint64_t total = 0;
    std::size_t runs = 0;
    int horizon = 0;

    std::size_t size() const noexcept { return x.size(); }

    double frequency_at(std::uint32_t value) const {
        auto it = std::lower_bound(x.begin(), x.end(), value);
        return it != x.end() && *it == value ? frequency[static_cast<std::size_t>(it - x.begin())] : 0.0;
    }
};

inline PooledDistribution pool(std::span<const EtvHistogram> hists) {
    if (hists.empty()) {
        throw std::invalid_argument("pool: need at least one histogram");
    }
    std::map<std::uint32_t, std::uint64_t> merged;
    PooledDistribution d;
    d.runs = hists.size();
    d.horizon = hists.front().horizon;
    for (const auto& h : hists) {
        for (const auto& [value, n] : h.counts) {
            merged[value] += n;
        }
        d.total += h.total;
    }
    if (d.total == 0) {
        throw std::invalid_argument("pool: histograms hold no nodes");
    }
    for (const auto& [value, n] : merged) {
        if (n == 0) {
            continue;
        }
        d.x.push_back(value);
        d.count.push_back(n);
        d.frequency.push_back(static_cast<double>(n) / static_cast<double>(d.total));
    }
    return d;
}

/// Mean over runs of each run's maximum ETV.
inline double max_etv_mean(std::span<const EtvTable> tables) {
    if (tables.empty()) {
        throw std::invalid_argument("max_etv_mean: need at least one table");
    }
    double sum = 0.0;
    for (const auto& t : tables) {
        sum += t.max();
    }
    return sum / static_cast<double>(tables.size());
}

inline double max_etv_mean(std::span<const std::uint32_t> run_maxima) {
    if (run_maxima.empty()) {
        throw std::invalid_argument("max_etv_mean: need at least one run");
    }
    return std::accumulate(run_maxima.begin(), run_maxima.end(), 0.0) /
           static_cast<double>(run_maxima.size());
}

} // namespace genlab
