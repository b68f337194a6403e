#pragma once

/// @file trend_fit.hpp
/// @brief Power-trend fits f(t) = a t^b + c over checkpoint series, plus correlations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace genlab {

struct MetricSeries {
    std::string metric;
    std::vector<double> checkpoints;
    std::vector<double> values;

    void validate() const {
        if (checkpoints.size() != values.size()) {
            throw std::invalid_argument("series " + metric + ": checkpoint/value count mismatch");
        }
        if (checkpoints.size() < 4) {
            throw std::invalid_argument("series " + metric + ": need at least 4 points");
        }
        for (double t : checkpoints) {
            if (!(t >= 1.0)) {
                throw std::invalid_argument("series " + metric + ": checkpoints must be >= 1");
            }
        }
    }
};

struct PowerTrendParams {
    double a = 0.0;
    double b = -1.0;
    double c = 0.0;
    double r = 1.0; // Pearson correlation of fitted vs observed
};

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("pearson: need two equal-length samples of size >= 2");
    }
    const double n = static_cast<double>(x.size());
    const double xm = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - xm) * (x[k] - xm);
        syy += (y[k] - ym) * (y[k] - ym);
        sxy += (x[k] - xm) * (y[k] - ym);
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Average ranks (1-based), ties share the mean rank.
inline std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < order.size();) {
        std::size_t end = k;
        while (end + 1 < order.size() && v[order[end + 1]] == v[order[k]]) {
            ++end;
        }
        const double mean_rank = (static_cast<double>(k) + static_cast<double>(end)) / 2.0 + 1.0;
        for (std::size_t m = k; m <= end; ++m) {
            r[order[m]] = mean_rank;
        }
        k = end + 1;
    }
    return r;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    return pearson(rx, ry);
}

namespace detail {

struct TrendCandidate {
    double a = 0.0;
    double c = 0.0;
    double ssr = 0.0;
};

// Linear least squares for (a, c) with the exponent held fixed.
inline TrendCandidate fit_given_exponent(std::span<const double> t, std::span<const double> y, double b) {
    const double n = static_cast<double>(t.size());
    std::vector<double> u(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        u[k] = std::pow(t[k], b);
    }
    const double um = std::accumulate(u.begin(), u.end(), 0.0) / n;
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double suu = 0.0, suy = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        suu += (u[k] - um) * (u[k] - um);
        suy += (u[k] - um) * (y[k] - ym);
    }
    TrendCandidate out;
    out.a = suu > 0.0 ? suy / suu : 0.0;
    out.c = ym - out.a * um;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double r = y[k] - (out.a * u[k] + out.c);
        out.ssr += r * r;
    }
    return out;
}

} // namespace detail

/// Residual sum of squares of the (a, c)-optimal fit at exponent b.
inline double trend_residual(const MetricSeries& s, double b) {
    return detail::fit_given_exponent(s.checkpoints, s.values, b).ssr;
}

inline double trend_residual(const MetricSeries& s, const PowerTrendParams& p) {
    double ssr = 0.0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        const double r = s.values[k] - (p.a * std::pow(s.checkpoints[k], p.b) + p.c);
        ssr += r * r;
    }
    return ssr;
}

struct TrendSearch {
    double b_min = -4.0;
    double b_max = 0.0; // exclusive
    double step = 1e-3;
};

/// Least-squares fit of a t^b + c: grid over b with closed-form (a, c), then
/// golden-section refinement around the best grid cell.
inline PowerTrendParams fit_trend(const MetricSeries& series, TrendSearch search = {}) {
    series.validate();
    std::vector<std::pair<double, double>> points;
    for (std::size_t k = 0; k < series.values.size(); ++k) {
        points.emplace_back(series.checkpoints[k], series.values[k]);
    }
    std::sort(points.begin(), points.end());
    std::vector<double> t, y;
    for (const auto& [tk, yk] : points) {
        t.push_back(tk);
        y.push_back(yk);
    }

    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
        return PowerTrendParams{0.0, -1.0, y.front(), 1.0};
    }

    const auto steps = static_cast<long>(std::llround((search.b_max - search.b_min) / search.step));
    double best_b = search.b_min;
    double best_ssr = std::numeric_limits<double>::infinity();
    for (long k = 0; k < steps; ++k) {
        const double b = search.b_min + static_cast<double>(k) * search.step;
        const double ssr = detail::fit_given_exponent(t, y, b).ssr;
        if (ssr < best_ssr) {
            best_ssr = ssr;
            best_b = b;
        }
    }

    double lo = std::max(search.b_min, best_b - search.step);
    double hi = std::min(search.b_max - 1e-12, best_b + search.step);
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    double f1 = detail::fit_given_exponent(t, y, x1).ssr;
    double f2 = detail::fit_given_exponent(t, y, x2).ssr;
    for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = detail::fit_given_exponent(t, y, x1).ssr;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = detail::fit_given_exponent(t, y, x2).ssr;
        }
    }
    double refined_b = (lo + hi) / 2.0;
    if (detail::fit_given_exponent(t, y, refined_b).ssr > best_ssr) {
        refined_b = best_b;
    }

    const auto fit = detail::fit_given_exponent(t, y, refined_b);
    PowerTrendParams out;
    out.a = fit.a;
    out.b = refined_b;
    out.c = fit.c;
    std::vector<double> fitted(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        fitted[k] = out.a * std::pow(t[k], out.b) + out.c;
    }
    out.r = pearson(fitted, y);
    return out;
}

struct CorrelationReport {
    double q_vs_etv = 0.0;
    double x0_vs_etv = 0.0;
    double gamma_vs_etv = 0.0;

    /// q rises with max ETV while x0 and gamma fall.
    bool expected_pattern() const { return q_vs_etv > 0.0 && x0_vs_etv < 0.0 && gamma_vs_etv < 0.0; }
};

inline CorrelationReport correlation_signs(const MetricSeries& etv, const MetricSeries& q,
                                           const MetricSeries& x0, const MetricSeries& gamma) {
    for (const auto* s : {&q, &x0, &gamma}) {
        if (s->checkpoints != etv.checkpoints) {
            throw std::invalid_argument("correlation_signs: series must share checkpoints");
        }
    }
    return CorrelationReport{pearson(q.values, etv.values), pearson(x0.values, etv.values),
                             pearson(gamma.values, etv.values)};
}

} // namespace genlab
