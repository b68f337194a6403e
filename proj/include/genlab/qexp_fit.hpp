#pragma once

/// @file qexp_fit.hpp
/// @brief q-exponential density, q-logarithm and the q-log straight-line fit.
///
///   p(x)    = p0 [1 - (1-q) x/x0]^(1/(1-q)),   p0 = (2-q)/x0
///   ln_q(x) = (x^(1-q) - 1) / (1-q)
///   ln_q p(x) = ln_q p0 - [1 + (1-q) ln_q p0] x/x0
///
/// For a given q, data following A*[1 - (1-q) x/x0]^(1/(1-q)) for any
/// amplitude A lie on a line in (x, ln_q y) space with intercept ln_q A and
/// slope -A^(1-q)/x0. The fit scans q, solves the weighted line in closed
/// form, reads x0 off the slope and intercept, and fixes p0 by normalization.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <genlab/etv_stats.hpp>

namespace genlab {

class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr double q_unity_threshold = 1e-9;

struct QExpParams {
    double q = 1.0;
    double x0 = 1.0;
    double p0 = 1.0;

    /// Parameters satisfying p0 * x0 = 2 - q.
    static QExpParams normalized(double q, double x0) {
        if (!(x0 > 0.0)) {
            throw std::invalid_argument("q-exponential: x0 must be positive");
        }
        if (!(q < 2.0)) {
            throw std::invalid_argument("q-exponential: q must be below 2 to normalize");
        }
        return QExpParams{q, x0, (2.0 - q) / x0};
    }
};

/// Generalized exponential e_q(y) = [1 + (1-q) y]^(1/(1-q)), zero where the base is negative.
inline double q_exp_function(double q, double y) {
    if (std::abs(q - 1.0) < q_unity_threshold) {
        return std::exp(y);
    }
    const double arg = (1.0 - q) * y;
    if (arg <= -1.0) {
        return q < 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::exp(std::log1p(arg) / (1.0 - q));
}

inline double q_logarithm(double q, double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("q_logarithm: argument must be positive");
    }
    if (std::abs(q - 1.0) < q_unity_threshold) {
        return std::log(x);
    }
    return std::expm1((1.0 - q) * std::log(x)) / (1.0 - q);
}

inline double q_exponential(const QExpParams& p, double x) {
    if (std::abs(p.q - 1.0) < q_unity_threshold) {
        return p.p0 * std::exp(-x / p.x0);
    }
    const double arg = -(1.0 - p.q) * x / p.x0;
    if (arg <= -1.0) {
        return 0.0;
    }
    return p.p0 * std::exp(std::log1p(arg) / (1.0 - p.q));
}

inline double linearized_form(const QExpParams& p, double x) {
    const double lq_p0 = q_logarithm(p.q, p.p0);
    return lq_p0 - (1.0 + (1.0 - p.q) * lq_p0) * x / p.x0;
}

inline double gamma_of(double q) {
    if (!(q > 1.0)) {
        throw std::domain_error("gamma_of: q must exceed 1 for a power-law tail");
    }
    return 1.0 / (q - 1.0);
}

struct QExpFit {
    QExpParams params;
    std::optional<double> gamma;
    double score = 0.0;     // weighted R^2 of the line in q-log space
    double intercept = 0.0; // ln_q of the fitted amplitude
    double slope = 0.0;
};

struct QGrid {
    double first = 1.001;
    double last = 1.999;
    double step = 0.001;
};

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
};

/// Closed-form weighted least squares for y = intercept + slope * x.
inline std::optional<LineFit> weighted_line(std::span<const double> x, std::span<const double> y,
                                            std::span<const double> w) {
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sw += w[k];
        sx += w[k] * x[k];
        sy += w[k] * y[k];
    }
    const double xm = sx / sw;
    const double ym = sy / sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = x[k] - xm;
        const double dy = y[k] - ym;
        sxx += w[k] * dx * dx;
        sxy += w[k] * dx * dy;
        syy += w[k] * dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        return std::nullopt;
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = ym - f.slope * xm;
    f.r2 = (sxy * sxy) / (sxx * syy);
    return f;
}

/// Fits (q, x0) to positive frequencies at abscissae `x`, weighting each point by `weight`.
inline QExpFit fit_q_exponential(std::span<const double> x, std::span<const double> frequency,
                                 std::span<const double> weight, QGrid grid = {}) {
    if (x.size() != frequency.size() || x.size() != weight.size()) {
        throw FitError("fit: input columns differ in length");
    }
    std::vector<double> xs, fs, ws;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (frequency[k] > 0.0) {
            xs.push_back(x[k]);
            fs.push_back(frequency[k]);
            ws.push_back(weight[k]);
        }
    }
    if (xs.size() < 3) {
        throw FitError("fit: need at least 3 points with positive frequency");
    }
    bool all_equal = true;
    for (double f : fs) {
        all_equal = all_equal && f == fs.front();
    }
    if (all_equal) {
        throw FitError("fit: degenerate distribution (all frequencies equal)");
    }

    std::optional<QExpFit> best;
    std::vector<double> ys(xs.size());
    const auto steps = static_cast<long>(std::llround((grid.last - grid.first) / grid.step));
    for (long k = 0; k <= steps; ++k) {
        const double q = grid.first + static_cast<double>(k) * grid.step;
        for (std::size_t m = 0; m < xs.size(); ++m) {
            ys[m] = q_logarithm(q, fs[m]);
        }
        const auto line = weighted_line(xs, ys, ws);
        if (!line || !(line->slope < 0.0)) {
            continue;
        }
        const double amplitude_term = 1.0 + (1.0 - q) * line->intercept;
        const double x0 = -amplitude_term / line->slope;
        if (!(amplitude_term > 0.0) || !(x0 > 0.0) || !std::isfinite(x0) || !(q < 2.0)) {
            continue;
        }
        if (!best || line->r2 > best->score) {
            QExpFit fit;
            fit.params = QExpParams::normalized(q, x0);
            fit.gamma = q > 1.0 ? std::optional<double>(gamma_of(q)) : std::nullopt;
            fit.score = line->r2;
            fit.intercept = line->intercept;
            fit.slope = line->slope;
            best = fit;
        }
    }
    if (!best) {
        throw FitError("fit: no q on the grid yields a decreasing q-log line");
    }
    return *best;
}

/// Pooled counts are proportional to the pooled frequencies, so the frequencies serve as weights.
inline QExpFit fit_q_exponential(const PooledDistribution& dist, QGrid grid = {}) {
    std::vector<double> x(dist.x.begin(), dist.x.end());
    return fit_q_exponential(x, dist.frequency, dist.frequency, grid);
}

} // namespace genlab
