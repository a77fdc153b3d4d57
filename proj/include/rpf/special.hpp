#pragma once

#include <cmath>
#include <limits>

namespace rpf {

/// Digamma function for x > 0: upward recurrence to x >= 10, then the
/// asymptotic Bernoulli series. Absolute error below 1e-13 on (0, inf).
inline double digamma(double x) {
    if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    double shift = 0.0;
    while (x < 10.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // B_2k / (2k) for k = 1..7
    const double series =
        inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                        inv2 * (1.0 / 252 -
                                inv2 * (1.0 / 240 -
                                        inv2 * (1.0 / 132 -
                                                inv2 * (691.0 / 32760 - inv2 * (1.0 / 12)))))));
    return shift + std::log(x) - 0.5 * inv - series;
}

/// Shape/rate gamma distribution; mean = shape / rate.
struct GammaParams {
    double shape = 1.0;
    double rate = 1.0;

    double mean() const { return shape / rate; }
    double mean_log() const { return digamma(shape) - std::log(rate); }
    double entropy() const {
        return shape - std::log(rate) + std::lgamma(shape) + (1.0 - shape) * digamma(shape);
    }
    bool operator==(const GammaParams &) const = default;
};

/**
 * E_q[ln Gamma(x; shape, rate)] when x and the rate are independent random
 * variables with the given expectations E[ln x], E[x], E[ln rate], E[rate].
 */
inline double expected_gamma_logpdf(double shape, double mean_log_rate, double mean_rate,
                                    double mean_log_x, double mean_x) {
    return shape * mean_log_rate - std::lgamma(shape) + (shape - 1.0) * mean_log_x -
           mean_rate * mean_x;
}

} // namespace rpf
