#pragma once

// Order-statistic densities and moments. The convention throughout is that
// of a fused detection team: for n iid draws, index them in descending
// order and take the l-th LARGEST. l = 1 is the maximum, l = n the
// minimum, l = (n+1)/2 the median of an odd-sized sample.

#include "priorq/errors.hpp"
#include "priorq/numerics.hpp"

#include <cmath>
#include <functional>
#include <string>

namespace priorq {

/// Mean and variance of an order statistic of the standardized base
/// distribution, in units of the base scale (sigma and sigma^2).
struct MomentPair {
    double mean_factor = 0.0;
    double variance_factor = 1.0;
};

/// The l-th largest of n iid draws from a continuous base distribution.
struct OrderStatisticNoise {
    std::function<double(double)> base_cdf;
    std::function<double(double)> base_pdf;
    int n = 1;
    int l = 1;
};

inline void validate(const OrderStatisticNoise& noise) {
    if (noise.n < 1 || noise.l < 1 || noise.l > noise.n) {
        throw validation_error("OrderStatisticNoise: requires 1 <= l <= n, got l=" +
                               std::to_string(noise.l) + " n=" + std::to_string(noise.n));
    }
    if (!noise.base_cdf || !noise.base_pdf) {
        throw validation_error("OrderStatisticNoise: base_cdf and base_pdf must be set");
    }
}

/// ln( n! / ((n-l)! (l-1)!) ), evaluated through lgamma so large team
/// sizes do not overflow.
inline double order_statistic_log_coeff(int n, int l) {
    return std::lgamma(n + 1.0) - std::lgamma(n - l + 1.0) - std::lgamma(static_cast<double>(l));
}

/// Density of the l-th largest of n iid base draws at v:
///   coeff * F(v)^(n-l) * (1 - F(v))^(l-1) * f(v).
inline double order_statistic_pdf(const OrderStatisticNoise& noise, double v) {
    validate(noise);
    const double f = noise.base_pdf(v);
    if (f == 0.0) return 0.0;
    double F = noise.base_cdf(v);
    F = std::min(1.0, std::max(0.0, F));
    const double coeff = std::exp(order_statistic_log_coeff(noise.n, noise.l));
    return coeff * std::pow(F, noise.n - noise.l) * std::pow(1.0 - F, noise.l - 1) * f;
}

/// Mean and variance factors of the l-th largest of n iid standard normal
/// draws, by quadrature over the whole line.
inline MomentPair order_statistic_moments(int n, int l, double quad_tol = 1e-11) {
    OrderStatisticNoise noise{[](double v) { return norm_cdf(v); },
                              [](double v) { return norm_pdf(v); }, n, l};
    validate(noise);
    const double inf = std::numeric_limits<double>::infinity();
    const double mean =
        integrate([&](double v) { return v * order_statistic_pdf(noise, v); }, -inf, inf, quad_tol);
    const double second =
        integrate([&](double v) { return v * v * order_statistic_pdf(noise, v); }, -inf, inf, quad_tol);
    MomentPair mp;
    mp.mean_factor = mean;
    mp.variance_factor = second - mean * mean;
    if (!(mp.variance_factor > 0.0)) {
        throw numerical_error("order_statistic_moments: non-positive variance estimate",
                              mp.variance_factor);
    }
    return mp;
}

} // namespace priorq
