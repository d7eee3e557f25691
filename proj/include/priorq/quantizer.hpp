#pragma once

// Scalar quantizers over the prior-probability interval [0, 1] and the
// prior densities they are designed against.

#include "priorq/errors.hpp"
#include "priorq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace priorq {

/// A K-cell quantizer: ordered boundaries 0 = b_0 < ... < b_K = 1 and one
/// representation point per cell. Cells are half-open [b_{k-1}, b_k) with
/// the top cell closed at 1. Representation points of designed quantizers
/// lie inside their cells; disassembled diverse quantizers may carry
/// points outside [0, 1], so that is not enforced here.
class ScalarQuantizer {
public:
    ScalarQuantizer(std::vector<double> boundaries, std::vector<double> reps)
        : boundaries_(std::move(boundaries)), reps_(std::move(reps)) {
        if (boundaries_.size() < 2 || reps_.size() + 1 != boundaries_.size()) {
            throw validation_error("ScalarQuantizer: need K reps and K+1 boundaries");
        }
        if (boundaries_.front() != 0.0 || boundaries_.back() != 1.0) {
            throw validation_error("ScalarQuantizer: boundaries must start at 0 and end at 1");
        }
        for (std::size_t i = 1; i < boundaries_.size(); ++i) {
            if (!(boundaries_[i] > boundaries_[i - 1])) {
                throw validation_error("ScalarQuantizer: boundaries must be strictly increasing");
            }
        }
        for (double a : reps_) {
            if (!std::isfinite(a)) {
                throw validation_error("ScalarQuantizer: representation points must be finite");
            }
        }
    }

    int levels() const { return static_cast<int>(reps_.size()); }
    const std::vector<double>& boundaries() const { return boundaries_; }
    const std::vector<double>& reps() const { return reps_; }

    int cell_index(double p0) const {
        if (!(p0 >= 0.0 && p0 <= 1.0)) {
            throw validation_error("ScalarQuantizer: input must lie in [0,1]");
        }
        if (p0 >= 1.0) return levels() - 1;
        const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), p0);
        const int idx = static_cast<int>(it - boundaries_.begin()) - 1;
        return std::min(std::max(idx, 0), levels() - 1);
    }

    double quantize(double p0) const { return reps_[cell_index(p0)]; }

    /// True when every representation point lies inside its own cell.
    bool is_regular() const {
        for (int k = 0; k < levels(); ++k) {
            if (reps_[k] < boundaries_[k] || reps_[k] > boundaries_[k + 1]) return false;
        }
        return true;
    }

private:
    std::vector<double> boundaries_;
    std::vector<double> reps_;
};

/// Density of the prior-probability ensemble on [0, 1].
struct PriorDensity {
    std::function<double(double)> pdf;
    std::string description;

    static PriorDensity uniform() {
        return {[](double) { return 1.0; }, "uniform"};
    }

    /// Beta(alpha, beta) density; restricted to alpha, beta >= 1 so the
    /// density stays bounded and plain quadrature applies.
    static PriorDensity beta(double alpha, double beta) {
        if (!(alpha >= 1.0 && beta >= 1.0)) {
            throw validation_error("PriorDensity::beta: requires alpha >= 1 and beta >= 1");
        }
        const double log_norm =
            std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta);
        auto f = [alpha, beta, log_norm](double p) {
            if (p < 0.0 || p > 1.0) return 0.0;
            return std::exp(log_norm) * std::pow(p, alpha - 1.0) * std::pow(1.0 - p, beta - 1.0);
        };
        return {f, "beta(" + std::to_string(alpha) + "," + std::to_string(beta) + ")"};
    }

    /// Piecewise-linear density through the given (x, value) knots, which
    /// must span [0, 1]; values are rescaled to integrate to 1.
    static PriorDensity tabulated(std::vector<std::pair<double, double>> knots) {
        if (knots.size() < 2) {
            throw validation_error("PriorDensity::tabulated: need at least two knots");
        }
        std::sort(knots.begin(), knots.end());
        if (knots.front().first != 0.0 || knots.back().first != 1.0) {
            throw validation_error("PriorDensity::tabulated: knots must span [0,1]");
        }
        double area = 0.0;
        for (std::size_t i = 1; i < knots.size(); ++i) {
            const double dx = knots[i].first - knots[i - 1].first;
            if (!(dx > 0.0)) {
                throw validation_error("PriorDensity::tabulated: knot positions must be distinct");
            }
            if (knots[i].second < 0.0 || knots[i - 1].second < 0.0) {
                throw validation_error("PriorDensity::tabulated: values must be nonnegative");
            }
            area += 0.5 * dx * (knots[i].second + knots[i - 1].second);
        }
        if (!(area > 0.0)) {
            throw validation_error("PriorDensity::tabulated: density must have positive mass");
        }
        auto pts = std::make_shared<std::vector<std::pair<double, double>>>(std::move(knots));
        for (auto& kv : *pts) kv.second /= area;
        auto f = [pts](double p) {
            if (p <= 0.0) return pts->front().second;
            if (p >= 1.0) return pts->back().second;
            auto it = std::upper_bound(pts->begin(), pts->end(), std::make_pair(p, 1e300));
            const auto& right = *it;
            const auto& left = *(it - 1);
            const double t = (p - left.first) / (right.first - left.first);
            return left.second + t * (right.second - left.second);
        };
        return {f, "tabulated"};
    }
};

/// Checks the unit-mass invariant by quadrature.
inline void validate(const PriorDensity& prior) {
    if (!prior.pdf) {
        throw validation_error("PriorDensity: pdf must be set");
    }
    const double mass = integrate(prior.pdf, 0.0, 1.0, 1e-10);
    if (std::abs(mass - 1.0) > 1e-8) {
        throw validation_error("PriorDensity '" + prior.description +
                               "': integrates to " + std::to_string(mass) + ", not 1");
    }
}

inline double prior_mass(const PriorDensity& prior, double lo, double hi) {
    if (hi <= lo) return 0.0;
    return integrate(prior.pdf, lo, hi, 1e-11);
}

inline double prior_first_moment(const PriorDensity& prior, double lo, double hi) {
    if (hi <= lo) return 0.0;
    return integrate([&](double p) { return p * prior.pdf(p); }, lo, hi, 1e-11);
}

/// Cumulative-distribution table for a prior density: O(1) cdf and
/// quantile lookups from a fixed grid, with linear interpolation of the
/// per-interval mass. Used for quantile-based design initialization and
/// for drawing ensemble priors in simulation.
class QuantileTable {
public:
    explicit QuantileTable(const PriorDensity& prior, int cells = 4096) {
        if (cells < 8) {
            throw validation_error("QuantileTable: needs at least 8 cells");
        }
        grid_.resize(cells + 1);
        cdf_.resize(cells + 1);
        cdf_[0] = 0.0;
        for (int i = 0; i <= cells; ++i) {
            grid_[i] = static_cast<double>(i) / cells;
        }
        // Simpson per interval; the running total is rescaled at the end
        // so the last entry is exactly 1.
        for (int i = 1; i <= cells; ++i) {
            const double a = grid_[i - 1];
            const double b = grid_[i];
            const double msum = prior.pdf(a) + 4.0 * prior.pdf(0.5 * (a + b)) + prior.pdf(b);
            cdf_[i] = cdf_[i - 1] + (b - a) / 6.0 * msum;
        }
        const double total = cdf_.back();
        if (!(total > 0.0)) {
            throw validation_error("QuantileTable: density has no mass");
        }
        for (double& c : cdf_) c /= total;
        cdf_.back() = 1.0;
    }

    double cdf(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        const double pos = x * (grid_.size() - 1);
        const int i = std::min(static_cast<int>(pos), static_cast<int>(grid_.size()) - 2);
        const double t = pos - i;
        return cdf_[i] + t * (cdf_[i + 1] - cdf_[i]);
    }

    double quantile(double u) const {
        if (!(u >= 0.0 && u <= 1.0)) {
            throw validation_error("QuantileTable: quantile argument must lie in [0,1]");
        }
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.begin()) return 0.0;
        const int i = static_cast<int>(it - cdf_.begin());
        const double c0 = cdf_[i - 1];
        const double c1 = cdf_[i];
        const double t = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
        return grid_[i - 1] + t * (grid_[i] - grid_[i - 1]);
    }

private:
    std::vector<double> grid_;
    std::vector<double> cdf_;
};

} // namespace priorq
