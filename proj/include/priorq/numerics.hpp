#pragma once

// Scalar numerical substrate: adaptive Simpson quadrature (finite and
// infinite ranges), bracketed monotone root finding with optional secant
// acceleration, golden-section minimization, and standard-normal helpers.

#include "priorq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

namespace priorq {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;
inline constexpr double kLnSqrt2Pi = 0.9189385332046727;

inline double norm_pdf(double z) {
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z / kSqrt2);
}

/// Upper tail P(Z >= z) of the standard normal.
inline double norm_sf(double z) {
    return 0.5 * std::erfc(z / kSqrt2);
}

/// log(Phi(z)), stable far into the lower tail where Phi underflows.
/// Below z = -30 an asymptotic expansion of the Mills ratio is used; the
/// truncation error there is below 1e-13 relative.
inline double log_norm_cdf(double z) {
    if (z > -30.0) {
        double c = norm_cdf(z);
        if (c > 1e-12) {
            // avoid log(1-eps) noise near 1
            return (z > 8.0) ? -norm_sf(z) : std::log(c);
        }
        return std::log(c);
    }
    const double x = -z;
    const double x2 = x * x;
    double series = -1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)
                    + 105.0 / (x2 * x2 * x2 * x2) - 945.0 / (x2 * x2 * x2 * x2 * x2);
    return -0.5 * x2 - std::log(x) - kLnSqrt2Pi + std::log1p(series);
}

inline double log_norm_sf(double z) { return log_norm_cdf(-z); }

namespace detail {

struct SimpsonAccount {
    double unresolved = 0.0;  // |error estimate| accepted at the limits
    long long splits = 0;     // total panel subdivisions so far
};

constexpr long long kMaxSimpsonSplits = 4000000;

template <class F>
double simpson_panel(F& f, double a, double b, double fa, double fm, double fb,
                     double whole, double abs_tol, int depth, SimpsonAccount& acct) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double s2 = left + right;
    const double err = (s2 - whole) / 15.0;
    if (std::abs(err) <= abs_tol || m <= a || m >= b) {
        return s2 + err;
    }
    if (depth <= 0 || ++acct.splits > kMaxSimpsonSplits) {
        acct.unresolved += std::abs(err);
        return s2 + err;
    }
    return simpson_panel(f, a, m, fa, flm, fm, left, 0.5 * abs_tol, depth - 1, acct)
         + simpson_panel(f, m, b, fm, frm, fb, right, 0.5 * abs_tol, depth - 1, acct);
}

template <class F>
double integrate_finite(F&& f, double lo, double hi, double rel_tol) {
    // Seed with several top-level panels so symmetric integrands cannot
    // fool the first error estimate, and pick the tolerance scale from a
    // coarse L1 sweep.
    constexpr int kPanels = 8;
    const double h = (hi - lo) / kPanels;
    double xs[2 * kPanels + 1];
    double fs[2 * kPanels + 1];
    double l1 = 0.0;
    for (int i = 0; i <= 2 * kPanels; ++i) {
        xs[i] = lo + 0.5 * h * i;
        fs[i] = f(xs[i]);
        l1 += std::abs(fs[i]);
    }
    l1 *= (hi - lo) / (2 * kPanels + 1);
    const double scale = std::max(l1, 1e-120);
    const double abs_tol = rel_tol * scale;

    SimpsonAccount acct;
    double total = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        const double a = xs[2 * i];
        const double m = xs[2 * i + 1];
        const double b = xs[2 * i + 2];
        const double whole = (b - a) / 6.0 * (fs[2 * i] + 4.0 * fs[2 * i + 1] + fs[2 * i + 2]);
        total += simpson_panel(f, a, b, fs[2 * i], fs[2 * i + 1], fs[2 * i + 2], whole,
                               abs_tol / kPanels, 40, acct);
    }
    if (!std::isfinite(total)) {
        throw numerical_error("integrate: integrand produced non-finite values");
    }
    if (!(acct.unresolved <= abs_tol)) {
        throw numerical_error("integrate: subdivision limit exceeded",
                              acct.unresolved / scale);
    }
    return total;
}

} // namespace detail

/// Adaptive-Simpson estimate of the integral of `f` over [lo, hi] with
/// relative tolerance `rel_tol` (scaled by a coarse L1 estimate of the
/// integrand, so odd integrands with true value 0 behave sensibly).
///
/// Infinite endpoints are admitted through the logarithmic substitution
/// v = a - ln(1-t), which compresses each infinite tail onto a unit
/// interval. Integrands decaying at least as fast as exp(-v) transform to
/// bounded functions; slower exponential decay leaves an integrable
/// endpoint singularity the subdivision still resolves. Throws
/// numerical_error when the subdivision limit is hit before the tolerance
/// is met.
template <class F>
double integrate(F&& f, double lo, double hi, double rel_tol = 1e-9) {
    if (!(rel_tol > 0.0)) {
        throw validation_error("integrate: rel_tol must be positive");
    }
    const bool lo_inf = std::isinf(lo);
    const bool hi_inf = std::isinf(hi);
    if (!lo_inf && !hi_inf) {
        if (!(lo < hi)) {
            throw validation_error("integrate: requires lo < hi");
        }
        return detail::integrate_finite(std::forward<F>(f), lo, hi, rel_tol);
    }
    if (lo_inf && hi_inf) {
        // one mapped pass per tail; odd integrands then cancel across the
        // two halves instead of inside the adaptive refinement
        return integrate(f, lo, 0.0, rel_tol) + integrate(f, 0.0, hi, rel_tol);
    }
    if (hi_inf) {
        auto g = [&f, lo](double t) {
            if (t >= 1.0) return 0.0;
            return f(lo - std::log1p(-t)) / (1.0 - t);
        };
        return detail::integrate_finite(g, 0.0, 1.0, rel_tol);
    }
    auto g = [&f, hi](double t) {
        if (t >= 1.0) return 0.0;
        return f(hi + std::log1p(-t)) / (1.0 - t);
    };
    return detail::integrate_finite(g, 0.0, 1.0, rel_tol);
}

/// Root of a continuous monotone function on [lo, hi]. Keeps a sign-change
/// bracket and shrinks it by secant steps where they help, bisection
/// otherwise; stops when the bracket is narrower than `tol` or g hits 0.
///
/// With `allow_expand`, a bracket without a sign change is widened
/// geometrically first; expansion that reveals non-monotone samples, or
/// fails to find a sign change, throws numerical_error.
template <class G>
double find_root_monotone(G&& g, double lo, double hi, double tol = 1e-12,
                          bool allow_expand = false) {
    if (!(lo < hi)) {
        throw validation_error("find_root_monotone: requires lo < hi");
    }
    double glo = g(lo);
    double ghi = g(hi);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;

    if (glo * ghi > 0.0) {
        if (!allow_expand) {
            throw numerical_error("find_root_monotone: no sign change in bracket");
        }
        const bool increasing = ghi > glo;
        double width = hi - lo;
        for (int i = 0; i < 64 && glo * ghi > 0.0; ++i) {
            width *= 2.0;
            if (increasing ? (glo > 0.0) : (glo < 0.0)) {
                const double nlo = lo - width;
                const double gn = g(nlo);
                if (increasing ? (gn > glo) : (gn < glo)) {
                    throw numerical_error("find_root_monotone: non-monotone during expansion");
                }
                hi = lo; ghi = glo; lo = nlo; glo = gn;
            } else {
                const double nhi = hi + width;
                const double gn = g(nhi);
                if (increasing ? (gn < ghi) : (gn > ghi)) {
                    throw numerical_error("find_root_monotone: non-monotone during expansion");
                }
                lo = hi; glo = ghi; hi = nhi; ghi = gn;
            }
            if (glo == 0.0) return lo;
            if (ghi == 0.0) return hi;
        }
        if (glo * ghi > 0.0) {
            throw numerical_error("find_root_monotone: no sign change after expansion");
        }
    }

    double last_width = hi - lo;
    for (int it = 0; it < 500; ++it) {
        if (hi - lo <= tol) break;
        double x;
        // secant through the bracket endpoints, guarded to the interior
        const double denom = ghi - glo;
        if (denom != 0.0) {
            x = lo - glo * (hi - lo) / denom;
            const double margin = 0.01 * (hi - lo);
            if (!(x > lo + margin && x < hi - margin)) {
                x = 0.5 * (lo + hi);
            }
        } else {
            x = 0.5 * (lo + hi);
        }
        // force a bisection step whenever the bracket stops halving
        if ((it & 1) && (hi - lo) > 0.5 * last_width) {
            x = 0.5 * (lo + hi);
        }
        if (!(it & 1)) last_width = hi - lo;

        const double gx = g(x);
        if (gx == 0.0) return x;
        if (gx * glo < 0.0) {
            hi = x; ghi = gx;
        } else {
            lo = x; glo = gx;
        }
    }
    return 0.5 * (lo + hi);
}

/// Golden-section minimizer of a unimodal function on [lo, hi]; returns the
/// abscissa located to within `tol`.
template <class F>
double golden_section_min(F&& f, double lo, double hi, double tol = 1e-10) {
    if (!(lo < hi)) {
        throw validation_error("golden_section_min: requires lo < hi");
    }
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

/// SplitMix64 step; used to derive independent seeds for restart and
/// simulation streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace priorq
