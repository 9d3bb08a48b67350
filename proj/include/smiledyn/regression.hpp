#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "detail/stats.hpp"
#include "error.hpp"

namespace smiledyn {

struct RegressionResult {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double stderr_intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n = 0;
};

struct Interval {
    double lower;
    double upper;

    bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

/// Plain OLS of y on x with intercept.
inline RegressionResult ols(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), ErrorKind::invalid_argument, "ols: x and y differ in length");
    require(x.size() >= 3, ErrorKind::too_few_samples, "ols: need at least 3 points");
    const std::size_t n = x.size();
    const double mx = detail::mean(x);
    const double my = detail::mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    require(!detail::has_zero_variance(x), ErrorKind::zero_variance, "ols: regressor has zero variance");

    RegressionResult res;
    res.n = n;
    res.slope = sxy / sxx;
    res.intercept = my - res.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - res.intercept - res.slope * x[i];
        ssr += e * e;
    }
    const double s2 = ssr / static_cast<double>(n - 2);
    res.stderr_slope = std::sqrt(s2 / sxx);
    res.stderr_intercept = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    res.r_squared = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
    return res;
}

/// Two-sided Student-t interval with n - 2 degrees of freedom.
inline Interval slope_interval(const RegressionResult& r, double level = 0.95) {
    require(r.n >= 3 && level > 0.0 && level < 1.0, ErrorKind::invalid_argument, "slope_interval: bad input");
    boost::math::students_t dist(static_cast<double>(r.n - 2));
    const double q = boost::math::quantile(dist, 0.5 + level / 2.0);
    return {r.slope - q * r.stderr_slope, r.slope + q * r.stderr_slope};
}

inline Interval intercept_interval(const RegressionResult& r, double level = 0.95) {
    require(r.n >= 3 && level > 0.0 && level < 1.0, ErrorKind::invalid_argument, "intercept_interval: bad input");
    boost::math::students_t dist(static_cast<double>(r.n - 2));
    const double q = boost::math::quantile(dist, 0.5 + level / 2.0);
    return {r.intercept - q * r.stderr_intercept, r.intercept + q * r.stderr_intercept};
}

// Empirical quantile, linear interpolation between order statistics.
inline double quantile(std::vector<double> x, double p) {
    require(!x.empty(), ErrorKind::invalid_argument, "quantile of empty sample");
    std::sort(x.begin(), x.end());
    const double pos = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

/// Clamps x to its [lower_q, upper_q] empirical quantiles.
inline std::vector<double> winsorized(std::span<const double> x, double lower_q = 0.01, double upper_q = 0.99) {
    std::vector<double> v(x.begin(), x.end());
    const double lo = quantile(v, lower_q);
    const double hi = quantile(v, upper_q);
    for (double& e : v)
        e = std::clamp(e, lo, hi);
    return v;
}

} // namespace smiledyn
