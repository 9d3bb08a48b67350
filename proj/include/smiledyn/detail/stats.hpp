#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "../error.hpp"

namespace smiledyn::detail {

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x)
        s += v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

// Population (1/n) variance about the sample mean.
inline double population_variance(std::span<const double> x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x)
        s += (v - m) * (v - m);
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

inline std::vector<double> demeaned(std::span<const double> x) {
    const double m = mean(x);
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out)
        v -= m;
    return out;
}

// Mean and standard error of the mean under an iid approximation.
struct MeanWithError {
    double mean = 0.0;
    double std_error = 0.0;
};

inline MeanWithError mean_with_error(std::span<const double> x) {
    const std::size_t n = x.size();
    MeanWithError out;
    if (n == 0)
        return out;
    out.mean = mean(x);
    if (n < 2)
        return out;
    double s = 0.0;
    for (double v : x)
        s += (v - out.mean) * (v - out.mean);
    out.std_error = std::sqrt(s / static_cast<double>(n - 1) / static_cast<double>(n));
    return out;
}

// True when the spread of x is indistinguishable from rounding noise.
inline bool has_zero_variance(std::span<const double> x) {
    double scale = 0.0;
    for (double v : x)
        scale = std::max(scale, std::abs(v));
    const double var = population_variance(x);
    return !(var > 1e-28 * scale * scale) || var == 0.0;
}

} // namespace smiledyn::detail
