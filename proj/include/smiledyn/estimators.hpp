#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "detail/parallel.hpp"
#include "detail/stats.hpp"
#include "error.hpp"
#include "market_data.hpp"
#include "random.hpp"
#include "table.hpp"

namespace smiledyn {

/// Sample moments of daily returns. zeta1 and kappa1 are the third
/// standardized central moment and the excess kurtosis; the *_stderr fields
/// are asymptotic (influence-function) standard errors.
struct MomentSummary {
    double mean = 0.0;
    double sigma = 0.0;
    double zeta1 = 0.0;
    double kappa1 = 0.0;
    std::size_t n = 0;
    double sigma_stderr = 0.0;
    double zeta1_stderr = 0.0;
    double kappa1_stderr = 0.0;
};

/// Normalized lagged cumulant <a_i b^2_{i+t}>_c / norm, one row per lag.
struct LeverageCurve {
    std::vector<int> lags;
    std::vector<double> values;
    std::vector<double> std_error;
    std::vector<std::size_t> n_eff;

    std::size_t size() const noexcept { return lags.size(); }

    // Value at `lag`, or nullopt if that lag is absent.
    std::optional<double> at(int lag) const {
        // lags are sorted, usually dense from 1
        if (lag >= 1 && static_cast<std::size_t>(lag) <= lags.size() && lags[lag - 1] == lag)
            return values[lag - 1];
        for (std::size_t i = 0; i < lags.size(); ++i)
            if (lags[i] == lag)
                return values[i];
        return std::nullopt;
    }
};

enum class StderrMethod { asymptotic, block_bootstrap };

struct LeverageOptions {
    StderrMethod stderr_method = StderrMethod::asymptotic;
    std::size_t block_length = 20;
    std::size_t bootstrap_replicates = 200;
    std::uint64_t bootstrap_seed = 20080101;
    // Lags with fewer products than this are dropped.
    std::size_t min_n_eff = 30;
    // Overrides the default sigma^3 / sigma_a*sigma_b^2 denominator.
    std::optional<double> normalization;
    unsigned jobs = 1;
};

// ---------------------------------------------------------------------------

inline MomentSummary moment_summary(std::span<const double> r) {
    require(r.size() >= 4, ErrorKind::too_few_samples, "moment_summary: need at least 4 returns");
    require(!detail::has_zero_variance(r), ErrorKind::zero_variance, "moment_summary: series has zero variance");
    const auto n = static_cast<double>(r.size());
    MomentSummary s;
    s.n = r.size();
    s.mean = detail::mean(r);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : r) {
        const double d = x - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double sd = std::sqrt(m2);
    s.sigma = std::sqrt(m2 * n / (n - 1.0));
    s.zeta1 = m3 / (m2 * sd);
    s.kappa1 = m4 / (m2 * m2) - 3.0;

    // influence functions of sigma, skewness and kurtosis
    const double beta2 = s.kappa1 + 3.0;
    double v_sigma = 0.0, v_skew = 0.0, v_kurt = 0.0;
    for (double x : r) {
        const double z = (x - s.mean) / sd;
        const double z2 = z * z;
        const double if_sigma = sd * (z2 - 1.0) / 2.0;
        const double if_skew = z2 * z - s.zeta1 - 3.0 * z - 1.5 * s.zeta1 * (z2 - 1.0);
        const double if_kurt = z2 * z2 - beta2 - 2.0 * beta2 * (z2 - 1.0) - 4.0 * s.zeta1 * z;
        v_sigma += if_sigma * if_sigma;
        v_skew += if_skew * if_skew;
        v_kurt += if_kurt * if_kurt;
    }
    s.sigma_stderr = std::sqrt(v_sigma / n / n);
    s.zeta1_stderr = std::sqrt(v_skew / n / n);
    s.kappa1_stderr = std::sqrt(v_kurt / n / n);
    return s;
}

inline MomentSummary moment_summary(const ReturnSeries& r) { return moment_summary(r.values()); }

namespace detail {

// Moving-block bootstrap standard error of the mean of x.
inline double block_bootstrap_stderr(std::span<const double> x, std::size_t block_length, std::size_t replicates,
                                     Engine& rng) {
    const std::size_t m = x.size();
    const std::size_t len = std::clamp<std::size_t>(block_length, 1, m);
    const std::size_t blocks = (m + len - 1) / len;
    std::uniform_int_distribution<std::size_t> start(0, m - len);
    std::vector<double> means(replicates);
    for (auto& out : means) {
        double sum = 0.0;
        std::size_t taken = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            const std::size_t s = start(rng);
            for (std::size_t k = 0; k < len && taken < m; ++k, ++taken)
                sum += x[s + k];
        }
        out = sum / static_cast<double>(m);
    }
    return std::sqrt(population_variance(means) * static_cast<double>(replicates) /
                     static_cast<double>(std::max<std::size_t>(replicates - 1, 1)));
}

} // namespace detail

/// Leverage correlation between a driver and a responder series.
///
/// value(t) = mean_i[a_i (b_{i+t}^2 - sigma_b^2)] / norm with a, b the demeaned
/// driver and responder. The default norm is sigma^3 when driver and responder
/// are the same series and sigma_a * sigma_b^2 otherwise. Both series must be
/// aligned day by day.
inline LeverageCurve leverage_correlation(std::span<const double> driver, std::span<const double> responder,
                                          int max_lag, const LeverageOptions& opts = {}) {
    require(max_lag >= 1, ErrorKind::invalid_argument, "leverage_correlation: max_lag must be >= 1");
    require(driver.size() == responder.size(), ErrorKind::invalid_argument,
            "leverage_correlation: driver and responder must be aligned");
    const std::size_t n = driver.size();
    require(n > static_cast<std::size_t>(max_lag) + 10, ErrorKind::too_few_samples,
            "leverage_correlation: series too short for max_lag");
    require(!detail::has_zero_variance(driver) && !detail::has_zero_variance(responder), ErrorKind::zero_variance,
            "leverage_correlation: zero-variance input");

    const bool same = driver.data() == responder.data();
    const auto a = detail::demeaned(driver);
    const auto b = detail::demeaned(responder);
    const double var_a = detail::population_variance(a);
    const double var_b = detail::population_variance(b);
    const double norm = opts.normalization.value_or(same ? var_a * std::sqrt(var_a) : std::sqrt(var_a) * var_b);
    require(norm > 0.0, ErrorKind::invalid_argument, "leverage_correlation: normalization must be positive");

    std::vector<double> d(n);
    for (std::size_t j = 0; j < n; ++j)
        d[j] = b[j] * b[j] - var_b;

    const auto lags = static_cast<std::size_t>(max_lag);
    std::vector<double> value(lags), err(lags);
    detail::parallel_for(lags, opts.jobs, [&](std::size_t k) {
        const std::size_t t = k + 1;
        const std::size_t m = n - t;
        std::vector<double> p(m);
        for (std::size_t i = 0; i < m; ++i)
            p[i] = a[i] * d[i + t];
        const auto mw = detail::mean_with_error(p);
        value[k] = mw.mean / norm;
        if (opts.stderr_method == StderrMethod::block_bootstrap) {
            Engine rng = make_engine(opts.bootstrap_seed, t);
            err[k] = detail::block_bootstrap_stderr(p, opts.block_length, opts.bootstrap_replicates, rng) / norm;
        } else {
            err[k] = mw.std_error / norm;
        }
    });

    LeverageCurve curve;
    for (std::size_t k = 0; k < lags; ++k) {
        const std::size_t m = n - (k + 1);
        if (m < opts.min_n_eff)
            continue;
        curve.lags.push_back(static_cast<int>(k + 1));
        curve.values.push_back(value[k]);
        curve.std_error.push_back(err[k]);
        curve.n_eff.push_back(m);
    }
    return curve;
}

/// Auto-leverage g_L(t) = <r_i r^2_{i+t}>_c / sigma^3.
inline LeverageCurve leverage_correlation(std::span<const double> r, int max_lag, const LeverageOptions& opts = {}) {
    return leverage_correlation(r, r, max_lag, opts);
}

inline LeverageCurve leverage_correlation(const ReturnSeries& r, int max_lag, const LeverageOptions& opts = {}) {
    return leverage_correlation(r.values(), r.values(), max_lag, opts);
}

/// Cross-leverage of two dated series after an inner join on dates.
inline LeverageCurve leverage_correlation(const ReturnSeries& driver, const ReturnSeries& responder, int max_lag,
                                          const LeverageOptions& opts = {}) {
    const auto pair = align(driver, responder);
    return leverage_correlation(pair.series_a, pair.series_b, max_lag, opts);
}

inline Table leverage_table(const LeverageCurve& g) {
    Table t{{"lag", "value", "stderr", "n_eff"}, {}};
    for (std::size_t i = 0; i < g.size(); ++i)
        t.rows.push_back({static_cast<long long>(g.lags[i]), g.values[i], g.std_error[i],
                          static_cast<long long>(g.n_eff[i])});
    return t;
}

// ---------------------------------------------------------------------------
// Three-point cumulant diagnostic

struct ThreePointCell {
    int j = 0;
    int k = 0;
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

struct ThreePointScan {
    std::vector<ThreePointCell> cells;
    // Share of cells with |value| <= 2 stderr.
    double fraction_within_2se = 0.0;
};

namespace detail {

inline ThreePointCell three_point_cell(std::span<const double> a, double sigma3, int j, int k) {
    const std::size_t m = a.size() - static_cast<std::size_t>(k);
    std::vector<double> p(m);
    for (std::size_t i = 0; i < m; ++i)
        p[i] = a[i] * a[i + j] * a[i + k];
    const auto mw = mean_with_error(p);
    return {j, k, mw.mean / sigma3, mw.std_error / sigma3, m};
}

} // namespace detail

/// Standardized <r_i r_{i+j} r_{i+k}>_c at non-coinciding times, 1 <= j < k.
inline ThreePointCell three_point_cumulant(std::span<const double> r, int j, int k) {
    require(j >= 1 && j < k, ErrorKind::invalid_argument, "three_point_cumulant: requires 1 <= j < k");
    require(r.size() > 2 * static_cast<std::size_t>(k), ErrorKind::too_few_samples,
            "three_point_cumulant: series too short");
    require(!detail::has_zero_variance(r), ErrorKind::zero_variance, "three_point_cumulant: zero variance");
    const auto a = detail::demeaned(r);
    const double var = detail::population_variance(a);
    return detail::three_point_cell(a, var * std::sqrt(var), j, k);
}

inline ThreePointScan three_point_cumulant_scan(std::span<const double> r, int max_span, unsigned jobs = 1) {
    require(max_span >= 2, ErrorKind::invalid_argument, "three_point_cumulant_scan: max_span must be >= 2");
    require(r.size() > 2 * static_cast<std::size_t>(max_span), ErrorKind::too_few_samples,
            "three_point_cumulant_scan: series too short");
    require(!detail::has_zero_variance(r), ErrorKind::zero_variance, "three_point_cumulant_scan: zero variance");
    const auto a = detail::demeaned(r);
    const double var = detail::population_variance(a);
    const double sigma3 = var * std::sqrt(var);

    ThreePointScan scan;
    for (int k = 2; k <= max_span; ++k)
        for (int j = 1; j < k; ++j)
            scan.cells.push_back({j, k, 0.0, 0.0, 0});
    detail::parallel_for(scan.cells.size(), jobs, [&](std::size_t c) {
        scan.cells[c] = detail::three_point_cell(a, sigma3, scan.cells[c].j, scan.cells[c].k);
    });
    std::size_t within = 0;
    for (const auto& c : scan.cells)
        if (std::abs(c.value) <= 2.0 * c.std_error)
            ++within;
    scan.fraction_within_2se = static_cast<double>(within) / static_cast<double>(scan.cells.size());
    return scan;
}

} // namespace smiledyn
