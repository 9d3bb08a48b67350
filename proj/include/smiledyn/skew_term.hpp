#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detail/format.hpp"
#include "detail/optimize.hpp"
#include "detail/parallel.hpp"
#include "detail/stats.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "table.hpp"

namespace smiledyn {

enum class SkewSource { discrete_sum, closed_form, direct_cumulant };

inline std::string to_string(SkewSource s) {
    switch (s) {
    case SkewSource::discrete_sum: return "discrete-sum";
    case SkewSource::closed_form: return "closed-form";
    case SkewSource::direct_cumulant: return "direct-cumulant";
    }
    return "unknown";
}

/// Skewness of T-day aggregated returns as a function of T (days).
/// `std_error` is empty when the curve comes from a model rather than data.
struct SkewCurve {
    std::vector<double> maturities;
    std::vector<double> zeta;
    std::vector<double> std_error;
    SkewSource source = SkewSource::discrete_sum;

    std::size_t size() const noexcept { return maturities.size(); }
};

/// Exponential leverage model g_L(t) = -A exp(-t / t_L).
struct ExpLeverageFit {
    double A = 0.0;
    double t_L = 1.0;
    double sse = 0.0;
    int lag_lo = 0;
    int lag_hi = 0;
    std::size_t lags_used = 0;
    bool no_leverage_detected = false;

    double model(double lag) const { return -A * std::exp(-lag / t_L); }
};

// ---------------------------------------------------------------------------
// Term structure from a leverage curve

/// zeta(T) = zeta1/sqrt(T) + 3/sqrt(T) * sum_{t=1}^{T-1} (1 - t/T) g(t).
///
/// Lags absent from `g` contribute zero and produce a warning.
inline double skew_discrete(double zeta1, const LeverageCurve& g, int T, Diagnostics* diag = nullptr) {
    require(T >= 1, ErrorKind::invalid_argument, "skew_discrete: T must be >= 1");
    double sum = 0.0;
    int missing = 0;
    for (int t = 1; t < T; ++t) {
        if (auto v = g.at(t))
            sum += (1.0 - static_cast<double>(t) / T) * *v;
        else
            ++missing;
    }
    if (missing > 0)
        warn(diag, "skew_discrete: " + detail::format_integer(missing) + " lag(s) below T=" +
                       detail::format_integer(T) + " missing from the leverage curve, treated as 0");
    const double root = std::sqrt(static_cast<double>(T));
    return zeta1 / root + 3.0 * sum / root;
}

inline SkewCurve skew_discrete_curve(double zeta1, const LeverageCurve& g, std::span<const int> maturities,
                                     Diagnostics* diag = nullptr) {
    SkewCurve c;
    c.source = SkewSource::discrete_sum;
    for (int T : maturities) {
        c.maturities.push_back(T);
        c.zeta.push_back(skew_discrete(zeta1, g, T, diag));
    }
    return c;
}

/// Leverage-induced part of the closed form, -(3A/T^{3/2}) (T t_L - t_L^2 (1 - e^{-T/t_L})).
inline double leverage_skew_term(double A, double t_L, double T) {
    require(t_L > 0.0 && T > 0.0, ErrorKind::invalid_argument, "leverage_skew_term: t_L and T must be positive");
    const double x = T / t_L;
    // x - (1 - e^{-x}), cancellation-free for small x
    const double phi = x < 1e-3 ? x * x * (0.5 - x / 6.0 + x * x / 24.0) : x + std::expm1(-x);
    return -3.0 * A * t_L * t_L * phi / (T * std::sqrt(T));
}

inline double skew_closed_form(double zeta1, double A, double t_L, double T) {
    require(t_L > 0.0 && T > 0.0, ErrorKind::invalid_argument, "skew_closed_form: t_L and T must be positive");
    return zeta1 / std::sqrt(T) + leverage_skew_term(A, t_L, T);
}

inline SkewCurve skew_closed_form_curve(double zeta1, double A, double t_L, std::span<const double> maturities) {
    SkewCurve c;
    c.source = SkewSource::closed_form;
    for (double T : maturities) {
        c.maturities.push_back(T);
        c.zeta.push_back(skew_closed_form(zeta1, A, t_L, T));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Term structure estimated from data, with standard errors

/// One driver -> responder contribution to an aggregated skewness. Raw
/// cumulants are divided by `normalization`. The same-day term <a_i b_i^2>
/// enters with `same_time_weight` (1 for a series acting on itself, 3 for a
/// cross term); lagged terms carry the factor 3(1 - t/T).
struct SkewComponent {
    std::span<const double> driver;
    std::span<const double> responder;
    double normalization = 1.0;
    double same_time_weight = 1.0;
    double weight = 1.0;
};

/// Weighted sum of skew components on a maturity grid.
///
/// Standard errors treat the per-day contributions
/// u_i = sum_k w_k a_i [s_k d_i + 3 sum_t (1 - t/T) d_{i+t}] / (norm_k sqrt(T))
/// as independent, which is exact for the leading term under independence.
inline SkewCurve cumulant_skew_curve(std::span<const SkewComponent> components, std::span<const int> maturities,
                                     unsigned jobs = 1) {
    require(!components.empty(), ErrorKind::invalid_argument, "cumulant_skew_curve: no components");
    require(!maturities.empty(), ErrorKind::invalid_argument, "cumulant_skew_curve: empty maturity grid");
    const std::size_t n = components.front().driver.size();
    const int t_max = *std::max_element(maturities.begin(), maturities.end());
    require(*std::min_element(maturities.begin(), maturities.end()) >= 1, ErrorKind::invalid_argument,
            "cumulant_skew_curve: maturities must be >= 1");
    require(n > static_cast<std::size_t>(t_max) + 10, ErrorKind::too_few_samples,
            "cumulant_skew_curve: series too short for the maturity grid");

    struct Prepared {
        std::vector<double> a;
        std::vector<double> d;
        std::vector<double> c;  // c[t] = mean_i a_i d_{i+t}
        double scale;
        double s0;
    };
    std::vector<Prepared> prep;
    for (const auto& comp : components) {
        require(comp.driver.size() == n && comp.responder.size() == n, ErrorKind::invalid_argument,
                "cumulant_skew_curve: components must be aligned");
        require(comp.normalization > 0.0, ErrorKind::invalid_argument,
                "cumulant_skew_curve: normalization must be positive");
        Prepared p;
        p.a = detail::demeaned(comp.driver);
        const auto b = detail::demeaned(comp.responder);
        const double var_b = detail::population_variance(b);
        p.d.resize(n);
        for (std::size_t j = 0; j < n; ++j)
            p.d[j] = b[j] * b[j] - var_b;
        p.c.assign(static_cast<std::size_t>(t_max), 0.0);
        for (std::size_t t = 0; t < p.c.size(); ++t) {
            double s = 0.0;
            for (std::size_t i = 0; i + t < n; ++i)
                s += p.a[i] * p.d[i + t];
            p.c[t] = s / static_cast<double>(n - t);
        }
        p.scale = comp.weight / comp.normalization;
        p.s0 = comp.same_time_weight;
        prep.push_back(std::move(p));
    }

    SkewCurve out;
    out.source = SkewSource::discrete_sum;
    out.maturities.assign(maturities.begin(), maturities.end());
    out.zeta.resize(maturities.size());
    out.std_error.resize(maturities.size());
    detail::parallel_for(maturities.size(), jobs, [&](std::size_t m) {
        const int T = maturities[m];
        const double root = std::sqrt(static_cast<double>(T));
        std::vector<double> coef(static_cast<std::size_t>(T));
        for (int t = 1; t < T; ++t)
            coef[t] = 3.0 * (1.0 - static_cast<double>(t) / T);

        double zeta = 0.0;
        for (const auto& p : prep) {
            double s = p.s0 * p.c[0];
            for (int t = 1; t < T; ++t)
                s += coef[t] * p.c[t];
            zeta += p.scale * s / root;
        }

        const std::size_t count = n - static_cast<std::size_t>(T) + 1;
        std::vector<double> u(count, 0.0);
        for (const auto& p : prep) {
            const double k = p.scale / root;
            for (std::size_t i = 0; i < count; ++i) {
                double s = p.s0 * p.d[i];
                for (int t = 1; t < T; ++t)
                    s += coef[t] * p.d[i + t];
                u[i] += k * p.a[i] * s;
            }
        }
        out.zeta[m] = zeta;
        out.std_error[m] = detail::mean_with_error(u).std_error;
    });
    return out;
}

/// Discrete-sum skew term structure of a single return series, estimating
/// zeta1 and g_L from the data.
inline SkewCurve estimate_skew_discrete(std::span<const double> r, std::span<const int> maturities, unsigned jobs = 1) {
    require(!detail::has_zero_variance(r), ErrorKind::zero_variance, "estimate_skew_discrete: zero variance");
    const double var = detail::population_variance(r);
    const SkewComponent self{r, r, var * std::sqrt(var), 1.0, 1.0};
    return cumulant_skew_curve(std::span(&self, 1), maturities, jobs);
}

/// Non-overlapping T-day sums; a trailing partial block is dropped.
inline std::vector<double> aggregate_returns(std::span<const double> r, int T) {
    require(T >= 1, ErrorKind::invalid_argument, "aggregate_returns: T must be >= 1");
    const auto len = static_cast<std::size_t>(T);
    std::vector<double> out(r.size() / len, 0.0);
    for (std::size_t b = 0; b < out.size(); ++b)
        for (std::size_t k = 0; k < len; ++k)
            out[b] += r[b * len + k];
    return out;
}

/// Third standardized cumulant of non-overlapping T-day aggregated returns.
inline SkewCurve estimate_skew_direct(std::span<const double> r, std::span<const int> maturities) {
    SkewCurve out;
    out.source = SkewSource::direct_cumulant;
    for (int T : maturities) {
        const auto agg = aggregate_returns(r, T);
        require(agg.size() >= 8, ErrorKind::too_few_samples,
                "estimate_skew_direct: fewer than 8 aggregated blocks at T=" + detail::format_integer(T));
        const auto ms = moment_summary(agg);
        out.maturities.push_back(T);
        out.zeta.push_back(ms.zeta1);
        out.std_error.push_back(ms.zeta1_stderr);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exponential fit

struct LagRange {
    int lo = 1;
    int hi = 250;
};

enum class FitWeighting { inverse_variance, unit };

struct FitOptions {
    // Default: all available lags up to 250, then refit on 1..min(5 t_L, 250).
    std::optional<LagRange> lag_range;
    FitWeighting weighting = FitWeighting::inverse_variance;
    double t_L_min = 1.0;
    double t_L_max = 250.0;
    int grid_points = 200;
    unsigned jobs = 1;
};

namespace detail {

struct FitData {
    std::vector<double> lag;
    std::vector<double> value;
    std::vector<double> weight;
};

struct ProfilePoint {
    double A;
    double sse;
};

// Optimal non-negative A for fixed t_L and the resulting weighted SSE.
inline ProfilePoint profile_amplitude(const FitData& d, double t_L) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d.lag.size(); ++i) {
        const double e = std::exp(-d.lag[i] / t_L);
        num += d.weight[i] * d.value[i] * e;
        den += d.weight[i] * e * e;
    }
    const double A = den > 0.0 ? std::max(0.0, -num / den) : 0.0;
    double sse = 0.0;
    for (std::size_t i = 0; i < d.lag.size(); ++i) {
        const double r = d.value[i] + A * std::exp(-d.lag[i] / t_L);
        sse += d.weight[i] * r * r;
    }
    return {A, sse};
}

inline FitData select_lags(const LeverageCurve& g, LagRange range, FitWeighting weighting) {
    FitData d;
    std::size_t in_range = 0, infinite_se = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.lags[i] < range.lo || g.lags[i] > range.hi || !std::isfinite(g.values[i]))
            continue;
        ++in_range;
        double w = 1.0;
        if (weighting == FitWeighting::inverse_variance) {
            const double se = g.std_error[i];
            if (std::isinf(se))
                ++infinite_se;
            if (!(std::isfinite(se) && se > 0.0))
                continue;
            w = 1.0 / (se * se);
        }
        d.lag.push_back(g.lags[i]);
        d.value.push_back(g.values[i]);
        d.weight.push_back(w);
    }
    require(in_range == 0 || infinite_se < in_range, ErrorKind::degenerate, "fit_exponential: all weights are zero");
    return d;
}

inline ExpLeverageFit fit_exponential_on(const LeverageCurve& g, LagRange range, const FitOptions& opts) {
    const FitData data = select_lags(g, range, opts.weighting);
    require(data.lag.size() >= 5, ErrorKind::too_few_samples,
            "fit_exponential: fewer than 5 lags with finite stderr in range");

    const int npts = std::max(opts.grid_points, 3);
    const double log_lo = std::log(opts.t_L_min), log_hi = std::log(opts.t_L_max);
    std::vector<double> grid(static_cast<std::size_t>(npts));
    std::vector<ProfilePoint> prof(grid.size());
    for (int k = 0; k < npts; ++k)
        grid[k] = std::exp(log_lo + (log_hi - log_lo) * k / (npts - 1));
    parallel_for(grid.size(), opts.jobs, [&](std::size_t k) { prof[k] = profile_amplitude(data, grid[k]); });

    // strict comparison in ascending t_L: ties resolve to the smaller t_L
    std::size_t best = 0;
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (prof[k].sse < prof[best].sse)
            best = k;

    ExpLeverageFit fit;
    fit.lag_lo = static_cast<int>(data.lag.front());
    fit.lag_hi = static_cast<int>(data.lag.back());
    fit.lags_used = data.lag.size();
    fit.t_L = grid[best];
    fit.A = prof[best].A;
    fit.sse = prof[best].sse;

    if (fit.A > 0.0) {
        const double lo = std::log(grid[best == 0 ? 0 : best - 1]);
        const double hi = std::log(grid[std::min(best + 1, grid.size() - 1)]);
        const double x = golden_section_minimize(
            [&](double lt) { return profile_amplitude(data, std::exp(lt)).sse; }, lo, hi, 1e-12);
        const auto refined = profile_amplitude(data, std::exp(x));
        if (refined.sse < fit.sse) {
            fit.t_L = std::exp(x);
            fit.A = refined.A;
            fit.sse = refined.sse;
        }
    }
    fit.no_leverage_detected = !(fit.A > 0.0);
    return fit;
}

} // namespace detail

/// Weighted least-squares fit of g(t) ~ -A exp(-t/t_L) with A >= 0.
///
/// The amplitude is profiled out in closed form on a log-spaced t_L grid and
/// the best grid point is refined by golden-section search. A curve with no
/// negative leverage returns A = 0 with `no_leverage_detected` set.
inline ExpLeverageFit fit_exponential(const LeverageCurve& g, const FitOptions& opts = {}) {
    if (opts.lag_range) {
        require(opts.lag_range->lo <= opts.lag_range->hi, ErrorKind::invalid_argument,
                "fit_exponential: empty lag range");
        return detail::fit_exponential_on(g, *opts.lag_range, opts);
    }
    auto fit = detail::fit_exponential_on(g, {1, 250}, opts);
    if (fit.no_leverage_detected)
        return fit;
    const int hi = std::min(250, static_cast<int>(std::lround(5.0 * fit.t_L)));
    if (hi < fit.lag_hi && hi >= 5) {
        try {
            return detail::fit_exponential_on(g, {1, hi}, opts);
        } catch (const Error&) {
            return fit;
        }
    }
    return fit;
}

inline ExpLeverageFit fit_exponential(const LeverageCurve& g, LagRange range, const FitOptions& opts = {}) {
    FitOptions o = opts;
    o.lag_range = range;
    return fit_exponential(g, o);
}

// ---------------------------------------------------------------------------
// Exports

inline Table skew_table(const SkewCurve& c) {
    Table t{{"T_days", "zeta", "source"}, {}};
    for (std::size_t i = 0; i < c.size(); ++i)
        t.rows.push_back({c.maturities[i], c.zeta[i], to_string(c.source)});
    return t;
}

inline Table fit_table(const ExpLeverageFit& f) {
    Table t{{"A", "t_L_days", "sse", "lag_lo", "lag_hi"}, {}};
    t.rows.push_back({f.A, f.t_L, f.sse, static_cast<long long>(f.lag_lo), static_cast<long long>(f.lag_hi)});
    return t;
}

} // namespace smiledyn
