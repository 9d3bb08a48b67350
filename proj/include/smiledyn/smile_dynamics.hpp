#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detail/format.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "market_data.hpp"
#include "regression.hpp"
#include "table.hpp"

namespace smiledyn {

enum class GammaRule { theoretical, sticky_strike, sticky_delta, implied };

inline std::string to_string(GammaRule r) {
    switch (r) {
    case GammaRule::theoretical: return "theoretical";
    case GammaRule::sticky_strike: return "sticky-strike";
    case GammaRule::sticky_delta: return "sticky-delta";
    case GammaRule::implied: return "implied";
    }
    return "unknown";
}

inline std::optional<GammaRule> parse_gamma_rule(const std::string& s) {
    if (s == "theoretical" || s == "th")
        return GammaRule::theoretical;
    if (s == "sticky-strike" || s == "ss")
        return GammaRule::sticky_strike;
    if (s == "sticky-delta" || s == "sd")
        return GammaRule::sticky_delta;
    if (s == "implied" || s == "imp")
        return GammaRule::implied;
    return std::nullopt;
}

/// Implied leverage coefficient gamma(T) on a maturity grid.
struct GammaCurve {
    std::vector<double> maturities;
    std::vector<double> gamma;
    GammaRule rule = GammaRule::theoretical;
    double alpha = 0.0;
    double t_L = 0.0;
};

/// alpha = A / (2 sigma(0)), sigma(0) the daily realized vol of the underlying.
inline double implied_leverage_alpha(double A, double sigma0) {
    require(sigma0 > 0.0, ErrorKind::invalid_argument, "alpha: sigma0 must be positive");
    return A / (2.0 * sigma0);
}

/// Cross-sectional alpha: the mean of A_i / sigma_i, halved.
inline double pooled_alpha(std::span<const double> amplitudes, std::span<const double> sigmas) {
    require(amplitudes.size() == sigmas.size() && !amplitudes.empty(), ErrorKind::invalid_argument,
            "pooled_alpha: need matching, non-empty inputs");
    double s = 0.0;
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        require(sigmas[i] > 0.0, ErrorKind::invalid_argument, "pooled_alpha: sigma must be positive");
        s += amplitudes[i] / sigmas[i];
    }
    return s / static_cast<double>(amplitudes.size()) / 2.0;
}

namespace detail {

inline void check_gamma_inputs(double alpha, double t_L, double T) {
    require(T > 0.0 && t_L > 0.0 && alpha >= 0.0, ErrorKind::invalid_argument,
            "gamma: T and t_L must be positive and alpha non-negative");
}

// (1 - (1 + x) e^{-x}) / x^2
inline double theoretical_shape(double x) {
    if (x < 1e-2)
        return 0.5 + x * (-1.0 / 3.0 + x * (1.0 / 8.0 + x * (-1.0 / 30.0 + x / 144.0)));
    return (-std::expm1(-x) - x * std::exp(-x)) / (x * x);
}

// 1/x - (1 - e^{-x}) / x^2
inline double sticky_strike_shape(double x) {
    if (x < 1e-2)
        return 0.5 + x * (-1.0 / 6.0 + x * (1.0 / 24.0 + x * (-1.0 / 120.0 + x / 720.0)));
    return (x + std::expm1(-x)) / (x * x);
}

} // namespace detail

inline double gamma_theoretical(double alpha, double t_L, double T) {
    detail::check_gamma_inputs(alpha, t_L, T);
    return -alpha * detail::theoretical_shape(T / t_L);
}

inline double gamma_sticky_strike(double alpha, double t_L, double T) {
    detail::check_gamma_inputs(alpha, t_L, T);
    return -alpha * detail::sticky_strike_shape(T / t_L);
}

inline double gamma_sticky_delta(double /*T*/) { return 0.0; }

/// Theoretical gamma including the daily-skewness term zeta1 / (6 sigma0 T).
inline double gamma_with_zeta1(double alpha, double t_L, double T, double zeta1, double sigma0) {
    require(sigma0 > 0.0, ErrorKind::invalid_argument, "gamma_with_zeta1: sigma0 must be positive");
    return gamma_theoretical(alpha, t_L, T) + zeta1 / (6.0 * sigma0 * T);
}

struct Zeta1Contribution {
    double gamma = 0.0;       // with the zeta1 term
    double zeta1_term = 0.0;
    double share = 0.0;       // |zeta1_term| / |gamma_theoretical|
};

inline Zeta1Contribution zeta1_contribution(double alpha, double t_L, double T, double zeta1, double sigma0) {
    const double base = gamma_theoretical(alpha, t_L, T);
    Zeta1Contribution c;
    c.gamma = gamma_with_zeta1(alpha, t_L, T, zeta1, sigma0);
    c.zeta1_term = c.gamma - base;
    c.share = base != 0.0 ? std::abs(c.zeta1_term) / std::abs(base) : std::abs(c.zeta1_term);
    return c;
}

inline double gamma_for_rule(GammaRule rule, double alpha, double t_L, double T) {
    switch (rule) {
    case GammaRule::theoretical: return gamma_theoretical(alpha, t_L, T);
    case GammaRule::sticky_strike: return gamma_sticky_strike(alpha, t_L, T);
    case GammaRule::sticky_delta: return gamma_sticky_delta(T);
    case GammaRule::implied: break;
    }
    throw Error(ErrorKind::invalid_argument, "gamma: the implied rule is estimated from data, not computed");
}

inline GammaCurve gamma_curve(GammaRule rule, double alpha, double t_L, std::span<const double> maturities) {
    GammaCurve c;
    c.rule = rule;
    c.alpha = alpha;
    c.t_L = t_L;
    for (double T : maturities) {
        c.maturities.push_back(T);
        c.gamma.push_back(gamma_for_rule(rule, alpha, t_L, T));
    }
    return c;
}

/// Expected change of the future realized vol over [0, T] after a return r,
/// [1/(2T) int_0^T g_L(u) du] r, for the exponential model. Same units as sigma
/// when g_L is normalized by sigma^3; divide by sigma(0) for the relative change.
inline double expected_vol_change(double A, double t_L, double T, double r) {
    require(T > 0.0 && t_L > 0.0, ErrorKind::invalid_argument, "expected_vol_change: T and t_L must be positive");
    const double x = T / t_L;
    const double decay = x < 1e-8 ? 1.0 - x / 2.0 : -std::expm1(-x) / x;  // (1 - e^{-x}) / x
    return -(A / 2.0) * decay * r;
}

/// Same for a measured curve: trapezoid on integer lags with g(0) taken as g(1).
inline double expected_vol_change(const LeverageCurve& g, double T, double r, Diagnostics* diag = nullptr) {
    require(T > 0.0, ErrorKind::invalid_argument, "expected_vol_change: T must be positive");
    int missing = 0;
    auto value = [&](int lag) {
        if (auto v = g.at(std::max(lag, 1)))
            return *v;
        ++missing;
        return 0.0;
    };
    const int whole = static_cast<int>(std::floor(T));
    double integral = 0.0;
    for (int k = 0; k < whole; ++k)
        integral += 0.5 * (value(k) + value(k + 1));
    const double frac = T - whole;
    if (frac > 0.0) {
        const double g0 = value(whole), g1 = value(whole + 1);
        integral += frac * (g0 + 0.5 * frac * (g1 - g0));
    }
    if (missing > 0)
        warn(diag, "expected_vol_change: missing lags treated as 0");
    return integral / (2.0 * T) * r;
}

/// ATM vol move implied by a sticky-strike smile, zeta(T) / (6 S sqrt(T)) dS.
inline double sticky_strike_atm_shift(double zeta_T, double spot, double T, double dS) {
    require(spot > 0.0 && T > 0.0, ErrorKind::invalid_argument, "sticky_strike_atm_shift: spot and T must be positive");
    return zeta_T / (6.0 * spot * std::sqrt(T)) * dS;
}

// ---------------------------------------------------------------------------
// Empirical implied leverage

struct ImpliedGammaOptions {
    // Clamp both variables to their 1%-99% quantiles before regressing.
    bool winsorize = false;
    // Regress absolute vol changes instead of relative ones (diagnostic only).
    bool absolute_change = false;
    std::size_t min_pairs = 30;
};

struct ImpliedGamma {
    RegressionResult regression;
    double requested_T = 0.0;
    double tenor = 0.0;
    double tenor_distance = 0.0;
    std::vector<std::string> warnings;
};

/// Regresses (Sigma_d - Sigma_{d-1}) / Sigma_{d-1} on the return dated d, for
/// consecutive trading days d-1, d of the return series. The tenor nearest to
/// T is used (ties go to the shorter tenor).
inline ImpliedGamma estimate_gamma_implied(const AtmVolPanel& panel, const ReturnSeries& returns, double T,
                                           const ImpliedGammaOptions& opts = {}) {
    require(T > 0.0, ErrorKind::invalid_argument, "estimate_gamma_implied: T must be positive");
    ImpliedGamma out;
    out.requested_T = T;
    const auto mats = panel.maturities();
    std::size_t col = 0;
    for (std::size_t j = 1; j < mats.size(); ++j)
        if (std::abs(mats[j] - T) < std::abs(mats[col] - T))
            col = j;
    out.tenor = mats[col];
    out.tenor_distance = std::abs(mats[col] - T);
    if (out.tenor_distance > 0.0)
        out.warnings.push_back("requested T=" + detail::format_number(T) + " not quoted; using nearest tenor " +
                               detail::format_number(out.tenor) + " (distance " +
                               detail::format_number(out.tenor_distance) + " days)");

    const auto rdates = returns.dates();
    const auto rvals = returns.values();
    const auto pdates = panel.dates();
    std::vector<double> x, y;
    for (std::size_t i = 1; i < panel.rows(); ++i) {
        if (!panel.has(i, col) || !panel.has(i - 1, col))
            continue;
        const auto it = std::lower_bound(rdates.begin(), rdates.end(), pdates[i]);
        if (it == rdates.end() || *it != pdates[i] || it == rdates.begin() || *(it - 1) != pdates[i - 1])
            continue;
        const auto k = static_cast<std::size_t>(it - rdates.begin());
        const double prev = panel.vol(i - 1, col), cur = panel.vol(i, col);
        x.push_back(rvals[k]);
        y.push_back(opts.absolute_change ? cur - prev : (cur - prev) / prev);
    }
    require(x.size() >= std::max<std::size_t>(opts.min_pairs, 3), ErrorKind::too_few_samples,
            "estimate_gamma_implied: only " + detail::format_integer(static_cast<long long>(x.size())) +
                " aligned (vol change, return) pairs at T=" + detail::format_number(out.tenor));
    if (opts.winsorize) {
        x = winsorized(x);
        y = winsorized(y);
    }
    out.regression = ols(x, y);
    return out;
}

struct CapPoint {
    double market_cap = 0.0;
    double gamma = 0.0;
};

/// OLS of gamma on log10(market cap). Multiply the slope by 1/ln(10) for the
/// natural-log coefficient.
inline RegressionResult mcap_regression(std::span<const CapPoint> points) {
    require(points.size() >= 3, ErrorKind::too_few_samples, "mcap_regression: need at least 3 points");
    std::vector<double> x, y;
    for (const auto& p : points) {
        require(p.market_cap > 0.0, ErrorKind::invalid_argument, "mcap_regression: caps must be positive");
        x.push_back(std::log10(p.market_cap));
        y.push_back(p.gamma);
    }
    require(!detail::has_zero_variance(x), ErrorKind::degenerate, "mcap_regression: all caps are equal");
    return ols(x, y);
}

inline double natural_log_slope(double log10_slope) { return log10_slope / std::log(10.0); }

// ---------------------------------------------------------------------------
// Exports

inline Table gamma_table(std::span<const GammaCurve> curves) {
    Table t{{"T_days", "gamma", "rule", "alpha", "t_L_days"}, {}};
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.maturities.size(); ++i)
            t.rows.push_back({c.maturities[i], c.gamma[i], to_string(c.rule), c.alpha, c.t_L});
    return t;
}

inline Table implied_gamma_header() { return Table{{"ticker", "T_days", "gamma_imp", "stderr", "n"}, {}}; }

inline void add_implied_gamma_row(Table& t, const std::string& ticker, const ImpliedGamma& g) {
    t.add_row({ticker, g.requested_T, g.regression.slope, g.regression.stderr_slope,
               static_cast<long long>(g.regression.n)});
}

inline Table mcap_header() { return Table{{"T_days", "a", "b", "stderr_b", "n"}, {}}; }

inline void add_mcap_row(Table& t, double T, const RegressionResult& r) {
    t.add_row({T, r.intercept, r.slope, r.stderr_slope, static_cast<long long>(r.n)});
}

} // namespace smiledyn
