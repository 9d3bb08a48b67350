#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "detail/stats.hpp"
#include "error.hpp"
#include "market_data.hpp"
#include "skew_term.hpp"
#include "table.hpp"

namespace smiledyn {

/// r = beta * Phi + eps fitted by OLS on demeaned series.
struct FactorFit {
    double beta = 0.0;
    double beta_stderr = 0.0;
    double sigma_phi = 0.0;
    double sigma_eps = 0.0;
    double sigma_total = 0.0;
    // beta * sigma_phi / sigma_total; in [-1, 1], non-negative when beta is.
    double ratio = 0.0;
    std::size_t n = 0;
};

struct FactorResult {
    FactorFit fit;
    std::vector<Date> dates;  // empty when fitted on bare aligned spans
    std::vector<double> stock;
    std::vector<double> market;
    std::vector<double> residual;
};

inline constexpr std::size_t min_factor_overlap = 60;

/// Fits the one-factor model on day-aligned stock and market returns.
/// Volatilities are population standard deviations so that
/// sigma_total^2 = beta^2 sigma_phi^2 + sigma_eps^2 holds by OLS orthogonality.
inline FactorResult fit_factor(std::span<const double> stock, std::span<const double> market) {
    require(stock.size() == market.size(), ErrorKind::invalid_argument, "fit_factor: series must be aligned");
    require(stock.size() >= min_factor_overlap, ErrorKind::too_few_samples,
            "fit_factor: need at least 60 overlapping days");
    require(!detail::has_zero_variance(market), ErrorKind::zero_variance, "fit_factor: market has zero variance");
    require(!detail::has_zero_variance(stock), ErrorKind::zero_variance, "fit_factor: stock has zero variance");

    const std::size_t n = stock.size();
    const auto s = detail::demeaned(stock);
    const auto m = detail::demeaned(market);
    double smm = 0.0, ssm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        smm += m[i] * m[i];
        ssm += s[i] * m[i];
    }
    FactorResult out;
    FactorFit& f = out.fit;
    f.n = n;
    f.beta = ssm / smm;
    out.stock.assign(stock.begin(), stock.end());
    out.market.assign(market.begin(), market.end());
    out.residual.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.residual[i] = stock[i] - f.beta * market[i];

    const double var_m = smm / static_cast<double>(n);
    const double var_e = detail::population_variance(out.residual);
    f.sigma_phi = std::sqrt(var_m);
    f.sigma_eps = std::sqrt(var_e);
    f.sigma_total = std::sqrt(detail::population_variance(stock));
    f.ratio = f.beta * f.sigma_phi / f.sigma_total;
    f.beta_stderr = std::sqrt(var_e * static_cast<double>(n) / static_cast<double>(n - 2) / smm);
    return out;
}

inline FactorResult fit_factor(const ReturnSeries& stock, const ReturnSeries& market) {
    auto pair = align(stock, market);
    require(pair.dates.size() >= min_factor_overlap, ErrorKind::too_few_samples,
            "fit_factor: need at least 60 overlapping days");
    auto out = fit_factor(pair.series_a, pair.series_b);
    out.dates = std::move(pair.dates);
    return out;
}

/// Three-way split of a stock's skew term structure, plus the neglected
/// idiosyncratic -> market term as a diagnostic.
///
/// Normalizations (sigma = total stock vol): eps->eps by sigma^3,
/// Phi->eps by sigma_phi * sigma^2, Phi->Phi by sigma_phi^3 (the market's own
/// skew), eps->Phi by sigma * sigma_phi^2. With these the weights are
/// (1, ratio, ratio^3) and ratio^2 for the diagnostic term.
struct SkewDecomposition {
    FactorFit fit;
    SkewCurve total;  // discrete-sum skew of the raw stock series
    SkewCurve zeta_eps_eps;
    SkewCurve zeta_phi_eps;
    SkewCurve zeta_phi_phi;
    SkewCurve zeta_eps_phi;
    double weight_eps_eps = 1.0;
    double weight_phi_eps = 0.0;
    double weight_phi_phi = 0.0;
    SkewCurve recombined;
    SkewCurve residual_term;
};

inline SkewDecomposition decompose_skew(std::span<const double> stock, std::span<const double> market,
                                        std::span<const int> maturities, unsigned jobs = 1) {
    const auto fr = fit_factor(stock, market);
    const FactorFit& f = fr.fit;
    const std::span<const double> phi = fr.market;
    const std::span<const double> eps = fr.residual;
    const std::span<const double> raw = fr.stock;

    const double s = f.sigma_total;
    const double sp = f.sigma_phi;
    SkewDecomposition d;
    d.fit = f;
    d.weight_phi_eps = f.ratio;
    d.weight_phi_phi = f.ratio * f.ratio * f.ratio;

    auto one = [&](SkewComponent c) { return cumulant_skew_curve(std::span(&c, 1), maturities, jobs); };
    d.total = one({raw, raw, s * s * s, 1.0, 1.0});
    d.zeta_eps_eps = one({eps, eps, s * s * s, 1.0, 1.0});
    d.zeta_phi_eps = one({phi, eps, sp * s * s, 3.0, 1.0});
    d.zeta_phi_phi = one({phi, phi, sp * sp * sp, 1.0, 1.0});
    d.zeta_eps_phi = one({eps, phi, s * sp * sp, 3.0, 1.0});

    const SkewComponent parts[] = {
        {eps, eps, s * s * s, 1.0, d.weight_eps_eps},
        {phi, eps, sp * s * s, 3.0, d.weight_phi_eps},
        {phi, phi, sp * sp * sp, 1.0, d.weight_phi_phi},
    };
    d.recombined = cumulant_skew_curve(parts, maturities, jobs);
    d.residual_term = one({eps, phi, s * sp * sp, 3.0, f.ratio * f.ratio});
    return d;
}

inline SkewDecomposition decompose_skew(const ReturnSeries& stock, const ReturnSeries& market,
                                        std::span<const int> maturities, unsigned jobs = 1) {
    const auto pair = align(stock, market);
    return decompose_skew(pair.series_a, pair.series_b, maturities, jobs);
}

inline Table decomposition_table(const SkewDecomposition& d) {
    Table t{{"T_days", "zeta_total", "zeta_eps_eps", "w_phi_eps_term", "w_phi_phi_term", "residual_term"}, {}};
    for (std::size_t i = 0; i < d.total.size(); ++i)
        t.rows.push_back({d.total.maturities[i], d.total.zeta[i], d.zeta_eps_eps.zeta[i],
                          d.weight_phi_eps * d.zeta_phi_eps.zeta[i], d.weight_phi_phi * d.zeta_phi_phi.zeta[i],
                          d.residual_term.zeta[i]});
    return t;
}

} // namespace smiledyn
