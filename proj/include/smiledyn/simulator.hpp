#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "date.hpp"
#include "detail/format.hpp"
#include "detail/parallel.hpp"
#include "error.hpp"
#include "market_data.hpp"
#include "random.hpp"
#include "smile_dynamics.hpp"

namespace smiledyn {

/// Retarded-volatility generator
///
///   r_t = sigma_t xi_t,  sigma_t = sigma_bar (1 - w sum_{k>=1} e^{-k/t_L} xi_{t-k}),
///
/// with xi iid standard normal. To first order in w its leverage correlation
/// is g_L(t) = -2 w e^{-t/t_L}, i.e. A = 2w.
struct SimConfig {
    std::size_t n = 5000;
    double sigma_bar = 0.01;
    double w = 0.0;
    double t_L = 20.0;
    std::uint64_t seed = 1;
};

/// One-factor universe: stock_i = beta_i Phi + eps_i, with Phi and eps_i from
/// independent generators. A non-zero cross_w[i] lets past market shocks raise
/// the idiosyncratic vol of stock i with decay time cross_t_L.
///
/// All paths have market.n days. Streams derive from `seed` (market: 0,
/// stock i: i + 1); the seed fields of the member configs are not used.
struct FactorSimConfig {
    SimConfig market;
    std::vector<double> betas;
    std::vector<SimConfig> idio;
    std::vector<double> caps;
    std::vector<double> cross_w;  // empty: no cross kernel
    double cross_t_L = 20.0;
    std::uint64_t seed = 1;
};

struct Universe {
    ReturnSeries market;
    std::vector<ReturnSeries> stocks;
    std::vector<InstrumentMeta> metadata;
};

inline constexpr double vol_floor_fraction = 0.05;
inline constexpr double max_floor_binding_share = 1e-3;
inline constexpr double panel_vol_floor = 1e-4;

inline Date default_start_date() { return Date{std::chrono::year{2000} / std::chrono::January / 3}; }

inline void validate(const SimConfig& cfg) {
    require(cfg.n >= 1000, ErrorKind::invalid_argument, "simulator: n must be >= 1000");
    require(cfg.sigma_bar > 0.0, ErrorKind::invalid_argument, "simulator: sigma_bar must be positive");
    require(cfg.w >= 0.0 && cfg.w < 0.5, ErrorKind::invalid_argument, "simulator: w must lie in [0, 0.5)");
    require(cfg.t_L > 0.0, ErrorKind::invalid_argument, "simulator: t_L must be positive");
}

namespace detail {

inline std::size_t burn_in_days(double t_L) { return static_cast<std::size_t>(std::ceil(10.0 * t_L)); }

struct LeveragedPath {
    std::vector<double> returns;  // kept days only
    std::vector<double> shocks;   // every generated day, burn-in included
};

// Generates burn + n days and keeps the last n. `cross` holds another path's
// shocks over the same burn + n days.
inline LeveragedPath leveraged_path(std::size_t n, std::size_t burn, double sigma_bar, double w, double t_L,
                                    Engine& rng, std::span<const double> cross = {}, double cross_w = 0.0,
                                    double cross_t_L = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double decay = std::exp(-1.0 / t_L);
    const double cross_decay = std::exp(-1.0 / cross_t_L);
    const double floor = vol_floor_fraction * sigma_bar;
    LeveragedPath out;
    out.returns.reserve(n);
    out.shocks.reserve(burn + n);
    double memory = 0.0, cross_memory = 0.0;
    std::size_t floored = 0;
    for (std::size_t t = 0; t < burn + n; ++t) {
        const double xi = normal(rng);
        double sigma = sigma_bar * (1.0 - w * memory - cross_w * cross_memory);
        if (sigma < floor) {
            sigma = floor;
            if (t >= burn)
                ++floored;
        }
        if (t >= burn)
            out.returns.push_back(sigma * xi);
        out.shocks.push_back(xi);
        memory = decay * (memory + xi);
        if (!cross.empty())
            cross_memory = cross_decay * (cross_memory + cross[t]);
    }
    require(static_cast<double>(floored) <= max_floor_binding_share * static_cast<double>(n), ErrorKind::simulation,
            "simulator: vol floor binds on " + format_integer(static_cast<long long>(floored)) +
                " days (> 0.1%); reduce w");
    return out;
}

} // namespace detail

inline ReturnSeries simulate_leveraged(const SimConfig& cfg, const std::string& ticker = "SIM",
                                       Date start = default_start_date()) {
    validate(cfg);
    Engine rng = make_engine(cfg.seed, 0);
    auto path = detail::leveraged_path(cfg.n, detail::burn_in_days(cfg.t_L), cfg.sigma_bar, cfg.w, cfg.t_L, rng);
    return ReturnSeries(ticker, weekdays_from(start, cfg.n), std::move(path.returns));
}

inline std::string stock_ticker(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "STK%03zu", i);
    return buf;
}

inline Universe simulate_factor_universe(const FactorSimConfig& cfg, unsigned jobs = 1,
                                         Date start = default_start_date()) {
    validate(cfg.market);
    const std::size_t k = cfg.betas.size();
    require(cfg.idio.size() == k && cfg.caps.size() == k && (cfg.cross_w.empty() || cfg.cross_w.size() == k),
            ErrorKind::invalid_argument, "simulator: per-stock arrays must have equal length");
    require(cfg.cross_t_L > 0.0, ErrorKind::invalid_argument, "simulator: cross_t_L must be positive");
    double longest = std::max(cfg.market.t_L, cfg.cross_t_L);
    for (std::size_t i = 0; i < k; ++i) {
        validate(cfg.idio[i]);
        require(cfg.idio[i].n == cfg.market.n, ErrorKind::invalid_argument,
                "simulator: idiosyncratic paths must have the market's length");
        require(cfg.caps[i] > 0.0, ErrorKind::invalid_argument, "simulator: caps must be positive");
        require(cfg.cross_w.empty() || (cfg.cross_w[i] >= 0.0 && cfg.cross_w[i] < 0.5), ErrorKind::invalid_argument,
                "simulator: cross_w must lie in [0, 0.5)");
        longest = std::max(longest, cfg.idio[i].t_L);
    }
    const std::size_t n = cfg.market.n;
    const std::size_t burn = detail::burn_in_days(longest);
    const auto dates = weekdays_from(start, n);

    Engine market_rng = make_engine(cfg.seed, 0);
    auto market = detail::leveraged_path(n, burn, cfg.market.sigma_bar, cfg.market.w, cfg.market.t_L, market_rng);

    std::vector<std::vector<double>> stock_returns(k);
    detail::parallel_for(k, jobs, [&](std::size_t i) {
        Engine rng = make_engine(cfg.seed, i + 1);
        const SimConfig& c = cfg.idio[i];
        const double cw = cfg.cross_w.empty() ? 0.0 : cfg.cross_w[i];
        auto eps = detail::leveraged_path(n, burn, c.sigma_bar, c.w, c.t_L, rng, market.shocks, cw, cfg.cross_t_L);
        auto& out = stock_returns[i];
        out.resize(n);
        for (std::size_t t = 0; t < n; ++t)
            out[t] = cfg.betas[i] * market.returns[t] + eps.returns[t];
    });

    Universe u{ReturnSeries("MKT", dates, std::move(market.returns)), {}, {}};
    u.metadata.push_back({"MKT", std::nullopt, true});
    for (std::size_t i = 0; i < k; ++i) {
        u.stocks.emplace_back(stock_ticker(i), dates, std::move(stock_returns[i]), cfg.caps[i]);
        u.metadata.push_back({stock_ticker(i), cfg.caps[i], false});
    }
    return u;
}

/// ATM vol panel obeying Sigma_d = Sigma_{d-1} (1 + gamma(T) r_d + noise eta_d),
/// eta iid standard normal, one stream per maturity. The first row is `base_vol`
/// and vols are floored at 1e-4.
inline AtmVolPanel simulate_vol_panel(const ReturnSeries& underlying, const std::function<double(double)>& gamma_of_T,
                                      double noise, std::span<const double> maturities, std::uint64_t seed,
                                      double base_vol) {
    require(noise >= 0.0, ErrorKind::invalid_argument, "simulate_vol_panel: noise must be non-negative");
    require(base_vol > 0.0, ErrorKind::invalid_argument, "simulate_vol_panel: base vol must be positive");
    require(!maturities.empty(), ErrorKind::invalid_argument, "simulate_vol_panel: empty maturity grid");
    for (std::size_t j = 0; j < maturities.size(); ++j)
        require(maturities[j] > 0.0 && (j == 0 || maturities[j - 1] < maturities[j]), ErrorKind::invalid_argument,
                "simulate_vol_panel: maturities must be positive and strictly increasing");
    const std::size_t rows = underlying.size();
    const std::size_t cols = maturities.size();
    const auto r = underlying.values();
    std::vector<double> vols(rows * cols);
    for (std::size_t j = 0; j < cols; ++j) {
        Engine rng = make_engine(seed, j);
        std::normal_distribution<double> normal(0.0, 1.0);
        const double gamma = gamma_of_T(maturities[j]);
        double v = base_vol;
        vols[j] = v;
        for (std::size_t i = 1; i < rows; ++i) {
            const double eta = noise > 0.0 ? normal(rng) : 0.0;
            v = std::max(v * (1.0 + gamma * r[i] + noise * eta), panel_vol_floor);
            vols[i * cols + j] = v;
        }
    }
    return AtmVolPanel(underlying.ticker(), std::vector<Date>(underlying.dates().begin(), underlying.dates().end()),
                       std::vector<double>(maturities.begin(), maturities.end()), std::move(vols));
}

inline AtmVolPanel simulate_vol_panel(const ReturnSeries& underlying, GammaRule rule, double alpha, double t_L,
                                      double noise, std::span<const double> maturities, std::uint64_t seed,
                                      double base_vol) {
    return simulate_vol_panel(
        underlying, [&](double T) { return gamma_for_rule(rule, alpha, t_L, T); }, noise, maturities, seed, base_vol);
}

} // namespace smiledyn
