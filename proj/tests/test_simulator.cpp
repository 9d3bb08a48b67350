#include <smiledyn/estimators.hpp>
#include <smiledyn/simulator.hpp>
#include <smiledyn/skew_term.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace smiledyn {

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::degenerate;  // nothing thrown
}

TEST(SimulatorTest, Deterministic) {
    const SimConfig cfg{3000, 0.01, 0.08, 20.0, 9};
    EXPECT_EQ(simulate_leveraged(cfg), simulate_leveraged(cfg));
    auto other = cfg;
    other.seed = 10;
    EXPECT_NE(simulate_leveraged(cfg).values()[0], simulate_leveraged(other).values()[0]);
    const auto s = simulate_leveraged(cfg, "ABC");
    EXPECT_EQ("ABC", s.ticker());
    EXPECT_EQ(3000u, s.size());
    EXPECT_EQ(default_start_date(), s.dates().front());
}

TEST(SimulatorTest, ZeroWeightIsIid) {
    const auto s = simulate_leveraged({200'000, 0.01, 0.0, 20.0, 3});
    const auto m = moment_summary(s.values());
    EXPECT_NEAR(0.01, m.sigma, 4 * m.sigma_stderr);
    EXPECT_NEAR(0.0, m.zeta1, 4 * m.zeta1_stderr);
    EXPECT_NEAR(0.0, m.kappa1, 4 * m.kappa1_stderr);
    const auto g = leverage_correlation(s, 20);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        inside += std::abs(g.values[i]) < 3 * g.std_error[i];
    EXPECT_GE(inside, 19u);
}

TEST(SimulatorTest, Validation) {
    EXPECT_EQ(ErrorKind::invalid_argument, kind_of([] { simulate_leveraged({999, 0.01, 0.08, 20.0, 1}); }));
    EXPECT_EQ(ErrorKind::invalid_argument, kind_of([] { simulate_leveraged({5000, 0.0, 0.08, 20.0, 1}); }));
    EXPECT_EQ(ErrorKind::invalid_argument, kind_of([] { simulate_leveraged({5000, 0.01, 0.5, 20.0, 1}); }));
    EXPECT_EQ(ErrorKind::invalid_argument, kind_of([] { simulate_leveraged({5000, 0.01, 0.08, 0.0, 1}); }));
    // memory sd is sqrt(V) ~ 3.2 at t_L = 20, so w = 0.45 pushes vol to the floor often
    EXPECT_EQ(ErrorKind::simulation, kind_of([] { simulate_leveraged({20'000, 0.01, 0.45, 20.0, 1}); }));
}

TEST(SimulatorTest, VarianceMatchesLaw) {
    const auto s = simulate_leveraged({400'000, 0.01, 0.08, 20.0, 4});
    const auto m = moment_summary(s.values());
    const double expect = 0.01 * std::sqrt(oracle::simulator_variance_factor(0.08, 20.0));
    EXPECT_NEAR(expect, m.sigma, 0.01 * expect);
}

TEST(SimulatorTest, HalvesAgree) {
    const auto s = simulate_leveraged({200'000, 0.01, 0.08, 20.0, 5});
    const auto v = s.values();
    const std::span<const double> first = v.first(100'000), second = v.last(100'000);
    const auto a = moment_summary(first), b = moment_summary(second);
    EXPECT_LT(std::abs(a.sigma - b.sigma), 4 * std::hypot(a.sigma_stderr, b.sigma_stderr));
    const auto ga = leverage_correlation(first, 5), gb = leverage_correlation(second, 5);
    EXPECT_LT(std::abs(ga.values[0] - gb.values[0]), 4 * std::hypot(ga.std_error[0], gb.std_error[0]));
}

TEST(SimulatorTest, LeverageIsNegativeAndFitsDecay) {
    const auto s = simulate_leveraged({200'000, 0.01, 0.08, 20.0, 6});
    const auto g = leverage_correlation(s, 150);
    EXPECT_LT(*g.at(1), 0.0);
    const auto fit = fit_exponential(g);
    EXPECT_FALSE(fit.no_leverage_detected);
    EXPECT_NEAR(20.0, fit.t_L, 5.0);
    EXPECT_NEAR(-oracle::simulator_leverage(0.08, 20.0, 0.0), fit.A, 0.25 * 0.16);
}

TEST(UniverseTest, Composition) {
    FactorSimConfig cfg;
    cfg.market = {2000, 0.01, 0.08, 20.0, 0};
    cfg.betas = {0.0, 1.5};
    cfg.idio = {{2000, 0.02, 0.05, 10.0, 0}, {2000, 0.02, 0.05, 10.0, 0}};
    cfg.caps = {1e9, 2e10};
    cfg.seed = 12;
    const auto u = simulate_factor_universe(cfg);
    ASSERT_EQ(2u, u.stocks.size());
    EXPECT_EQ("MKT", u.market.ticker());
    EXPECT_EQ("STK000", u.stocks[0].ticker());
    EXPECT_EQ("STK001", u.stocks[1].ticker());
    EXPECT_EQ(2e10, *u.stocks[1].market_cap());
    ASSERT_EQ(3u, u.metadata.size());
    EXPECT_TRUE(u.metadata[0].is_index);
    EXPECT_FALSE(u.metadata[1].is_index);

    // identical idiosyncratic configs on different streams
    const auto m = u.market.values();
    for (std::size_t t = 0; t < 2000; ++t) {
        const double eps0 = u.stocks[0].values()[t];
        const double eps1 = u.stocks[1].values()[t] - 1.5 * m[t];
        ASSERT_NE(eps0, eps1);
    }
    EXPECT_EQ(u.market.dates()[0], u.stocks[0].dates()[0]);
}

TEST(UniverseTest, DeterministicAcrossJobs) {
    FactorSimConfig cfg;
    cfg.market = {5000, 0.01, 0.08, 20.0, 0};
    cfg.betas = {0.6, 0.8, 1.0, 1.2};
    cfg.idio.assign(4, SimConfig{5000, 0.015, 0.06, 12.0, 0});
    cfg.caps = {5e8, 2e9, 1e10, 5e10};
    cfg.cross_w = {0.0, 0.02, 0.04, 0.06};
    cfg.seed = 3;
    const auto a = simulate_factor_universe(cfg, 1);
    const auto b = simulate_factor_universe(cfg, 4);
    EXPECT_EQ(a.market, b.market);
    EXPECT_EQ(a.stocks, b.stocks);
}

TEST(UniverseTest, Validation) {
    FactorSimConfig cfg;
    cfg.market = {2000, 0.01, 0.08, 20.0, 0};
    cfg.betas = {1.0};
    cfg.idio = {{2000, 0.02, 0.05, 10.0, 0}};
    cfg.caps = {1e9, 2e9};
    EXPECT_EQ(ErrorKind::invalid_argument, kind_of([&] { simulate_factor_universe(cfg); }));
    cfg.caps = {-1.0};
    EXPECT_EQ(ErrorKind::invalid_argument, kind_of([&] { simulate_factor_universe(cfg); }));
    cfg.caps = {1e9};
    cfg.idio[0].n = 3000;
    EXPECT_EQ(ErrorKind::invalid_argument, kind_of([&] { simulate_factor_universe(cfg); }));
    cfg.idio[0].n = 2000;
    cfg.cross_w = {0.6};
    EXPECT_EQ(ErrorKind::invalid_argument, kind_of([&] { simulate_factor_universe(cfg); }));
}

TEST(VolPanelTest, ExactLawWithoutNoise) {
    const auto r = simulate_leveraged({1000, 0.01, 0.05, 10.0, 7});
    const std::vector<double> mats{21, 63};
    const auto p = simulate_vol_panel(r, GammaRule::sticky_strike, 8.0, 31.0, 0.0, mats, 1, 0.2);
    EXPECT_EQ(0.2, p.vol(0, 0));
    EXPECT_EQ(0.2, p.vol(0, 1));
    for (std::size_t j = 0; j < mats.size(); ++j) {
        const double gamma = gamma_sticky_strike(8.0, 31.0, mats[j]);
        for (std::size_t i = 1; i < p.rows(); ++i)
            ASSERT_NEAR(p.vol(i - 1, j) * (1.0 + gamma * r.values()[i]), p.vol(i, j), 1e-15);
    }
}

TEST(VolPanelTest, FloorAndValidation) {
    const auto r = simulate_leveraged({1000, 0.01, 0.0, 10.0, 8});
    const std::vector<double> mats{21};
    const auto p = simulate_vol_panel(r, [](double) { return 0.0; }, 2.0, mats, 1, 0.2);
    double lo = 1.0;
    for (std::size_t i = 0; i < p.rows(); ++i)
        lo = std::min(lo, p.vol(i, 0));
    EXPECT_EQ(panel_vol_floor, lo);

    const std::vector<double> bad{63, 21};
    EXPECT_THROW(simulate_vol_panel(r, [](double) { return 0.0; }, 0.0, bad, 1, 0.2), Error);
    EXPECT_THROW(simulate_vol_panel(r, [](double) { return 0.0; }, -0.1, mats, 1, 0.2), Error);
    EXPECT_THROW(simulate_vol_panel(r, [](double) { return 0.0; }, 0.0, mats, 1, 0.0), Error);
}

TEST(VolPanelTest, StickyDeltaHasNoSlope) {
    const auto r = simulate_leveraged({5000, 0.01, 0.0, 10.0, 9});
    const std::vector<double> mats{63};
    const auto p = simulate_vol_panel(r, GammaRule::sticky_delta, 8.0, 31.0, 0.01, mats, 2, 0.2);
    const auto g = estimate_gamma_implied(p, r, 63.0).regression;
    EXPECT_LT(std::abs(g.slope), 4 * g.stderr_slope);
}

TEST(SeedTest, StreamsAreDistinct) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
    Engine a = make_engine(1, 0), b = make_engine(1, 1);
    EXPECT_NE(a(), b());
}

} // namespace

} // namespace smiledyn
