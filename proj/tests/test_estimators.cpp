#include <smiledyn/estimators.hpp>
#include <smiledyn/simulator.hpp>

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace smiledyn {

namespace {

std::vector<double> gaussian(std::size_t n, double sd, std::uint64_t seed) {
    Engine rng = make_engine(seed, 0);
    std::normal_distribution<double> nd(0.0, sd);
    std::vector<double> x(n);
    for (double& v : x)
        v = nd(rng);
    return x;
}

TEST(MomentSummaryTest, SymmetricPairs) {
    std::vector<double> r;
    for (int i = 0; i < 50; ++i) {
        r.push_back(0.02);
        r.push_back(-0.02);
    }
    const auto m = moment_summary(r);
    EXPECT_NEAR(0.0, m.mean, 1e-17);
    EXPECT_NEAR(0.0, m.zeta1, 1e-12);
    EXPECT_EQ(100u, m.n);
    // two-point law: kurtosis 1, excess -2
    EXPECT_NEAR(-2.0, m.kappa1, 1e-12);
}

TEST(MomentSummaryTest, Degenerate) {
    const std::vector<double> flat(10, 0.01);
    try {
        moment_summary(flat);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(ErrorKind::zero_variance, e.kind());
    }
    const std::vector<double> three{0.1, 0.2, 0.3};
    EXPECT_THROW(moment_summary(three), Error);
}

TEST(MomentSummaryTest, GaussianMonteCarlo) {
    const auto r = gaussian(1'000'000, 0.01, 42);
    const auto m = moment_summary(r);
    EXPECT_NEAR(0.01, m.sigma, 4 * m.sigma_stderr);
    EXPECT_NEAR(0.0, m.zeta1, 4 * m.zeta1_stderr);
    EXPECT_NEAR(0.0, m.kappa1, 4 * m.kappa1_stderr);
    // asymptotic values for a Gaussian: sqrt(6/n), sqrt(24/n), sigma/sqrt(2n)
    EXPECT_NEAR(std::sqrt(6e-6), m.zeta1_stderr, 0.05 * std::sqrt(6e-6));
    EXPECT_NEAR(std::sqrt(24e-6), m.kappa1_stderr, 0.05 * std::sqrt(24e-6));
    EXPECT_NEAR(0.01 / std::sqrt(2e6), m.sigma_stderr, 0.05 * 0.01 / std::sqrt(2e6));
}

TEST(MomentSummaryTest, ScaleAndSign) {
    auto r = gaussian(2000, 0.01, 3);
    for (double& v : r)
        v = v + 0.5 * v * v / 0.01;  // some skew
    const auto base = moment_summary(r);
    std::vector<double> scaled(r), flipped(r);
    for (double& v : scaled)
        v *= 7.0;
    for (double& v : flipped)
        v = -v;
    EXPECT_NEAR(base.zeta1, moment_summary(scaled).zeta1, 1e-12);
    EXPECT_NEAR(-base.zeta1, moment_summary(flipped).zeta1, 1e-12);
}

TEST(LeverageTest, MatchesBruteForce) {
    const auto a = gaussian(500, 0.01, 5);
    auto b = gaussian(500, 0.02, 6);
    for (std::size_t i = 1; i < b.size(); ++i)
        b[i] += 0.3 * a[i - 1];
    const auto g_auto = leverage_correlation(a, 10);
    const double sa = oracle::pop_sd(a), sb = oracle::pop_sd(b);
    for (int t = 1; t <= 10; ++t)
        EXPECT_NEAR(oracle::leverage(a, a, t, sa * sa * sa), *g_auto.at(t), 1e-12);

    const auto g_cross = leverage_correlation(a, b, 10);
    for (int t = 1; t <= 10; ++t)
        EXPECT_NEAR(oracle::leverage(a, b, t, sa * sb * sb), *g_cross.at(t), 1e-12);
    EXPECT_EQ(499u, g_cross.n_eff[0]);
    EXPECT_EQ(490u, g_cross.n_eff[9]);
}

TEST(LeverageTest, Preconditions) {
    const auto r = gaussian(100, 0.01, 1);
    auto kind = [&](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::simulation;  // sentinel: nothing thrown
    };
    EXPECT_EQ(ErrorKind::invalid_argument, kind([&] { leverage_correlation(r, 0); }));
    EXPECT_EQ(ErrorKind::too_few_samples, kind([&] { leverage_correlation(r, 90); }));
    const std::vector<double> flat(100, 0.0);
    EXPECT_EQ(ErrorKind::zero_variance, kind([&] { leverage_correlation(flat, 5); }));
}

TEST(LeverageTest, DropsThinLags) {
    const auto r = gaussian(45, 0.01, 9);
    const auto g = leverage_correlation(r, 30);
    ASSERT_EQ(15u, g.size());
    EXPECT_EQ(15, g.lags.back());
    EXPECT_EQ(30u, g.n_eff.back());
    EXPECT_FALSE(g.at(16));
}

TEST(LeverageTest, IidIsStatisticallyZero) {
    std::size_t checks = 0, inside = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = gaussian(20000, 0.01, 100 + seed);
        const auto g = leverage_correlation(r, 50);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ++checks;
            inside += std::abs(g.values[i]) < 3 * g.std_error[i];
        }
    }
    EXPECT_GE(static_cast<double>(inside) / checks, 0.99);
}

TEST(LeverageTest, SimulatorLaw) {
    const auto s = simulate_leveraged({500'000, 0.01, 0.08, 20.0, 2024});
    const auto g = leverage_correlation(s, 60);
    std::size_t within3 = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double expect = oracle::simulator_leverage(0.08, 20.0, g.lags[i]);
        const double z = std::abs(g.values[i] - expect) / g.std_error[i];
        within3 += z < 3.0;
        EXPECT_LT(z, 4.0) << "lag " << g.lags[i];
    }
    EXPECT_GE(within3, 57u);
    // first-order law -2w e^{-t/20} is close to the exact one
    EXPECT_NEAR(-0.16 * std::exp(-0.05), oracle::simulator_leverage(0.08, 20.0, 1.0), 0.02);
}

TEST(LeverageTest, Invariances) {
    const auto s = simulate_leveraged({20'000, 0.01, 0.1, 10.0, 77});
    const std::vector<double> r(s.values().begin(), s.values().end());
    const auto base = leverage_correlation(r, 20);

    std::vector<double> scaled(r), shifted(r), negated(r);
    for (double& v : scaled)
        v *= 3.5;
    for (double& v : shifted)
        v += 0.004;
    for (double& v : negated)
        v = -v;
    const auto gs = leverage_correlation(scaled, 20);
    const auto gm = leverage_correlation(shifted, 20);
    const auto gn = leverage_correlation(negated, r, 20);
    for (std::size_t i = 0; i < base.size(); ++i) {
        EXPECT_NEAR(base.values[i], gs.values[i], 1e-12);
        EXPECT_NEAR(base.values[i], gm.values[i], 1e-10);
        // same series in two buffers takes the cross norm sigma_a sigma_b^2 = sigma^3
        EXPECT_NEAR(-base.values[i], gn.values[i], 1e-12);
    }
}

TEST(LeverageTest, ScheduleIndependent) {
    const auto r = gaussian(30'000, 0.01, 8);
    LeverageOptions one, many;
    many.jobs = 4;
    EXPECT_EQ(leverage_correlation(r, 40, one).values, leverage_correlation(r, 40, many).values);

    one.stderr_method = many.stderr_method = StderrMethod::block_bootstrap;
    one.bootstrap_replicates = many.bootstrap_replicates = 50;
    const auto a = leverage_correlation(r, 10, one);
    const auto b = leverage_correlation(r, 10, many);
    EXPECT_EQ(a.std_error, b.std_error);
}

TEST(LeverageTest, BootstrapAgreesWithAsymptoticOnIid) {
    const auto r = gaussian(50'000, 0.01, 21);
    LeverageOptions boot;
    boot.stderr_method = StderrMethod::block_bootstrap;
    const auto ga = leverage_correlation(r, 5);
    const auto gb = leverage_correlation(r, 5, boot);
    for (std::size_t i = 0; i < ga.size(); ++i) {
        EXPECT_EQ(ga.values[i], gb.values[i]);
        EXPECT_NEAR(1.0, gb.std_error[i] / ga.std_error[i], 0.3);
    }
}

TEST(LeverageTest, ExportHeader) {
    const auto g = leverage_correlation(gaussian(100, 0.01, 2), 3);
    const auto t = leverage_table(g);
    EXPECT_EQ((std::vector<std::string>{"lag", "value", "stderr", "n_eff"}), t.header);
    EXPECT_EQ(3u, t.rows.size());
}

TEST(ThreePointTest, BruteForceCell) {
    const auto r = gaussian(300, 0.01, 4);
    const auto c = three_point_cumulant(r, 2, 5);
    const double m = oracle::mean(r), sd = oracle::pop_sd(r);
    double s = 0;
    for (std::size_t i = 0; i + 5 < r.size(); ++i)
        s += (r[i] - m) * (r[i + 2] - m) * (r[i + 5] - m);
    EXPECT_NEAR(s / (r.size() - 5) / (sd * sd * sd), c.value, 1e-12);
    EXPECT_EQ(295u, c.n);
}

TEST(ThreePointTest, IidScan) {
    const auto r = gaussian(50'000, 0.01, 12);
    const auto scan = three_point_cumulant_scan(r, 15, 2);
    EXPECT_EQ(105u, scan.cells.size());
    EXPECT_GE(scan.fraction_within_2se, 0.9);
}

TEST(ThreePointTest, Preconditions) {
    const auto r = gaussian(30, 0.01, 1);
    EXPECT_THROW(three_point_cumulant(r, 3, 3), Error);
    EXPECT_THROW(three_point_cumulant(r, 0, 3), Error);
    EXPECT_THROW(three_point_cumulant_scan(r, 15), Error);
}

TEST(ThreePointTest, SimulatorTermIsSmall) {
    const auto s = simulate_leveraged({100'000, 0.01, 0.08, 20.0, 5});
    const auto scan = three_point_cumulant_scan(s.values(), 10, 2);
    EXPECT_GE(scan.fraction_within_2se, 0.85);
}

} // namespace

} // namespace smiledyn
