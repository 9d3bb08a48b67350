#include <cli.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace smiledyn::cli {

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "smiledyn");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("smiledyn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string p(const std::string& name) const { return (dir / name).string(); }

    void simulate(const std::string& sub, std::vector<std::string> extra = {}) {
        std::vector<std::string> args{"simulate", "--out-dir", p(sub), "--n", "3000", "--seed", "7"};
        args.insert(args.end(), extra.begin(), extra.end());
        fs::create_directories(dir / sub);
        const auto r = run(args);
        ASSERT_EQ(0, r.code) << r.err;
    }

    fs::path dir;
};

TEST_F(CliTest, HelpListsPipelines) {
    const auto r = run({"--help"});
    EXPECT_EQ(0, r.code);
    EXPECT_NE(std::string::npos, r.out.find("Plot pipelines"));
    for (const char* cmd : {"leverage", "skew", "decompose", "gamma-implied", "mcap", "simulate"})
        EXPECT_NE(std::string::npos, r.out.find(cmd)) << cmd;
}

TEST_F(CliTest, UsageErrors) {
    simulate("d");
    const std::string mkt = p("d/MKT.csv");
    EXPECT_EQ(2, run({}).code);
    EXPECT_EQ(2, run({"bogus"}).code);
    EXPECT_EQ(2, run({"leverage", mkt, "--max-lag", "0"}).code);
    EXPECT_EQ(2, run({"skew", mkt, "--method", "discrete", "--A", "0.1"}).code);
    EXPECT_EQ(2, run({"skew", "--method", "closed-form", "--A", "0.1"}).code);
    EXPECT_EQ(2, run({"gamma", "--A", "0.1"}).code);
    EXPECT_EQ(2, run({"gamma", "--A", "0.1", "--t_L", "10", "--sigma0", "0.01", "--rules", "implied"}).code);
    EXPECT_EQ(2, run({"leverage", mkt, "--format", "xml"}).code);
}

TEST_F(CliTest, DataErrors) {
    std::ofstream(p("empty.csv")).close();
    const auto r = run({"leverage", p("empty.csv"), "-o", p("x.csv")});
    EXPECT_EQ(1, r.code);
    EXPECT_NE(std::string::npos, r.err.find("error"));
    EXPECT_EQ(1, run({"leverage", p("missing.csv"), "-o", p("x.csv")}).code);
    EXPECT_FALSE(fs::exists(p("x.csv")));
}

TEST_F(CliTest, LeverageTable) {
    simulate("d");
    const auto r = run({"leverage", p("d/MKT.csv"), "--max-lag", "40", "-o", p("lev.csv"), "--fit-out", p("fit.csv")});
    ASSERT_EQ(0, r.code) << r.err;
    const auto body = slurp(p("lev.csv"));
    EXPECT_EQ(0u, body.find("lag,value,stderr,n_eff"));
    EXPECT_EQ(41u, count_lines(body));
    EXPECT_NE(std::string::npos, r.out.find("fit: A="));
    EXPECT_TRUE(fs::exists(p("fit.csv")));

    const auto j = run({"leverage", p("d/MKT.csv"), "--max-lag", "5", "--format", "json", "-o", "-"});
    ASSERT_EQ(0, j.code);
    const auto doc = nlohmann::json::parse(j.out.substr(0, j.out.find("leverage:")));
    ASSERT_EQ(5u, doc.size());
    EXPECT_EQ(1, doc[0].at("lag").get<int>());
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
    simulate("d");
    ::setenv("SMILEDYN_OUTPUT_DIR", dir.c_str(), 1);
    const auto r = run({"skew", p("d/MKT.csv"), "--maturities", "5,10"});
    ::unsetenv("SMILEDYN_OUTPUT_DIR");
    ASSERT_EQ(0, r.code) << r.err;
    EXPECT_TRUE(fs::exists(dir / "skew.csv"));
    EXPECT_EQ(3u, count_lines(slurp(dir / "skew.csv")));
}

TEST_F(CliTest, SkewMethods) {
    simulate("d");
    for (const char* m : {"discrete", "direct", "closed-form"}) {
        const auto r = run({"skew", p("d/MKT.csv"), "--method", m, "-o", p(std::string(m) + ".csv")});
        EXPECT_EQ(0, r.code) << m << r.err;
    }
    const auto model = run({"skew", "--method", "closed-form", "--A", "0.16", "--t_L", "31", "-o", "-"});
    ASSERT_EQ(0, model.code);
    EXPECT_NE(std::string::npos, model.out.find("closed-form"));
}

TEST_F(CliTest, DecomposeAndGamma) {
    simulate("d", {"--stocks", "2", "--beta", "0.8,1.2"});
    const auto d = run({"decompose", p("d/STK000.csv"), p("d/MKT.csv"), "-o", p("dec.csv")});
    ASSERT_EQ(0, d.code) << d.err;
    EXPECT_NE(std::string::npos, d.out.find("ratio: STK000"));

    const auto g = run({"gamma", "--A", "0.16", "--t_L", "31", "--sigma0", "0.01", "--maturities", "31", "-o", "-"});
    ASSERT_EQ(0, g.code) << g.err;
    EXPECT_NE(std::string::npos, g.out.find("alpha=8 "));
    EXPECT_NE(std::string::npos, g.out.find("limit=-4"));

    const auto f = run({"gamma", "--from-returns", p("d/MKT.csv"), "--from-returns", p("d/STK001.csv"), "-o",
                        p("g.csv")});
    EXPECT_EQ(0, f.code) << f.err;
}

TEST_F(CliTest, SimulateIsByteDeterministic) {
    simulate("a", {"--stocks", "3", "--panel-maturities", "21,63"});
    simulate("b", {"--stocks", "3", "--panel-maturities", "21,63"});
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        ++files;
        EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / e.path().filename())) << e.path();
    }
    EXPECT_EQ(9u, files);  // MKT, 3 stocks, metadata, 4 panels
}

TEST_F(CliTest, ClosedLoopRecoversGamma) {
    simulate("d", {"--stocks", "3", "--panel-maturities", "21,63", "--panel-rule", "sticky-strike",
                   "--panel-noise", "0.002"});
    std::vector<std::string> args{"gamma-implied", "-o", p("imp.csv")};
    for (const char* t : {"MKT", "STK000", "STK001", "STK002"}) {
        args.insert(args.end(), {"--panel", p(std::string("d/") + t + "_panel.csv"), "--returns",
                                 p(std::string("d/") + t + ".csv")});
    }
    const auto r = run(args);
    ASSERT_EQ(0, r.code) << r.err;
    const auto rows = load_implied_gamma(p("imp.csv"));
    ASSERT_EQ(8u, rows.size());
    // market: alpha = w / sigma_bar = 6, t_L = 31
    for (const auto& row : rows)
        if (row.ticker == "MKT")
            EXPECT_NEAR(gamma_sticky_strike(6.0, 31.0, row.T), row.gamma, 0.05 * std::abs(row.gamma)) << row.T;

    const auto m = run({"mcap", p("imp.csv"), p("d/metadata.csv"), "--T", "21", "-o", p("mcap.csv")});
    ASSERT_EQ(0, m.code) << m.err;
    EXPECT_NE(std::string::npos, m.out.find("n=3"));
    EXPECT_NE(std::string::npos, m.err.find("1 row(s)"));
}

TEST_F(CliTest, SimulateConfig) {
    std::ofstream(p("cfg.json")) << R"({"n": 2000, "seed": 3, "market": {"w": 0.05, "t_L": 20},
        "stocks": [{"beta": 0.9, "cap": 1e9}, {"beta": 1.1, "cap": 4e10, "cross_w": 0.03}]})";
    const auto r = run({"simulate", "--config", p("cfg.json"), "--out-dir", dir.string()});
    ASSERT_EQ(0, r.code) << r.err;
    EXPECT_TRUE(fs::exists(dir / "STK001.csv"));
    EXPECT_EQ(2001u, count_lines(slurp(dir / "MKT.csv")));
    const auto meta = slurp(dir / "metadata.csv");
    EXPECT_NE(std::string::npos, meta.find("STK001,4e+10,0"));

    std::ofstream(p("bad.json")) << "{ n: ";
    EXPECT_EQ(1, run({"simulate", "--config", p("bad.json"), "--out-dir", dir.string()}).code);
    EXPECT_EQ(2, run({"simulate", "--stocks", "2", "--beta", "1,2,3", "--out-dir", dir.string()}).code);
}

} // namespace

} // namespace smiledyn::cli
