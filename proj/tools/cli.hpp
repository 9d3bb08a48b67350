#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <smiledyn.hpp>

namespace smiledyn::cli {

namespace fs = std::filesystem;

inline constexpr int exit_ok = 0;
inline constexpr int exit_data = 1;
inline constexpr int exit_usage = 2;

inline const std::vector<int> default_maturities{5, 10, 21, 42, 63, 126, 252};

// Flag combinations the parser cannot express.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const char* plot_map =
    "Plot pipelines:\n"
    "  leverage correlation curve and exponential fit ........ leverage\n"
    "  skew term structure (data, closed form, direct) ....... skew\n"
    "  one-factor skew decomposition, factor weight ratio .... decompose\n"
    "  predicted implied leverage per rule ................... gamma\n"
    "  measured implied leverage points ...................... gamma-implied\n"
    "  implied leverage against market cap ................... mcap\n"
    "  synthetic inputs for all of the above ................. simulate\n"
    "Output goes to --out, else $SMILEDYN_OUTPUT_DIR/<command>.<ext>, else ./<command>.<ext>.\n"
    "Exit codes: 0 success, 1 data error, 2 usage error.";

struct Common {
    std::string out;
    std::string format = "csv";
    unsigned jobs = 1;

    OutputFormat output_format() const { return format == "json" ? OutputFormat::structured : OutputFormat::delimited; }
};

inline fs::path output_dir() {
    const char* env = std::getenv("SMILEDYN_OUTPUT_DIR");
    return env && *env ? fs::path(env) : fs::path(".");
}

inline void emit(const Common& c, const std::string& name, const Table& t, std::ostream& out) {
    if (c.out == "-") {
        write_table(out, t, c.output_format());
        return;
    }
    const fs::path path = c.out.empty()
                              ? output_dir() / (name + (c.output_format() == OutputFormat::structured ? ".json" : ".csv"))
                              : fs::path(c.out);
    write_table(path, t, c.output_format());
    out << "wrote " << path.generic_string() << '\n';
}

inline std::string ticker_of(const std::string& path) { return fs::path(path).stem().string(); }

inline ReturnSeries load_series(const std::string& path, bool log_returns, std::ostream& err,
                                const std::string& ticker = {}) {
    LoadOptions opts;
    opts.log_returns = log_returns;
    auto loaded = load_returns(fs::path(path), ticker.empty() ? ticker_of(path) : ticker, opts);
    if (loaded.dropped_rows > 0)
        err << "warning: " << path << ": dropped " << loaded.dropped_rows << " row(s)\n";
    return std::move(loaded.value);
}

inline int fit_max_lag(std::size_t n) { return static_cast<int>(std::min<std::size_t>(250, n > 41 ? n - 11 : 30)); }

struct FittedSeries {
    MomentSummary moments;
    ExpLeverageFit fit;
};

inline FittedSeries fit_series(const ReturnSeries& s, unsigned jobs) {
    LeverageOptions lo;
    lo.jobs = jobs;
    const auto g = leverage_correlation(s, fit_max_lag(s.size()), lo);
    FitOptions fo;
    fo.jobs = jobs;
    return {moment_summary(s), fit_exponential(g, fo)};
}

inline std::string num(double x) { return detail::format_number(x); }

// ---------------------------------------------------------------------------

struct LeverageArgs {
    std::string returns;
    int max_lag = 100;
    bool log_returns = false;
    bool bootstrap = false;
    std::string fit_out;
};

inline int cmd_leverage(const Common& c, const LeverageArgs& a, std::ostream& out, std::ostream& err) {
    const auto s = load_series(a.returns, a.log_returns, err);
    LeverageOptions lo;
    lo.jobs = c.jobs;
    if (a.bootstrap)
        lo.stderr_method = StderrMethod::block_bootstrap;
    const auto g = leverage_correlation(s, a.max_lag, lo);
    emit(c, "leverage", leverage_table(g), out);
    out << "leverage: " << s.ticker() << " n=" << s.size() << " lags=" << g.size() << '\n';
    try {
        FitOptions fo;
        fo.jobs = c.jobs;
        const auto fit = fit_exponential(g, fo);
        out << "fit: A=" << num(fit.A) << " t_L=" << num(fit.t_L) << " days (lags " << fit.lag_lo << "-"
            << fit.lag_hi << ")" << (fit.no_leverage_detected ? " no-leverage-detected" : "") << '\n';
        if (!a.fit_out.empty()) {
            Common fc = c;
            fc.out = a.fit_out;
            emit(fc, "fit", fit_table(fit), out);
        }
    } catch (const Error& e) {
        err << "warning: exponential fit skipped: " << e.what() << '\n';
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct SkewArgs {
    std::string returns;
    std::vector<int> maturities = default_maturities;
    std::string method = "discrete";
    std::optional<double> A;
    std::optional<double> t_L;
    std::optional<double> zeta1;
    bool log_returns = false;
};

inline int cmd_skew(const Common& c, const SkewArgs& a, std::ostream& out, std::ostream& err) {
    const bool model = a.A || a.t_L;
    if (model && a.method != "closed-form")
        throw UsageError("--A/--t_L only apply to --method closed-form");
    if (a.A.has_value() != a.t_L.has_value())
        throw UsageError("--A and --t_L must be given together");
    if (a.zeta1 && a.method != "closed-form")
        throw UsageError("--zeta1 only applies to --method closed-form");
    if (!model && a.returns.empty())
        throw UsageError("a returns file is required unless --A and --t_L are given");

    SkewCurve curve;
    std::string label;
    if (a.method == "closed-form") {
        double A = 0, t_L = 0, zeta1 = a.zeta1.value_or(0.0);
        if (model) {
            A = *a.A;
            t_L = *a.t_L;
            label = "model";
        } else {
            const auto s = load_series(a.returns, a.log_returns, err);
            const auto fs = fit_series(s, c.jobs);
            A = fs.fit.A;
            t_L = fs.fit.t_L;
            if (!a.zeta1)
                zeta1 = fs.moments.zeta1;
            label = s.ticker();
        }
        const std::vector<double> T(a.maturities.begin(), a.maturities.end());
        curve = skew_closed_form_curve(zeta1, A, t_L, T);
        out << "skew: " << label << " closed-form A=" << num(A) << " t_L=" << num(t_L) << " zeta1=" << num(zeta1)
            << '\n';
    } else {
        const auto s = load_series(a.returns, a.log_returns, err);
        curve = a.method == "direct" ? estimate_skew_direct(s.values(), a.maturities)
                                     : estimate_skew_discrete(s.values(), a.maturities, c.jobs);
        out << "skew: " << s.ticker() << " " << to_string(curve.source) << " n=" << s.size() << '\n';
    }
    emit(c, "skew", skew_table(curve), out);
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct DecomposeArgs {
    std::string stock;
    std::string market;
    std::vector<int> maturities = default_maturities;
    bool log_returns = false;
};

inline int cmd_decompose(const Common& c, const DecomposeArgs& a, std::ostream& out, std::ostream& err) {
    const auto stock = load_series(a.stock, a.log_returns, err);
    const auto market = load_series(a.market, a.log_returns, err);
    const auto d = decompose_skew(stock, market, a.maturities, c.jobs);
    emit(c, "decompose", decomposition_table(d), out);
    out << "decompose: " << stock.ticker() << " on " << market.ticker() << " n=" << d.fit.n
        << " beta=" << num(d.fit.beta) << " sigma_phi=" << num(d.fit.sigma_phi)
        << " sigma_eps=" << num(d.fit.sigma_eps) << " sigma=" << num(d.fit.sigma_total) << '\n';
    out << "ratio: " << stock.ticker() << " " << num(d.fit.ratio);
    if (stock.market_cap())
        out << " cap=" << num(*stock.market_cap());
    out << '\n';
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct GammaArgs {
    std::optional<double> A;
    std::optional<double> t_L;
    std::optional<double> sigma0;
    std::optional<double> zeta1;
    std::vector<double> maturities{default_maturities.begin(), default_maturities.end()};
    std::vector<std::string> rules{"theoretical", "sticky-strike", "sticky-delta"};
    std::vector<std::string> from_returns;
    bool log_returns = false;
};

inline int cmd_gamma(const Common& c, const GammaArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<GammaRule> rules;
    for (const auto& name : a.rules) {
        const auto r = parse_gamma_rule(name);
        if (!r)
            throw UsageError("unknown rule '" + name + "'");
        if (*r == GammaRule::implied)
            throw UsageError("the implied rule is measured by gamma-implied, not computed");
        rules.push_back(*r);
    }

    double alpha = 0, t_L = 0, sigma0 = 0;
    if (!a.from_returns.empty()) {
        if (a.A || a.sigma0)
            throw UsageError("--from-returns replaces --A and --sigma0");
        std::vector<double> amps, sigmas;
        double t_sum = 0;
        for (const auto& path : a.from_returns) {
            const auto s = load_series(path, a.log_returns, err);
            const auto fs = fit_series(s, c.jobs);
            amps.push_back(fs.fit.A);
            sigmas.push_back(fs.moments.sigma);
            t_sum += fs.fit.t_L;
            out << "fit: " << s.ticker() << " A=" << num(fs.fit.A) << " t_L=" << num(fs.fit.t_L)
                << " sigma=" << num(fs.moments.sigma) << '\n';
        }
        alpha = pooled_alpha(amps, sigmas);
        t_L = a.t_L.value_or(t_sum / static_cast<double>(amps.size()));
        double s_sum = 0;
        for (double s : sigmas)
            s_sum += s;
        sigma0 = s_sum / static_cast<double>(sigmas.size());
    } else {
        if (!a.A || !a.t_L || !a.sigma0)
            throw UsageError("--A, --t_L and --sigma0 are required (or use --from-returns)");
        sigma0 = *a.sigma0;
        t_L = *a.t_L;
        alpha = implied_leverage_alpha(*a.A, sigma0);
    }

    std::vector<GammaCurve> curves;
    for (auto r : rules) {
        auto curve = gamma_curve(r, alpha, t_L, a.maturities);
        if (r == GammaRule::theoretical && a.zeta1)
            for (std::size_t i = 0; i < curve.maturities.size(); ++i)
                curve.gamma[i] = gamma_with_zeta1(alpha, t_L, curve.maturities[i], *a.zeta1, sigma0);
        curves.push_back(std::move(curve));
    }
    emit(c, "gamma", gamma_table(curves), out);
    out << "gamma: alpha=" << num(alpha) << " t_L=" << num(t_L) << " limit=" << num(-alpha / 2.0) << '\n';
    if (a.zeta1 && !a.maturities.empty()) {
        const double T = *std::min_element(a.maturities.begin(), a.maturities.end());
        const auto z = zeta1_contribution(alpha, t_L, T, *a.zeta1, sigma0);
        out << "zeta1 term at T=" << num(T) << ": " << num(z.zeta1_term) << " (" << num(100.0 * z.share)
            << "% of |gamma|)\n";
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct ImpliedArgs {
    std::vector<std::string> panels;
    std::vector<std::string> returns;
    std::vector<std::string> tickers;
    std::vector<double> maturities;  // empty: the panel's own tenors
    bool vol_annualized = false;
    bool winsorize = false;
    bool absolute_change = false;
    bool log_returns = false;
};

inline int cmd_gamma_implied(const Common& c, const ImpliedArgs& a, std::ostream& out, std::ostream& err) {
    if (a.panels.size() != a.returns.size())
        throw UsageError("--panel and --returns must be given the same number of times");
    if (!a.tickers.empty() && a.tickers.size() != a.panels.size())
        throw UsageError("--ticker must be given once per --panel");

    const std::size_t k = a.panels.size();
    struct Result {
        std::string ticker;
        std::vector<ImpliedGamma> fits;
    };
    std::vector<Result> results(k);
    std::vector<std::string> notes(k);
    detail::parallel_for(k, c.jobs, [&](std::size_t i) {
        const std::string ticker = a.tickers.empty() ? ticker_of(a.returns[i]) : a.tickers[i];
        LoadOptions lo;
        lo.log_returns = a.log_returns;
        lo.vol_annualized = a.vol_annualized;
        auto s = load_returns(fs::path(a.returns[i]), ticker, lo);
        auto p = load_vol_panel(fs::path(a.panels[i]), ticker, lo);
        if (s.dropped_rows + p.dropped_rows > 0)
            notes[i] += "warning: " + ticker + ": dropped " +
                        detail::format_integer(static_cast<long long>(s.dropped_rows + p.dropped_rows)) + " row(s)\n";
        const auto& panel = p.value;
        std::vector<double> T = a.maturities;
        if (T.empty())
            T.assign(panel.maturities().begin(), panel.maturities().end());
        ImpliedGammaOptions go;
        go.winsorize = a.winsorize;
        go.absolute_change = a.absolute_change;
        results[i].ticker = ticker;
        for (double t : T) {
            auto g = estimate_gamma_implied(panel, s.value, t, go);
            for (const auto& w : g.warnings)
                notes[i] += "warning: " + ticker + ": " + w + "\n";
            results[i].fits.push_back(std::move(g));
        }
    });

    Table t = implied_gamma_header();
    for (std::size_t i = 0; i < k; ++i) {
        err << notes[i];
        for (const auto& g : results[i].fits) {
            add_implied_gamma_row(t, results[i].ticker, g);
            out << "gamma-implied: " << results[i].ticker << " T=" << num(g.requested_T)
                << " gamma=" << num(g.regression.slope) << " stderr=" << num(g.regression.stderr_slope)
                << " r2=" << num(g.regression.r_squared) << '\n';
        }
    }
    emit(c, "gamma_implied", t, out);
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct ImpliedRow {
    std::string ticker;
    double T;
    double gamma;
};

inline std::vector<ImpliedRow> load_implied_gamma(const fs::path& path) {
    std::ifstream is = detail::open_input(path);
    std::string line;
    require(detail::next_line(is, line), ErrorKind::malformed_input, "empty implied-gamma file");
    const char delim = detail::detect_delimiter(line);
    const auto h = detail::split(line, delim);
    require(h.size() >= 3 && detail::lower(h[0]) == "ticker" && detail::lower(h[1]) == "t_days" &&
                detail::lower(h[2]) == "gamma_imp",
            ErrorKind::malformed_input, "malformed header: expected ticker,T_days,gamma_imp");
    std::vector<ImpliedRow> rows;
    while (detail::next_line(is, line)) {
        const auto f = detail::split(line, delim);
        auto T = f.size() >= 3 ? detail::parse_double(f[1]) : std::nullopt;
        auto g = f.size() >= 3 ? detail::parse_double(f[2]) : std::nullopt;
        require(T && g && std::isfinite(*g), ErrorKind::malformed_input, "malformed implied-gamma row: " + line);
        rows.push_back({std::string(detail::trim(f[0])), *T, *g});
    }
    require(!rows.empty(), ErrorKind::too_few_samples, "implied-gamma file has no rows");
    return rows;
}

struct McapArgs {
    std::string gamma_file;
    std::string metadata_file;
    std::vector<double> T;
};

inline int cmd_mcap(const Common& c, const McapArgs& a, std::ostream& out, std::ostream& err) {
    const auto rows = load_implied_gamma(a.gamma_file);
    const auto meta = load_metadata(fs::path(a.metadata_file));
    if (meta.dropped_rows > 0)
        err << "warning: " << a.metadata_file << ": dropped " << meta.dropped_rows << " row(s)\n";
    std::map<std::string, InstrumentMeta> by_ticker;
    for (const auto& m : meta.value)
        by_ticker[m.ticker] = m;

    std::vector<double> grid = a.T;
    if (grid.empty()) {
        std::set<double> seen;
        for (const auto& r : rows)
            seen.insert(r.T);
        grid.assign(seen.begin(), seen.end());
    }
    Table t = mcap_header();
    for (double T : grid) {
        std::vector<CapPoint> pts;
        std::size_t skipped = 0;
        for (const auto& r : rows) {
            if (r.T != T)
                continue;
            const auto it = by_ticker.find(r.ticker);
            if (it == by_ticker.end() || it->second.is_index || !it->second.market_cap) {
                ++skipped;
                continue;
            }
            pts.push_back({*it->second.market_cap, r.gamma});
        }
        if (skipped > 0)
            err << "note: T=" << num(T) << ": " << skipped << " row(s) without a stock market cap skipped\n";
        const auto reg = mcap_regression(pts);
        add_mcap_row(t, T, reg);
        out << "mcap: T=" << num(T) << " a=" << num(reg.intercept) << " b=" << num(reg.slope)
            << " (per ln M: " << num(natural_log_slope(reg.slope)) << ") n=" << reg.n << '\n';
    }
    emit(c, "mcap", t, out);
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::string out_dir;
    std::size_t n = 5000;
    std::uint64_t seed = 1;
    double sigma_bar = 0.01;
    double w = 0.06;  // floor binds too often above ~0.07 at t_L = 31
    double t_L = 31.0;
    std::size_t stocks = 0;
    std::vector<double> betas{1.0};
    std::vector<double> stock_sigma_bar{0.015};
    std::vector<double> stock_w{0.06};
    std::vector<double> stock_t_L{12.0};
    std::vector<double> caps;
    std::vector<double> cross_w;
    double cross_t_L = 20.0;
    std::vector<double> panel_maturities;
    std::string panel_rule = "theoretical";
    double panel_noise = 0.01;
};

namespace detail_sim {

inline std::vector<double> broadcast(const std::vector<double>& v, std::size_t k, const char* name) {
    if (v.size() == k)
        return v;
    if (v.size() == 1)
        return std::vector<double>(k, v.front());
    throw UsageError(std::string("--") + name + " needs 1 or " + std::to_string(k) + " values");
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

inline void apply_config(const fs::path& path, SimulateArgs& a) {
    std::ifstream is = smiledyn::detail::open_input(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::malformed_input, "config: " + std::string(e.what()));
    }
    try {
        read(j, "n", a.n);
        read(j, "seed", a.seed);
        if (j.contains("market")) {
            const auto& m = j.at("market");
            read(m, "sigma_bar", a.sigma_bar);
            read(m, "w", a.w);
            read(m, "t_L", a.t_L);
        }
        read(j, "cross_t_L", a.cross_t_L);
        if (j.contains("stocks")) {
            const auto& s = j.at("stocks");
            a.stocks = s.size();
            a.betas.clear();
            a.stock_sigma_bar.clear();
            a.stock_w.clear();
            a.stock_t_L.clear();
            a.caps.clear();
            a.cross_w.clear();
            for (const auto& st : s) {
                a.betas.push_back(st.value("beta", 1.0));
                a.stock_sigma_bar.push_back(st.value("sigma_bar", 0.015));
                a.stock_w.push_back(st.value("w", 0.06));
                a.stock_t_L.push_back(st.value("t_L", 12.0));
                a.caps.push_back(st.at("cap").get<double>());
                a.cross_w.push_back(st.value("cross_w", 0.0));
            }
        }
        if (j.contains("panel")) {
            const auto& p = j.at("panel");
            read(p, "maturities", a.panel_maturities);
            read(p, "rule", a.panel_rule);
            read(p, "noise", a.panel_noise);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::malformed_input, "config: " + std::string(e.what()));
    }
}

} // namespace detail_sim

inline int cmd_simulate(const Common& c, SimulateArgs a, std::ostream& out, std::ostream& err) {
    (void)err;
    if (!a.config.empty())
        detail_sim::apply_config(a.config, a);
    const auto rule = parse_gamma_rule(a.panel_rule);
    if (!rule || *rule == GammaRule::implied)
        throw UsageError("--panel-rule must be theoretical, sticky-strike or sticky-delta");

    const std::size_t k = a.stocks;
    FactorSimConfig cfg;
    cfg.seed = a.seed;
    cfg.market = {a.n, a.sigma_bar, a.w, a.t_L, a.seed};
    cfg.cross_t_L = a.cross_t_L;
    if (k > 0) {
        cfg.betas = detail_sim::broadcast(a.betas, k, "beta");
        const auto sb = detail_sim::broadcast(a.stock_sigma_bar, k, "stock-sigma-bar");
        const auto sw = detail_sim::broadcast(a.stock_w, k, "stock-w");
        const auto st = detail_sim::broadcast(a.stock_t_L, k, "stock-t_L");
        if (a.caps.empty()) {
            // log-spaced between 5e8 and 5e10
            for (std::size_t i = 0; i < k; ++i)
                cfg.caps.push_back(5e8 * std::pow(100.0, k > 1 ? static_cast<double>(i) / (k - 1) : 0.5));
        } else {
            cfg.caps = detail_sim::broadcast(a.caps, k, "caps");
        }
        if (!a.cross_w.empty())
            cfg.cross_w = detail_sim::broadcast(a.cross_w, k, "cross-w");
        for (std::size_t i = 0; i < k; ++i)
            cfg.idio.push_back({a.n, sb[i], sw[i], st[i], a.seed});
    }
    const auto u = simulate_factor_universe(cfg, c.jobs);

    const fs::path dir = a.out_dir.empty() ? output_dir() : fs::path(a.out_dir);
    auto write = [&](const std::string& name, const Table& t) {
        const fs::path path = dir / name;
        write_table(path, t, OutputFormat::delimited);
        out << "wrote " << path.generic_string() << '\n';
    };
    write(u.market.ticker() + ".csv", returns_table(u.market));
    for (const auto& s : u.stocks)
        write(s.ticker() + ".csv", returns_table(s));
    write("metadata.csv", metadata_table(u.metadata));

    if (!a.panel_maturities.empty()) {
        // first-order kernel: A = 2w, alpha = A / (2 sigma_bar)
        auto panel_for = [&](const ReturnSeries& s, double w, double sigma_bar, double t_L, std::uint64_t stream) {
            const double alpha = w / sigma_bar;
            const auto p = simulate_vol_panel(s, *rule, alpha, t_L, a.panel_noise, a.panel_maturities,
                                              derive_seed(a.seed, stream), moment_summary(s).sigma);
            write(s.ticker() + "_panel.csv", vol_panel_table(p));
            out << "panel: " << s.ticker() << " rule=" << to_string(*rule) << " alpha=" << num(alpha)
                << " t_L=" << num(t_L) << '\n';
        };
        panel_for(u.market, a.w, a.sigma_bar, a.t_L, 1000);
        for (std::size_t i = 0; i < k; ++i)
            panel_for(u.stocks[i], cfg.idio[i].w, cfg.idio[i].sigma_bar, cfg.idio[i].t_L, 1001 + i);
    }
    out << "simulate: n=" << a.n << " stocks=" << k << " seed=" << a.seed << '\n';
    return exit_ok;
}

// ---------------------------------------------------------------------------

/// Parses `args` (program name first) and runs one subcommand.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Leverage, skew term structure and implied-leverage toolkit", "smiledyn"};
    app.footer(plot_map);
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-o,--out", common.out, "Output file ('-' for standard output)");
        sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--jobs", common.jobs, "Worker threads")->check(CLI::Range(1u, 256u));
    };

    LeverageArgs lev;
    auto* s_lev = app.add_subcommand("leverage", "Leverage correlation curve of a returns file");
    s_lev->add_option("returns", lev.returns, "Returns file (date,return)")->required();
    s_lev->add_option("--max-lag", lev.max_lag, "Largest lag in days")->check(CLI::Range(1, 100000));
    s_lev->add_flag("--log-returns", lev.log_returns, "Input values are log returns");
    s_lev->add_flag("--bootstrap", lev.bootstrap, "Block-bootstrap standard errors");
    s_lev->add_option("--fit-out", lev.fit_out, "Also write the exponential fit table here");
    add_common(s_lev);

    SkewArgs skew;
    std::optional<double> skew_A, skew_tL, skew_z1;
    auto* s_skew = app.add_subcommand("skew", "Skew term structure");
    s_skew->add_option("returns", skew.returns, "Returns file");
    s_skew->add_option("--maturities", skew.maturities, "Maturities in days")->delimiter(',')->check(CLI::PositiveNumber);
    s_skew->add_option("--method", skew.method, "discrete | closed-form | direct")
        ->check(CLI::IsMember({"discrete", "closed-form", "direct"}));
    s_skew->add_option("--A", skew_A, "Leverage amplitude (closed-form only)");
    s_skew->add_option("--t_L", skew_tL, "Leverage decay time in days (closed-form only)");
    s_skew->add_option("--zeta1", skew_z1, "Daily skewness (closed-form only)");
    s_skew->add_flag("--log-returns", skew.log_returns, "Input values are log returns");
    add_common(s_skew);

    DecomposeArgs dec;
    auto* s_dec = app.add_subcommand("decompose", "One-factor decomposition of a stock's skew");
    s_dec->add_option("stock", dec.stock, "Stock returns file")->required();
    s_dec->add_option("market", dec.market, "Market returns file")->required();
    s_dec->add_option("--maturities", dec.maturities, "Maturities in days")->delimiter(',')->check(CLI::PositiveNumber);
    s_dec->add_flag("--log-returns", dec.log_returns, "Input values are log returns");
    add_common(s_dec);

    GammaArgs gam;
    std::optional<double> gam_A, gam_tL, gam_s0, gam_z1;
    auto* s_gam = app.add_subcommand("gamma", "Predicted implied leverage gamma(T)");
    s_gam->add_option("--A", gam_A, "Leverage amplitude");
    s_gam->add_option("--t_L", gam_tL, "Leverage decay time in days");
    s_gam->add_option("--sigma0", gam_s0, "Daily vol of the underlying");
    s_gam->add_option("--zeta1", gam_z1, "Add the daily-skewness term to the theoretical rule");
    s_gam->add_option("--maturities", gam.maturities, "Maturities in days")->delimiter(',')->check(CLI::PositiveNumber);
    s_gam->add_option("--rules", gam.rules, "theoretical,sticky-strike,sticky-delta")->delimiter(',');
    s_gam->add_option("--from-returns", gam.from_returns, "Fit A/sigma per returns file and pool them");
    s_gam->add_flag("--log-returns", gam.log_returns, "Input values are log returns");
    add_common(s_gam);

    ImpliedArgs imp;
    auto* s_imp = app.add_subcommand("gamma-implied", "Measured implied leverage from vol panels");
    s_imp->add_option("--panel", imp.panels, "ATM vol panel file (repeatable)")->required();
    s_imp->add_option("--returns", imp.returns, "Returns file, paired with --panel by position")->required();
    s_imp->add_option("--ticker", imp.tickers, "Ticker per pair (default: returns file stem)");
    s_imp->add_option("--maturities", imp.maturities, "Maturities in days (default: quoted tenors)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    s_imp->add_flag("--vol-annualized", imp.vol_annualized, "Panel vols are annualized");
    s_imp->add_flag("--winsorize", imp.winsorize, "Clamp both variables to their 1%-99% quantiles");
    s_imp->add_flag("--absolute-change", imp.absolute_change, "Regress absolute vol changes (diagnostic)");
    s_imp->add_flag("--log-returns", imp.log_returns, "Input values are log returns");
    add_common(s_imp);

    McapArgs mc;
    auto* s_mc = app.add_subcommand("mcap", "Regress implied leverage on log10 market cap");
    s_mc->add_option("gamma", mc.gamma_file, "Implied-gamma file")->required();
    s_mc->add_option("metadata", mc.metadata_file, "Metadata file")->required();
    s_mc->add_option("--T", mc.T, "Maturities in days (default: all in the file)")->delimiter(',');
    add_common(s_mc);

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "Generate synthetic returns, metadata and vol panels");
    s_sim->add_option("--config", sim.config, "JSON config file (overrides flags)");
    s_sim->add_option("--out-dir", sim.out_dir, "Output directory");
    s_sim->add_option("--n", sim.n, "Days per path")->check(CLI::Range(std::size_t{1000}, std::size_t{100000000}));
    s_sim->add_option("--seed", sim.seed, "Master seed");
    s_sim->add_option("--sigma-bar", sim.sigma_bar, "Market baseline daily vol");
    s_sim->add_option("--w", sim.w, "Market feedback amplitude");
    s_sim->add_option("--t_L", sim.t_L, "Market kernel decay in days");
    s_sim->add_option("--stocks", sim.stocks, "Number of stocks");
    s_sim->add_option("--beta", sim.betas, "Stock betas")->delimiter(',');
    s_sim->add_option("--stock-sigma-bar", sim.stock_sigma_bar, "Idiosyncratic baseline vols")->delimiter(',');
    s_sim->add_option("--stock-w", sim.stock_w, "Idiosyncratic feedback amplitudes")->delimiter(',');
    s_sim->add_option("--stock-t_L", sim.stock_t_L, "Idiosyncratic kernel decays")->delimiter(',');
    s_sim->add_option("--caps", sim.caps, "Market caps")->delimiter(',');
    s_sim->add_option("--cross-w", sim.cross_w, "Market-to-idiosyncratic feedback amplitudes")->delimiter(',');
    s_sim->add_option("--cross-t_L", sim.cross_t_L, "Cross kernel decay in days");
    s_sim->add_option("--panel-maturities", sim.panel_maturities, "Vol panel tenors (none: no panels)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    s_sim->add_option("--panel-rule", sim.panel_rule, "Rule driving the vol panels");
    s_sim->add_option("--panel-noise", sim.panel_noise, "Relative vol-of-vol noise")->check(CLI::NonNegativeNumber);
    add_common(s_sim);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (s_lev->parsed())
            return cmd_leverage(common, lev, out, err);
        if (s_skew->parsed()) {
            skew.A = skew_A;
            skew.t_L = skew_tL;
            skew.zeta1 = skew_z1;
            return cmd_skew(common, skew, out, err);
        }
        if (s_dec->parsed())
            return cmd_decompose(common, dec, out, err);
        if (s_gam->parsed()) {
            gam.A = gam_A;
            gam.t_L = gam_tL;
            gam.sigma0 = gam_s0;
            gam.zeta1 = gam_z1;
            return cmd_gamma(common, gam, out, err);
        }
        if (s_imp->parsed())
            return cmd_gamma_implied(common, imp, out, err);
        if (s_mc->parsed())
            return cmd_mcap(common, mc, out, err);
        if (s_sim->parsed())
            return cmd_simulate(common, sim, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_usage;
}

} // namespace smiledyn::cli
