#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "date.hpp"
#include "detail/csv.hpp"
#include "detail/format.hpp"
#include "error.hpp"
#include "table.hpp"

namespace smiledyn {

// Trading days per year, used only to convert annualized vol quotes.
inline constexpr double trading_days_per_year = 252.0;

/// A (dates, values) view used wherever an operation accepts either a full
/// ReturnSeries or a bare dated column.
struct DatedColumn {
    std::span<const Date> dates;
    std::span<const double> values;
};

/// Daily relative (close-to-close) returns of one instrument.
///
/// Dates are strictly increasing, every return is finite and greater than -1,
/// and there are at least two observations.
class ReturnSeries {
  public:
    ReturnSeries(std::string ticker, std::vector<Date> dates, std::vector<double> returns,
                 std::optional<double> market_cap = std::nullopt)
        : ticker_(std::move(ticker)), dates_(std::move(dates)), returns_(std::move(returns)),
          market_cap_(market_cap) {
        require(dates_.size() == returns_.size(), ErrorKind::invalid_argument,
                "return series: dates and returns differ in length");
        require(returns_.size() >= 2, ErrorKind::too_few_samples, "return series needs at least 2 observations");
        for (std::size_t i = 1; i < dates_.size(); ++i)
            require(dates_[i - 1] < dates_[i], ErrorKind::malformed_input,
                    "return series dates must be strictly increasing (" + format_iso_date(dates_[i]) + ")");
        for (double r : returns_)
            require(std::isfinite(r) && r > -1.0, ErrorKind::malformed_input,
                    "return series contains a non-finite return or one at or below -100%");
        require(!market_cap_ || *market_cap_ > 0.0, ErrorKind::invalid_argument, "market cap must be positive");
    }

    const std::string& ticker() const noexcept { return ticker_; }
    std::span<const Date> dates() const noexcept { return dates_; }
    std::span<const double> values() const noexcept { return returns_; }
    std::optional<double> market_cap() const noexcept { return market_cap_; }
    std::size_t size() const noexcept { return returns_.size(); }
    DatedColumn column() const noexcept { return {dates_, returns_}; }

    void set_market_cap(std::optional<double> cap) {
        require(!cap || *cap > 0.0, ErrorKind::invalid_argument, "market cap must be positive");
        market_cap_ = cap;
    }

    friend bool operator==(const ReturnSeries&, const ReturnSeries&) = default;

  private:
    std::string ticker_;
    std::vector<Date> dates_;
    std::vector<double> returns_;
    std::optional<double> market_cap_;
};

/// Date x maturity panel of at-the-money implied vols (per square-root day).
/// Missing entries are stored as NaN.
class AtmVolPanel {
  public:
    AtmVolPanel(std::string ticker, std::vector<Date> dates, std::vector<double> maturities,
                std::vector<double> vols)
        : ticker_(std::move(ticker)), dates_(std::move(dates)), maturities_(std::move(maturities)),
          vols_(std::move(vols)) {
        require(vols_.size() == dates_.size() * maturities_.size(), ErrorKind::invalid_argument,
                "vol panel: matrix size does not match dates x maturities");
        require(!maturities_.empty(), ErrorKind::invalid_argument, "vol panel needs at least one maturity");
        for (std::size_t j = 0; j < maturities_.size(); ++j) {
            require(maturities_[j] > 0.0, ErrorKind::invalid_argument, "vol panel maturities must be positive");
            require(j == 0 || maturities_[j - 1] < maturities_[j], ErrorKind::invalid_argument,
                    "vol panel maturities must be strictly increasing");
        }
        for (std::size_t i = 1; i < dates_.size(); ++i)
            require(dates_[i - 1] < dates_[i], ErrorKind::malformed_input,
                    "vol panel dates must be strictly increasing");
        for (double v : vols_)
            require(std::isnan(v) || (std::isfinite(v) && v > 0.0), ErrorKind::malformed_input,
                    "vol panel entries must be positive and finite");
    }

    const std::string& ticker() const noexcept { return ticker_; }
    std::span<const Date> dates() const noexcept { return dates_; }
    std::span<const double> maturities() const noexcept { return maturities_; }
    std::size_t rows() const noexcept { return dates_.size(); }
    std::size_t cols() const noexcept { return maturities_.size(); }

    // NaN when missing.
    double vol(std::size_t row, std::size_t col) const { return vols_.at(row * maturities_.size() + col); }
    bool has(std::size_t row, std::size_t col) const { return !std::isnan(vol(row, col)); }

    AtmVolPanel scaled(double factor) const {
        require(factor > 0.0, ErrorKind::invalid_argument, "vol scale factor must be positive");
        auto v = vols_;
        for (double& x : v)
            x *= factor;
        return AtmVolPanel(ticker_, dates_, maturities_, std::move(v));
    }

  private:
    std::string ticker_;
    std::vector<Date> dates_;
    std::vector<double> maturities_;
    std::vector<double> vols_;
};

struct InstrumentMeta {
    std::string ticker;
    std::optional<double> market_cap;
    bool is_index = false;
};

struct AlignedPair {
    std::vector<Date> dates;
    std::vector<double> series_a;
    std::vector<double> series_b;
};

/// Result of a tolerant load: the value plus the rows that were skipped.
template <class T>
struct Loaded {
    T value;
    std::size_t dropped_rows = 0;
    std::vector<std::string> warnings;
};

struct LoadOptions {
    // Treat the value column as log returns and convert to relative returns.
    bool log_returns = false;
    // Divide vols by sqrt(252) (input quoted annualized).
    bool vol_annualized = false;
};

// ---------------------------------------------------------------------------
// Price conversion

/// r_t = S_{t+1}/S_t - 1.
inline std::vector<double> returns_from_prices(std::span<const double> prices) {
    require(prices.size() >= 2, ErrorKind::too_few_samples, "need at least 2 prices");
    for (double p : prices)
        require(std::isfinite(p) && p > 0.0, ErrorKind::invalid_argument, "non-positive price");
    std::vector<double> out(prices.size() - 1);
    for (std::size_t i = 0; i + 1 < prices.size(); ++i)
        out[i] = prices[i + 1] / prices[i] - 1.0;
    return out;
}

/// Return series dated by the later close of each pair.
inline ReturnSeries returns_from_prices(std::string ticker, std::span<const Date> dates,
                                        std::span<const double> prices) {
    require(dates.size() == prices.size(), ErrorKind::invalid_argument, "dates and prices differ in length");
    require(prices.size() >= 3, ErrorKind::too_few_samples, "need at least 3 prices");
    auto r = returns_from_prices(prices);
    return ReturnSeries(std::move(ticker), std::vector<Date>(dates.begin() + 1, dates.end()), std::move(r));
}

/// Inverse of returns_from_prices given the first price.
inline std::vector<double> prices_from_returns(double first_price, std::span<const double> returns) {
    std::vector<double> out;
    out.reserve(returns.size() + 1);
    out.push_back(first_price);
    for (double r : returns)
        out.push_back(out.back() * (1.0 + r));
    return out;
}

// ---------------------------------------------------------------------------
// Loaders

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorKind::file_not_found, "file not found: " + path.string());
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorKind::file_not_found, "cannot open: " + path.string());
    return is;
}

struct DatedRow {
    Date date;
    double value;
};

inline std::string row_context(std::size_t line_no) { return "line " + format_integer(static_cast<long long>(line_no)); }

} // namespace detail

/// Loads a `date,return` (or `date,log_return`, or `date,close`) file.
///
/// Rows with an unparsable date or value are dropped and counted. The output
/// is sorted by date regardless of input order. Duplicate dates are an error.
inline Loaded<ReturnSeries> load_returns(std::istream& is, const std::string& ticker, LoadOptions opts = {}) {
    std::string line;
    require(detail::next_line(is, line), ErrorKind::malformed_input, "empty returns file");
    const char delim = detail::detect_delimiter(line);
    const auto header = detail::split(line, delim);
    require(header.size() >= 2 && detail::lower(header[0]) == "date", ErrorKind::malformed_input,
            "malformed header: expected date,return");
    const std::string value_col = detail::lower(header[1]);
    enum class Kind { relative, log, close } kind;
    if (value_col == "return")
        kind = opts.log_returns ? Kind::log : Kind::relative;
    else if (value_col == "log_return")
        kind = Kind::log;
    else if (value_col == "close")
        kind = Kind::close;
    else
        throw Error(ErrorKind::malformed_input, "malformed header: expected date,return (got '" + line + "')");

    std::vector<detail::DatedRow> rows;
    std::vector<std::string> warnings;
    std::size_t dropped = 0;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty())
            continue;
        const auto fields = detail::split(line, delim);
        std::optional<Date> date = fields.size() >= 2 ? parse_iso_date(fields[0]) : std::nullopt;
        std::optional<double> value = fields.size() >= 2 ? detail::parse_double(fields[1]) : std::nullopt;
        if (date && value && std::isfinite(*value)) {
            if (kind == Kind::log)
                *value = std::expm1(*value);
            const bool ok = kind == Kind::close ? *value > 0.0 : *value > -1.0;
            if (ok) {
                rows.push_back({*date, *value});
                continue;
            }
        }
        ++dropped;
        warnings.push_back(detail::row_context(line_no) + ": dropped unparsable or invalid row");
    }

    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        require(rows[i - 1].date != rows[i].date, ErrorKind::malformed_input,
                "duplicate date " + format_iso_date(rows[i].date));

    std::vector<Date> dates(rows.size());
    std::vector<double> values(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        dates[i] = rows[i].date;
        values[i] = rows[i].value;
    }
    if (kind == Kind::close) {
        require(values.size() >= 3, ErrorKind::too_few_samples, "fewer than 3 valid price rows");
        return {returns_from_prices(ticker, dates, values), dropped, std::move(warnings)};
    }
    require(values.size() >= 2, ErrorKind::too_few_samples, "fewer than 2 valid return rows");
    return {ReturnSeries(ticker, std::move(dates), std::move(values)), dropped, std::move(warnings)};
}

inline Loaded<ReturnSeries> load_returns(const std::filesystem::path& path, const std::string& ticker,
                                         LoadOptions opts = {}) {
    auto is = detail::open_input(path);
    return load_returns(is, ticker, opts);
}

/// Long-form `date,maturity_days,atm_vol` panel.
inline Loaded<AtmVolPanel> load_vol_panel(std::istream& is, const std::string& ticker, LoadOptions opts = {}) {
    std::string line;
    require(detail::next_line(is, line), ErrorKind::malformed_input, "empty vol panel file");
    const char delim = detail::detect_delimiter(line);
    const auto header = detail::split(line, delim);
    require(header.size() >= 3 && detail::lower(header[0]) == "date" && detail::lower(header[1]) == "maturity_days" &&
                detail::lower(header[2]) == "atm_vol",
            ErrorKind::malformed_input, "malformed header: expected date,maturity_days,atm_vol");

    struct Row {
        Date date;
        double maturity;
        double vol;
    };
    std::vector<Row> rows;
    std::vector<std::string> warnings;
    std::size_t dropped = 0;
    std::size_t line_no = 1;
    const double scale = opts.vol_annualized ? 1.0 / std::sqrt(trading_days_per_year) : 1.0;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty())
            continue;
        const auto f = detail::split(line, delim);
        if (f.size() >= 3) {
            auto date = parse_iso_date(f[0]);
            auto mat = detail::parse_double(f[1]);
            auto vol = detail::parse_double(f[2]);
            if (date && mat && vol && std::isfinite(*mat) && *mat > 0.0 && std::isfinite(*vol) && *vol > 0.0) {
                rows.push_back({*date, *mat, *vol * scale});
                continue;
            }
        }
        ++dropped;
        warnings.push_back(detail::row_context(line_no) + ": dropped unparsable, missing or non-positive vol");
    }
    require(!rows.empty(), ErrorKind::too_few_samples, "vol panel has no valid rows");

    std::vector<Date> dates;
    std::vector<double> mats;
    for (const auto& r : rows) {
        dates.push_back(r.date);
        mats.push_back(r.maturity);
    }
    std::sort(dates.begin(), dates.end());
    dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
    std::sort(mats.begin(), mats.end());
    mats.erase(std::unique(mats.begin(), mats.end()), mats.end());

    std::vector<double> vols(dates.size() * mats.size(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& r : rows) {
        const auto i = static_cast<std::size_t>(std::lower_bound(dates.begin(), dates.end(), r.date) - dates.begin());
        const auto j = static_cast<std::size_t>(std::lower_bound(mats.begin(), mats.end(), r.maturity) - mats.begin());
        double& cell = vols[i * mats.size() + j];
        require(std::isnan(cell), ErrorKind::malformed_input,
                "duplicate vol quote for " + format_iso_date(r.date) + " maturity " + detail::format_number(r.maturity));
        cell = r.vol;
    }
    return {AtmVolPanel(ticker, std::move(dates), std::move(mats), std::move(vols)), dropped, std::move(warnings)};
}

inline Loaded<AtmVolPanel> load_vol_panel(const std::filesystem::path& path, const std::string& ticker,
                                          LoadOptions opts = {}) {
    auto is = detail::open_input(path);
    return load_vol_panel(is, ticker, opts);
}

/// `ticker,market_cap,is_index`. An empty market cap means unknown.
inline Loaded<std::vector<InstrumentMeta>> load_metadata(std::istream& is) {
    std::string line;
    require(detail::next_line(is, line), ErrorKind::malformed_input, "empty metadata file");
    const char delim = detail::detect_delimiter(line);
    const auto header = detail::split(line, delim);
    require(header.size() >= 3 && detail::lower(header[0]) == "ticker" && detail::lower(header[1]) == "market_cap" &&
                detail::lower(header[2]) == "is_index",
            ErrorKind::malformed_input, "malformed header: expected ticker,market_cap,is_index");
    Loaded<std::vector<InstrumentMeta>> out;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty())
            continue;
        const auto f = detail::split(line, delim);
        bool ok = f.size() >= 3 && !f[0].empty();
        InstrumentMeta meta;
        if (ok) {
            meta.ticker = std::string(f[0]);
            if (!f[1].empty() && detail::lower(f[1]) != "na") {
                auto cap = detail::parse_double(f[1]);
                ok = cap && std::isfinite(*cap) && *cap > 0.0;
                if (ok)
                    meta.market_cap = *cap;
            }
            const std::string flag = detail::lower(f[2]);
            if (flag == "1" || flag == "true")
                meta.is_index = true;
            else if (flag == "0" || flag == "false" || flag.empty())
                meta.is_index = false;
            else
                ok = false;
        }
        if (ok) {
            out.value.push_back(std::move(meta));
        } else {
            ++out.dropped_rows;
            out.warnings.push_back(detail::row_context(line_no) + ": dropped malformed metadata row");
        }
    }
    return out;
}

inline Loaded<std::vector<InstrumentMeta>> load_metadata(const std::filesystem::path& path) {
    auto is = detail::open_input(path);
    return load_metadata(is);
}

// ---------------------------------------------------------------------------
// Writers (the same formats the loaders read)

inline Table returns_table(const ReturnSeries& s) {
    Table t{{"date", "return"}, {}};
    t.rows.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        t.rows.push_back({format_iso_date(s.dates()[i]), s.values()[i]});
    return t;
}

inline Table vol_panel_table(const AtmVolPanel& p) {
    Table t{{"date", "maturity_days", "atm_vol"}, {}};
    for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t j = 0; j < p.cols(); ++j)
            if (p.has(i, j))
                t.rows.push_back({format_iso_date(p.dates()[i]), p.maturities()[j], p.vol(i, j)});
    return t;
}

inline Table metadata_table(std::span<const InstrumentMeta> metas) {
    Table t{{"ticker", "market_cap", "is_index"}, {}};
    for (const auto& m : metas)
        t.rows.push_back({m.ticker, m.market_cap ? Cell{*m.market_cap} : Cell{std::string{}},
                          static_cast<long long>(m.is_index ? 1 : 0)});
    return t;
}

// ---------------------------------------------------------------------------
// Alignment and bucketing

/// Inner join on date labels, preserving date order.
inline AlignedPair align(DatedColumn a, DatedColumn b) {
    require(!a.dates.empty() && !b.dates.empty(), ErrorKind::invalid_argument, "align: empty input");
    require(a.dates.size() == a.values.size() && b.dates.size() == b.values.size(), ErrorKind::invalid_argument,
            "align: dates and values differ in length");
    AlignedPair out;
    std::size_t i = 0, j = 0;
    while (i < a.dates.size() && j < b.dates.size()) {
        if (a.dates[i] < b.dates[j]) {
            ++i;
        } else if (b.dates[j] < a.dates[i]) {
            ++j;
        } else {
            out.dates.push_back(a.dates[i]);
            out.series_a.push_back(a.values[i]);
            out.series_b.push_back(b.values[j]);
            ++i;
            ++j;
        }
    }
    require(!out.dates.empty(), ErrorKind::empty_intersection, "align: no common dates");
    return out;
}

inline AlignedPair align(const ReturnSeries& a, const ReturnSeries& b) { return align(a.column(), b.column()); }

struct CapBucket {
    std::string label;
    double lower;  // inclusive; -inf for the first bucket
    double upper;  // exclusive; +inf for the last bucket
    std::vector<std::string> tickers;
};

struct CapBuckets {
    std::vector<CapBucket> buckets;
    std::vector<std::string> unknown_cap;
};

/// Half-open buckets [edge_i, edge_{i+1}); a cap equal to an edge goes to the upper bucket.
inline CapBuckets bucket_by_cap(std::span<const InstrumentMeta> metas, std::span<const double> edges) {
    require(std::is_sorted(edges.begin(), edges.end()) &&
                std::adjacent_find(edges.begin(), edges.end()) == edges.end(),
            ErrorKind::invalid_argument, "bucket edges must be strictly ascending");
    CapBuckets out;
    if (metas.empty())
        return out;
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b <= edges.size(); ++b) {
        const double lo = b == 0 ? -inf : edges[b - 1];
        const double hi = b == edges.size() ? inf : edges[b];
        out.buckets.push_back({"[" + detail::format_number(lo) + "," + detail::format_number(hi) + ")", lo, hi, {}});
    }
    for (const auto& m : metas) {
        if (!m.market_cap) {
            out.unknown_cap.push_back(m.ticker);
            continue;
        }
        const auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), *m.market_cap) - edges.begin());
        out.buckets[b].tickers.push_back(m.ticker);
    }
    return out;
}

} // namespace smiledyn
