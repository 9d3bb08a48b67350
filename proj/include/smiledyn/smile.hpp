#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "table.hpp"

namespace smiledyn {

// Vol per sqrt(day), T in days, rate per day.
struct SmileParams {
    double sigma = 0.0;
    double zeta = 0.0;
    double kappa = 0.0;
    double T = 0.0;
    double rate = 0.0;
    double spot = 0.0;
};

enum class SmileOrder { skew_only, skew_kurtosis };

struct SmilePoint {
    double sigma_implied = 0.0;
    // Moneyness outside the validity window; the value is still returned.
    bool out_of_window = false;
};

inline void validate(const SmileParams& p) {
    require(p.sigma > 0.0 && p.T > 0.0 && p.spot > 0.0, ErrorKind::invalid_argument,
            "smile: sigma, T and spot must be positive");
}

/// M = (K e^{-rT} / S - 1) / (sigma sqrt(T)).
inline double moneyness(double strike, const SmileParams& p) {
    validate(p);
    require(strike > 0.0, ErrorKind::invalid_argument, "moneyness: strike must be positive");
    return (strike * std::exp(-p.rate * p.T) / p.spot - 1.0) / (p.sigma * std::sqrt(p.T));
}

/// Near-the-money cumulant expansion of the implied vol.
inline SmilePoint implied_vol(double M, const SmileParams& p, SmileOrder order = SmileOrder::skew_only,
                              double window = 1.5) {
    validate(p);
    SmilePoint out;
    out.sigma_implied = p.sigma * (1.0 + p.zeta * M / 6.0);
    if (order == SmileOrder::skew_kurtosis)
        out.sigma_implied += p.sigma * p.kappa * (M * M - 1.0) / 24.0;
    out.out_of_window = std::abs(M) > window;
    return out;
}

inline Table smile_table(std::span<const double> strikes, const SmileParams& p,
                         SmileOrder order = SmileOrder::skew_only, double window = 1.5) {
    Table t{{"K", "M", "sigma_implied", "flag"}, {}};
    for (double K : strikes) {
        const double M = moneyness(K, p);
        const auto pt = implied_vol(M, p, order, window);
        t.rows.push_back({K, M, pt.sigma_implied, std::string(pt.out_of_window ? "out-of-window" : "ok")});
    }
    return t;
}

} // namespace smiledyn
