#pragma once

#include <cmath>

namespace smiledyn::detail {

// Golden-section search for a minimum of a unimodal f on [lo, hi].
template <class F>
double golden_section_minimize(F&& f, double lo, double hi, double tol = 1e-10, int max_iter = 200) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iter && (b - a) > tol * (std::abs(a) + std::abs(b) + tol); ++it) {
        // ties move toward the lower end
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? c : d;
}

} // namespace smiledyn::detail
