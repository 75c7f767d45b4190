#ifndef SFW_DETAIL_NUMERIC_HPP
#define SFW_DETAIL_NUMERIC_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

namespace sfw::detail {

/// Points spaced uniformly in log between lo and hi (inclusive), lo > 0.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    g.back() = hi;
    return g;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return g;
}

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
};

/// Integral of g(w) dw over [lo, hi] (0 < lo < hi), computed as an integral over s = ln w with
/// Gauss-Kronrod 15/31 on panels of `panel_decades`, bisected until the Kronrod error estimate is
/// below max(rel_tol |I_panel|, abs_tol) or 12 levels deep. Suited to integrands spanning many decades.
inline QuadratureResult integrate_log(const std::function<double(double)>& g, double lo, double hi,
                                      double rel_tol = 1e-11, double panel_decades = 0.5, double abs_tol = 0.0) {
    using boost::math::quadrature::gauss_kronrod;
    QuadratureResult out;
    const double     a         = std::log(lo);
    const double     b         = std::log(hi);
    const double     step      = panel_decades * std::log(10.0);
    const auto       panels    = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / step)));
    const auto       integrand = [&g](double s) {
        const double w = std::exp(s);
        return g(w) * w;
    };
    const auto panel_abs = abs_tol / static_cast<double>(panels);
    std::function<void(double, double, int, double)> adapt = [&](double x0, double x1, int depth, double tol_abs) {
        double       err = 0.0;
        const double v   = gauss_kronrod<double, 31>::integrate(integrand, x0, x1, 0, 0.0, &err);
        if (depth >= 12 || err <= std::max(rel_tol * std::abs(v), tol_abs) || !std::isfinite(v)) {
            out.value += v;
            out.error += err;
            return;
        }
        const double mid = 0.5 * (x0 + x1);
        adapt(x0, mid, depth + 1, 0.5 * tol_abs);
        adapt(mid, x1, depth + 1, 0.5 * tol_abs);
    };
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo_s = a + (b - a) * static_cast<double>(p) / static_cast<double>(panels);
        const double hi_s = a + (b - a) * static_cast<double>(p + 1) / static_cast<double>(panels);
        adapt(lo_s, hi_s, 0, panel_abs);
    }
    return out;
}

/// Local refinement of an extremum of fn bracketed by [lo, hi]. Returns (argument, value).
/// `maximize` flips the sign internally.
inline std::pair<double, double> refine_extremum(const std::function<double(double)>& fn, double lo, double hi,
                                                 bool maximize) {
    const auto target = [&](double x) { return maximize ? -fn(x) : fn(x); };
    const auto r      = boost::math::tools::brent_find_minima(target, lo, hi, 40);
    return {r.first, maximize ? -r.second : r.second};
}

struct LineFit {
    double slope           = 0.0;
    double intercept       = 0.0;
    double slope_stderr    = 0.0;
    double intercept_stderr = 0.0;
};

/// Ordinary least squares y = intercept + slope x with standard errors.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double     mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope     = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2 && sxx > 0.0) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        const double s2    = rss / (n - 2.0);
        f.slope_stderr     = std::sqrt(s2 / sxx);
        f.intercept_stderr = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    return f;
}

inline bool nearly_zero(double x, double tol = 1e-12) { return std::abs(x) <= tol; }

} // namespace sfw::detail

#endif // SFW_DETAIL_NUMERIC_HPP
