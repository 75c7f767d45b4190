#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sfw/basis.hpp"
#include "sfw/precondition.hpp"
#include "sfw/toeplitz.hpp"
#include "sfw/truncation_budget.hpp"

using namespace sfw;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

double gk(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 10, 1e-10);
}

// Part of t_k carried by |w| outside [w_m, w_M]: (1/pi) \int cos(k u) S(w0 tan(u/2)) du over
// u in [0, u_m] and [u_M, pi]. Direct quadrature, independent of the FFT grid.
std::vector<double> outside_t(const SpectralFunction& S, double omega_0, double omega_m, double omega_M,
                              std::size_t n) {
    const double        u_m = circle_angle(omega_m, omega_0);
    const double        u_M = circle_angle(omega_M, omega_0);
    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto f = [&](double u) {
            const double w = omega_0 * std::tan(0.5 * u);
            return std::cos(static_cast<double>(k) * u) * S.real(w);
        };
        d[k] = (gk(f, 0.0, u_m) + gk(f, u_M, pi)) / pi;
    }
    return d;
}

// Part of s_k from |w| outside the band: (1/2pi) \int e^{-iku} g~(u) du over both signs of u.
std::vector<cplx> outside_s(const SpectralFunction& g, double omega_0, double omega_m, double omega_M,
                            std::size_t n) {
    const double      u_m   = circle_angle(omega_m, omega_0);
    const double      u_M   = circle_angle(omega_M, omega_0);
    const double      scale = std::sqrt(pi * omega_0);
    std::vector<cplx> d(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto gt = [&](double u) {
            const double w = omega_0 * std::tan(0.5 * u);
            return std::polar(1.0, -static_cast<double>(k) * u) * scale * std::polar(1.0 / std::cos(0.5 * u), -0.5 * u) *
                   g(w);
        };
        const auto re = [&](double u) { return gt(u).real() + gt(-u).real(); };
        const auto im = [&](double u) { return gt(u).imag() + gt(-u).imag(); };
        d[k] = cplx{gk(re, 0.0, u_m) + gk(re, u_M, pi), gk(im, 0.0, u_m) + gk(im, u_M, pi)} / (2.0 * pi);
    }
    return d;
}

} // namespace

TEST_CASE("choose_scale", "[truncation_budget]") {
    CHECK_THAT(choose_scale(1.0, 100.0), WithinRel(10.0, 1e-15));
    CHECK_THAT(choose_scale(2.0 * pi / 1600.0, pi * 512.0), WithinAbs(2.51, 5e-3));
    CHECK_THROWS_AS(choose_scale(5.0, 5.0), std::invalid_argument);
    CHECK_THROWS_AS(choose_scale(0.0, 5.0), std::invalid_argument);
    CHECK(scale_well_separated(1.0, 100.0, 10.0));
    CHECK_FALSE(scale_well_separated(1.0, 100.0, 50.0));
}

TEST_CASE("delta_t bound", "[truncation_budget]") {
    CHECK_THAT(delta_t_bound_optimal(pi, 1.0, 1e4), WithinRel(0.04, 1e-14));
    for (double ratio : {1e-4, 1e-6, 1e-8}) {
        const double wm = 1.0, wM = 1.0 / ratio;
        const double general = delta_t_bound(pi, wm, wM, choose_scale(wm, wM));
        CHECK_THAT(general, WithinRel(delta_t_bound_optimal(pi, wm, wM), 1e-2));
    }
    CHECK(delta_t_bound(1.0, 1e-12, 1e12, 1.0) < 1e-11);
    CHECK(delta_t_bound(1.0, 1.0, 10.0, 3.0) >= 0.0);
}

TEST_CASE("n_max", "[truncation_budget]") {
    CHECK(n_max(1.0, 1.0, 1e6) == 1000);
    CHECK(n_max(10.0, 1.0, 1e4) == 10);
    CHECK(n_max(1e6, 1.0, 10.0) == 1);
    CHECK_THROWS_AS(n_max(0.5, 1.0, 10.0), std::invalid_argument);
}

TEST_CASE("delta_s bound", "[truncation_budget]") {
    const auto ex   = make_paper_example();
    auto       asym = ex.asymptotics;
    CHECK(delta_s_bound(asym, 0.1, 3.0) == 0.0);

    asym.A_x_bar = 2.0;
    asym.B_x_bar = 0.5;
    CHECK(delta_s_bound(asym, 1e-9, pi - 1e-9) < 1e-15);

    // Shrinking the band (w_m -> 2 w_m) increases the bound.
    const double w0   = 2.5;
    double       prev = 0.0;
    for (double wm = 1e-4; wm < 1.0; wm *= 2.0) {
        const double b = delta_s_bound(asym, circle_angle(wm, w0), circle_angle(1e3, w0));
        CHECK(b > prev);
        prev = b;
    }

    auto bad   = asym;
    bad.beta_x = 2.0;  // beta_x - beta_y/2 = 1.1
    CHECK_THROWS_AS(delta_s_bound(bad, 0.1, 3.0), ValidationError);
    bad        = asym;
    bad.alpha_x = 0.0;
    CHECK_THROWS_AS(delta_s_bound(bad, 0.1, 3.0), ValidationError);
}

TEST_CASE("relative filter errors", "[truncation_budget]") {
    const double wm = 1.0, wM = 1e6;
    const auto   r  = relative_filter_errors(n_max(1.0, wm, wM), 1.0, 1e-6, 1.0, 0.0, 1.0, wm, wM);
    CHECK_THAT(r.rel_err_y, WithinRel(4.0 / pi, 1e-12));
    CHECK(r.dominant == "y");
    const auto z = relative_filter_errors(50, 0.0, 1.0, 3.0, 0.0, 1.0, wm, wM);
    CHECK(z.rel_err_y == 0.0);
    CHECK_THROWS_AS(relative_filter_errors(5, 0.1, 1.0, 1.0, 0.1, 0.0, wm, wM), std::invalid_argument);
}

TEST_CASE("strengthened exponents: x error vanishes faster than y error", "[truncation_budget]") {
    auto asym = make_paper_example().asymptotics;
    REQUIRE(asym.strengthened());
    asym.A_x_bar = 1.0;
    asym.B_x_bar = 1.0;
    double prev  = std::numeric_limits<double>::infinity();
    double first = 0.0;
    for (double decades = 4.0; decades <= 7.0; decades += 0.5) {
        const double wm = 1.0, wM = std::pow(10.0, decades);
        const double w0 = choose_scale(wm, wM);
        const double dt = delta_t_bound(1.0, wm, wM, w0);
        const double ds = delta_s_bound(asym, circle_angle(wm, w0), circle_angle(wM, w0));
        const auto   r  = relative_filter_errors(10, dt, 0.1, 10.0, ds, 1.0, wm, wM);
        const double q  = r.rel_err_x / r.rel_err_y;
        CHECK(q < prev);
        prev = q;
        if (first == 0.0) {
            first = q;
        }
    }
    CHECK(prev < 0.1 * first);  // expected ~ (w_m/w_M)^0.45, a factor ~22 over 3 decades
}

TEST_CASE("bounds are monotone in the band", "[truncation_budget][property]") {
    auto asym    = make_paper_example().asymptotics;
    asym.A_x_bar = 1.0;
    asym.B_x_bar = 1.0;
    const double w0 = 2.0;
    BudgetInputs prev_in{0.2, 20.0, w0, 0.01, 3.0, 50.0, 1.0, 20, asym};
    auto         prev = compute_budget(prev_in);
    for (int i = 0; i < 12; ++i) {
        auto in = prev_in;
        in.omega_m /= 1.7;
        in.omega_M *= 1.7;
        const auto b = compute_budget(in);
        CHECK(b.delta_t_bound <= prev.delta_t_bound);
        CHECK(b.delta_s_bound <= prev.delta_s_bound);
        CHECK(b.rel_err_y <= prev.rel_err_y);
        CHECK(b.rel_err_x <= prev.rel_err_x);
        CHECK(b.n_max >= prev.n_max);
        prev    = b;
        prev_in = in;
    }
}

TEST_CASE("measured band truncation scales like sqrt(w_m/w_M) and respects the bound", "[truncation_budget]") {
    const auto ex = make_paper_example();
    const auto p  = transform(ex.S_xy, ex.S_yy, make_scaling(ex.asymptotics, 5.0));
    // Widen symmetrically about w0 = 5 and compare with a 100x wider reference band.
    std::vector<double> normalized;
    for (double r : {10.0, 30.0, 100.0, 300.0, 1000.0}) {
        const double wm = 5.0 / r, wM = 5.0 * r;
        const auto   band = outside_t(p.S_yy_prime, 5.0, wm, wM, 100);
        const auto   ref  = outside_t(p.S_yy_prime, 5.0, wm / 10.0, wM * 10.0, 100);
        double       worst = 0.0;
        for (std::size_t k = 0; k < 100; ++k) {
            worst = std::max(worst, std::abs(band[k] - ref[k]));
        }
        CHECK(worst <= delta_t_bound(p.sup_S_yy, wm, wM, 5.0));
        normalized.push_back(worst / std::sqrt(wm / wM));
    }
    const auto [lo, hi] = std::minmax_element(normalized.begin(), normalized.end());
    CHECK(*hi <= 2.0 * *lo);
}

TEST_CASE("budget is conservative on the paper example", "[truncation_budget]") {
    const auto   ex = make_paper_example();
    const double wm = 2.0 * pi / 1600.0, wM = pi * 512.0;
    const double w0 = choose_scale(wm, wM);
    const auto   p  = transform(ex.S_xy, ex.S_yy, make_scaling(ex.asymptotics, w0));
    const std::size_t n = 32;

    const auto full = compute_coefficients(p.S_xy_prime, p.S_yy_prime, BasisConfig{w0, n, 0});
    const auto dt   = outside_t(p.S_yy_prime, w0, wm, wM, n);
    const auto ds   = outside_s(p.S_xy_prime, w0, wm, wM, n);

    ToeplitzSystem wide{full.t, full.s};
    ToeplitzSystem band = wide;
    for (std::size_t k = 0; k < n; ++k) {
        band.t[k] -= dt[k];
        band.s[k] -= ds[k];
    }
    const auto        h_wide = solve(wide);
    const auto        h_band = solve(band);
    std::vector<cplx> diff(n);
    for (std::size_t k = 0; k < n; ++k) {
        diff[k] = h_band[k] - h_wide[k];
    }
    const double measured = norm2(diff) / norm2(h_wide);

    auto asym                   = ex.asymptotics;
    const auto env              = fit_envelopes(p.S_xy_prime, asym, Band{wm, wM});
    asym.A_x_bar                = env.A_x_bar;
    asym.B_x_bar                = env.B_x_bar;
    const auto cond             = condition_report(wide, p.inf_S_yy, p.sup_S_yy);
    const auto b = compute_budget({wm, wM, w0, p.inf_S_yy, p.sup_S_yy, *cond.measured_kappa(), norm2(full.s), n, asym});
    CHECK(b.delta_t_bound >= 0.0);
    CHECK(b.n_max >= 1);
    CHECK(measured <= b.rel_err_y + b.rel_err_x);
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(std::abs(dt[k]) <= b.delta_t_bound);
    }
}
