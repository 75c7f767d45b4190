#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>

#include "sfw/filter_design.hpp"
#include "sfw/simulate.hpp"

using namespace sfw;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

struct Rational {
    SpectralFunction S_xx, S_yy, S_xy;
    Asymptotics      asym;
    Band             band{1e-2, 1e4};
};

// S_xx = 2/(w^2+1), white unit noise; the causal optimum has a closed form.
Rational rational() {
    Rational r;
    r.S_xx = rational_lowpass(1.0, 1.0);
    r.S_yy = r.S_xx + constant_spectrum(1.0);
    r.S_xy = as_cross(r.S_xx);
    r.asym = Asymptotics{2.0, 0.0, 0.0, 0.0, 1.0, 3.0, 0.0, 0.0};
    return r;
}

cplx rational_exact(double w) {
    const double s3 = std::sqrt(3.0);
    return 2.0 / ((s3 + 1.0) * cplx{s3, -w});
}

DesignOptions rational_opts(std::size_t n = 100) {
    DesignOptions o;
    o.omega_0      = 10.0;
    o.n_modes      = n;
    o.precondition = false;
    o.band         = Band{1e-2, 1e4};
    return o;
}

DesignOptions paper_opts(std::size_t n = 100) {
    DesignOptions o;
    o.n_modes = n;
    o.band    = Band{2.0 * pi / 200.0, 2.0 * pi * 128.0};
    return o;
}

double max_rel_dev(const FrequencyResponseFn& a, const FrequencyResponseFn& b, Band band, std::size_t points = 400) {
    double worst = 0.0;
    for (double w : detail::log_grid(band.lo, band.hi, points)) {
        worst = std::max(worst, std::abs(a(w) - b(w)) / std::abs(b(w)));
    }
    return worst;
}

} // namespace

TEST_CASE("white noise with a causal cross spectrum returns the cross spectrum", "[filter_design]") {
    const double a    = 3.0;
    const auto   sxy  = make_cross_spectrum([a](double w) { return a / cplx{a, -w}; }, default_analytic_support, 0.0, 1.0);
    const auto   syy  = constant_spectrum(1.0);
    Asymptotics  asym{1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0};
    DesignOptions o;
    o.omega_0 = a;
    o.band    = Band{1e-3, 1e3};
    const auto flt = design(sxy, syy, asym, o);
    CHECK(flt.scaling.is_identity());
    CHECK(max_rel_dev(flt.response_fn(), [&](double w) { return sxy(w); }, Band{1e-2, 1e2}) < 1e-3);
}

TEST_CASE("rational benchmark matches the closed form", "[filter_design][paper]") {
    const auto r   = rational();
    const auto flt = design(r.S_xy, r.S_yy, r.asym, rational_opts(), &r.S_xx);
    const double dev = max_rel_dev(flt.response_fn(), rational_exact, r.band);
    INFO("max relative deviation " << dev);
    CHECK(dev < 1e-3);
    // Error variance against the closed form.
    const auto v_flt   = integrate_error_variance(flt.response_fn(), r.S_xx, r.S_xy, r.S_yy, r.band);
    const auto v_exact = integrate_error_variance(rational_exact, r.S_xx, r.S_xy, r.S_yy, r.band);
    CHECK_THAT(v_flt.value, WithinRel(v_exact.value, 1e-3));
}

TEST_CASE("filter does not depend on the scaling phase", "[filter_design][property]") {
    const auto ex = make_paper_example();
    auto       o  = paper_opts();
    const auto f0 = design(ex.S_xy, ex.S_yy, ex.asymptotics, o);
    for (double phase : {0.7, -2.1, pi}) {
        o.phase_rad   = phase;
        const auto f1 = design(ex.S_xy, ex.S_yy, ex.asymptotics, o);
        CHECK(max_rel_dev(f1.response_fn(), f0.response_fn(), Band{0.1, 500.0}, 200) < 1e-10);
    }
}

TEST_CASE("filter is insensitive to the basis scale", "[filter_design][property]") {
    const auto r  = rational();
    auto       o  = rational_opts(256);
    const auto f0 = design(r.S_xy, r.S_yy, r.asym, o);
    for (double w0 : {5.0, 20.0}) {
        o.omega_0     = w0;
        const auto f1 = design(r.S_xy, r.S_yy, r.asym, o);
        CHECK(max_rel_dev(f1.response_fn(), f0.response_fn(), Band{0.1, 100.0}, 200) < 1e-3);
    }
}

TEST_CASE("dyadic diagnostics", "[filter_design][property]") {
    const auto ex  = make_paper_example();
    const auto flt = design(ex.S_xy, ex.S_yy, ex.asymptotics, paper_opts(), &ex.S_xx);
    const auto& d  = flt.diagnostics;
    REQUIRE(d.dyadic_n.size() == 6);  // 8 .. 256
    REQUIRE(d.dyadic_deltas.size() == 5);
    for (std::size_t i = 0; i + 1 < d.dyadic_deltas.size(); ++i) {
        CHECK(d.dyadic_deltas[i + 1] < d.dyadic_deltas[i]);
    }
    CHECK(d.rate_fit < 0.0);
    CHECK(d.coeff_tail.size() == 100);
    REQUIRE(d.leading_coeffs.size() == 6);
    CHECK(std::abs(d.leading_coeffs[5][0] - d.leading_coeffs[4][0]) < std::abs(d.leading_coeffs[1][0] - d.leading_coeffs[0][0]));

    // Explained variance grows with n; the error variance sits between the noncausal floor and Var x.
    const double var_x = signal_variance(ex.S_xx).value;
    const double floor = noncausal_error_variance(ex.S_xx, ex.S_xy, ex.S_yy).value;
    for (std::size_t i = 0; i < d.monotone_Veps.size(); ++i) {
        if (i > 0) {
            CHECK(d.explained_variance[i] >= d.explained_variance[i - 1] - 1e-12);
            CHECK(d.monotone_Veps[i] <= d.monotone_Veps[i - 1] + 1e-12);
        }
        CHECK(d.monotone_Veps[i] >= floor * (1.0 - 1e-6));
        CHECK(d.monotone_Veps[i] <= var_x);
    }
}

TEST_CASE("coefficient-space error variance matches the real-line integral", "[filter_design]") {
    const auto ex  = make_paper_example();
    const auto flt = design(ex.S_xy, ex.S_yy, ex.asymptotics, paper_opts(256), &ex.S_xx);
    const auto v   = integrate_error_variance(flt.response_fn(), ex.S_xx, ex.S_xy, ex.S_yy);
    CHECK_THAT(v.value, WithinRel(flt.diagnostics.monotone_Veps.back(), 2e-3));
}

TEST_CASE("filter magnitude stays near the noncausal ratio", "[filter_design][property]") {
    const auto ex  = make_paper_example();
    const auto flt = design(ex.S_xy, ex.S_yy, ex.asymptotics, paper_opts());
    double     sup_ratio = 0.0, sup_h = 0.0;
    for (double w : detail::log_grid(1e-2, 1e4, 600)) {
        sup_ratio = std::max(sup_ratio, std::abs(ex.S_xy(w) / ex.S_yy(w)));
        sup_h     = std::max(sup_h, std::abs(flt.response(w)));
    }
    CHECK(sup_h <= 3.0 * sup_ratio);
}

TEST_CASE("budget and warnings", "[filter_design]") {
    const auto ex  = make_paper_example();
    const auto flt = design(ex.S_xy, ex.S_yy, ex.asymptotics, paper_opts());
    CHECK(flt.budget.n_used == 100);
    CHECK(flt.budget.kappa >= 1.0);
    CHECK(flt.condition.measured_kappa().has_value());
    CHECK(flt.budget.delta_t_bound > 0.0);
    auto o  = paper_opts(4000);
    o.cap_n = true;
    o.diagnostic_modes = 0;
    const auto capped = design(ex.S_xy, ex.S_yy, ex.asymptotics, o);
    CHECK(capped.coeffs.size() <= flt.budget.n_max / 3 + 1);
}

TEST_CASE("invalid inputs fail at the right stage", "[filter_design]") {
    const auto ex = make_paper_example();
    auto       bad = ex.asymptotics;
    bad.alpha_x    = 0.2;  // not square-integrable
    try {
        design(ex.S_xy, ex.S_yy, bad, paper_opts());
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.stage() == "validation");
    }
    auto wrong    = ex.asymptotics;
    wrong.beta_y  = 0.0;  // preconditioning leaves S_yy' unbounded
    wrong.beta_x  = 0.0;
    CHECK_THROWS_AS(design(ex.S_xy, ex.S_yy, wrong, paper_opts()), ValidationError);
}

TEST_CASE("FIR of a one-pole filter", "[filter_design][fir]") {
    const double a  = 5.0;
    const double fs = 256.0;
    const double dt = 1.0 / fs;
    const auto   fir = to_fir([a](double w) { return a / cplx{a, -w}; }, fs);
    CHECK(fir.leakage < 1e-6);
    CHECK(fir.truncated_energy <= 1e-8);
    // Triangle-weighted samples of a e^{-at}.
    const double c = 2.0 * (std::cosh(a * dt) - 1.0) / (a * a * dt);
    const std::size_t body = fir.taps.size() * 9 / 10;
    for (std::size_t j = 1; j < body; j += 7) {
        const double expect = a * std::exp(-a * dt * static_cast<double>(j)) * c;
        CHECK_THAT(fir.taps[j], WithinAbs(expect, 1e-5 * a * dt));
    }
    const double tap0 = (a * dt - 1.0 + std::exp(-a * dt)) / (a * dt);  // \int_0^dt a e^{-as} (1 - s/dt) ds
    CHECK_THAT(fir.taps[0], WithinAbs(tap0, 1e-6));
}

TEST_CASE("FIR of the identity is a delta", "[filter_design][fir]") {
    const auto fir = to_fir([](double) { return cplx{1.0, 0.0}; }, 100.0, 16);
    CHECK_THAT(fir.taps[0], WithinAbs(1.0, 1e-12));
    for (std::size_t j = 1; j < fir.taps.size(); ++j) {
        CHECK_THAT(fir.taps[j], WithinAbs(0.0, 1e-12));
    }
    CHECK(fir.leakage < 1e-20);
}

TEST_CASE("FIR of an anticausal response is rejected", "[filter_design][fir]") {
    CHECK_THROWS_AS(to_fir([](double w) { return 1.0 / cplx{1.0, w}; }, 64.0), LeakageTooHigh);
}

TEST_CASE("FIR of the paper filter", "[filter_design][fir]") {
    const auto ex  = make_paper_example();
    const auto flt = design(ex.S_xy, ex.S_yy, ex.asymptotics, paper_opts());
    const auto fir = to_fir(flt, 256.0);
    INFO("leakage " << fir.leakage << ", taps " << fir.taps.size());
    CHECK(fir.leakage < 1e-3);
    // Discrete response tracks the continuous one well below Nyquist.
    for (double w : {5.0, 20.0 * pi, 150.0}) {
        const double x    = 0.5 * w / 256.0;
        const double sinc = std::sin(x) / x;
        CHECK(std::abs(fir_response(fir, w) - flt.response(w) * sinc * sinc) < 2e-2 * std::abs(flt.response(20.0 * pi)));
    }
}

TEST_CASE("recorded application", "[filter_design][apply]") {
    FirFilter fir{{0.5, 0.25, -0.125}, 0.01, 0.0, 0.0};
    TimeSeries impulse{0.01, std::vector<double>(5000, 0.0)};
    impulse.samples[0]    = 1.0;
    impulse.samples[4000] = 2.0;
    const auto out = apply_recorded(fir, impulse);
    REQUIRE(out.size() == 5000);
    CHECK_THAT(out.samples[0], WithinAbs(0.5, 1e-14));
    CHECK_THAT(out.samples[2], WithinAbs(-0.125, 1e-14));
    CHECK_THAT(out.samples[4001], WithinAbs(0.5, 1e-14));
    CHECK_THAT(out.samples[3999], WithinAbs(0.0, 1e-14));

    FirFilter  delta{{1.0}, 0.01, 0.0, 0.0};
    const auto sim  = synthesize(SimSpec{40.0, 100.0, constant_spectrum(1.0), constant_spectrum(1.0), 2});
    const auto same = apply_recorded(delta, sim.y);
    for (std::size_t i = 0; i < sim.y.size(); i += 101) {
        CHECK_THAT(same.samples[i], WithinAbs(sim.y.samples[i], 1e-12));
    }
    CHECK_THROWS_AS(apply_recorded(FirFilter{{1.0}, 0.02, 0.0, 0.0}, sim.y), ValidationError);
}

TEST_CASE("error PSD trivial cases", "[filter_design][apply]") {
    const auto  sim = synthesize(SimSpec{100.0, 64.0, constant_spectrum(1.0), constant_spectrum(1.0), 4});
    WelchConfig cfg;
    cfg.segment_length = 512;
    const auto zero    = error_psd(sim.x, sim.x, cfg);
    for (const auto& v : zero.values) {
        CHECK(v.real() == 0.0);
    }
    TimeSeries none{sim.x.dt, std::vector<double>(sim.x.size(), 0.0)};
    const auto full = error_psd(sim.x, none, cfg);
    const auto ref  = welch_psd(sim.x, cfg);
    CHECK(full.values == ref.values);
}

TEST_CASE("design from estimated spectra recovers a known causal filter", "[filter_design][apply]") {
    // x = one-pole filter of white y; the estimated cross spectrum carries the causal phase.
    const double a   = 5.0;
    const double fs  = 100.0;
    const auto   fir = to_fir([a](double w) { return a / cplx{a, -w}; }, fs);
    const auto   sim = synthesize(SimSpec{2000.0, fs, constant_spectrum(0.0), constant_spectrum(1.0), 8});
    const auto   x   = apply_recorded(fir, sim.y);
    WelchConfig  wc;
    wc.segment_length = 2048;
    Asymptotics asym{1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0};
    DesignOptions o;
    o.omega_0 = 10.0;
    const auto flt = design_from_estimates(welch_csd(x, sim.y, wc), welch_psd(sim.y, wc), asym, o);
    double num = 0.0, den = 0.0;
    for (double w : detail::log_grid(0.5, 150.0, 200)) {
        num += std::norm(flt.response(w) - fir_response(fir, w));
        den += std::norm(fir_response(fir, w));
    }
    INFO("relative L2 " << std::sqrt(num / den));
    CHECK(std::sqrt(num / den) < 0.05);
}

TEST_CASE("streaming", "[filter_design][stream]") {
    const auto ex = make_paper_example();
    const auto sim = synthesize(SimSpec{120.0, 256.0, ex.S_xx, ex.S_nn, 31});

    StreamingConfig cfg;
    cfg.asym       = ex.asymptotics;
    cfg.S_xy_model = ex.S_xy;
    cfg.design.n_modes = 64;

    SECTION("cold start and causality") {
        StreamingFilter sf(sim.y.dt, cfg);
        const auto      first = sf.process(std::span<const double>(sim.y.samples).subspan(0, cfg.block));
        CHECK(std::all_of(first.begin(), first.end(), [](double v) { return v == 0.0; }));
        CHECK(sf.redesigns() == 1);
        CHECK(sf.fir().has_value());

        // Perturbing the input after sample k leaves outputs up to k unchanged, bit for bit.
        const std::size_t n = 10 * cfg.block;
        const std::size_t k = 6 * cfg.block + 100;
        TimeSeries        a{sim.y.dt, {sim.y.samples.begin(), sim.y.samples.begin() + n}};
        TimeSeries        b = a;
        for (std::size_t i = k + 1; i < n; ++i) {
            b.samples[i] += 1.0;
        }
        const auto oa = apply_streaming(a, cfg);
        const auto ob = apply_streaming(b, cfg);
        for (std::size_t i = 0; i <= k; ++i) {
            REQUIRE(oa.samples[i] == ob.samples[i]);
        }
        CHECK(oa.samples[n - 1] != ob.samples[n - 1]);
    }

    SECTION("async redesign is deterministic") {
        auto acfg  = cfg;
        acfg.async = true;
        TimeSeries part{sim.y.dt, {sim.y.samples.begin(), sim.y.samples.begin() + 12 * cfg.block}};
        const auto o1 = apply_streaming(part, acfg);
        const auto o2 = apply_streaming(part, acfg);
        CHECK(o1.samples == o2.samples);
    }

    SECTION("response converges to the recorded design") {
        // 100 blocks of a long stationary record; S_xy estimated from the reference x stream. The
        // recorded design uses long-run Welch estimates at the same resolution.
        const auto long_sim = synthesize(SimSpec{100.0 * cfg.block / 256.0, 256.0, ex.S_xx, ex.S_nn, 32});
        // Averaging memory of 50 blocks (smoothing 0.98), within the 100-block run; at 0.9 the
        // ~19-block memory leaves ~10% estimator noise in the response.
        auto scfg = cfg;
        scfg.S_xy_model.reset();
        scfg.smoothing      = 0.98;
        scfg.design.n_modes = 100;
        StreamingFilter sf(long_sim.y.dt, scfg);
        for (std::size_t b = 0; b + cfg.block <= long_sim.y.size(); b += cfg.block) {
            sf.process(std::span<const double>(long_sim.y.samples).subspan(b, cfg.block),
                       std::span<const double>(long_sim.x.samples).subspan(b, cfg.block));
        }
        REQUIRE(sf.filter().has_value());
        CHECK(sf.failed_redesigns() == 0);
        WelchConfig wc;
        wc.segment_length   = cfg.block;
        wc.overlap_fraction = 0.5;
        DesignOptions o;
        const auto ref = design_from_estimates(welch_csd(long_sim.x, long_sim.y, wc), welch_psd(long_sim.y, wc),
                                               ex.asymptotics, o);
        double num = 0.0, den = 0.0;
        for (double w : detail::log_grid(1.0, 700.0, 400)) {
            num += std::norm(sf.filter()->response(w) - ref.response(w));
            den += std::norm(ref.response(w));
        }
        INFO("relative L2 " << std::sqrt(num / den));
        CHECK(std::sqrt(num / den) < 0.05);
    }
}
