#ifndef SFW_VERIFY_HPP
#define SFW_VERIFY_HPP

// Self-checks run on demand (CLI `verify`, acceptance binary): basis orthonormality, Hilbert
// eigenvalues, Toeplitz spectrum and condition bounds, the rational closed form, the lattice
// oracles, convergence, the variance sandwich and finite-band scaling. Each returns a measured
// metric, the pinned tolerance and a pass flag.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sfw/basis.hpp"
#include "sfw/filter_design.hpp"
#include "sfw/oracle.hpp"
#include "sfw/precondition.hpp"
#include "sfw/spectral_model.hpp"
#include "sfw/toeplitz.hpp"
#include "sfw/truncation_budget.hpp"

namespace sfw {

struct CheckResult {
    std::string name;
    bool        passed    = false;
    double      metric    = 0.0;
    double      tolerance = 0.0;
    std::string info;
    double      seconds = 0.0;
};

/// The two reference problems shared by the checks.
struct Benchmark {
    std::string      name;
    SpectralFunction S_xx, S_yy, S_xy;
    Asymptotics      asym;
    DesignOptions    opts;
};

/// Lorentzian line over 5/w^1.8 + 0.01, trusted band [2pi/200, 2pi 128] rad/s, n = 100.
inline Benchmark paper_benchmark() {
    const auto ex = make_paper_example();
    Benchmark  b{"paper example", ex.S_xx, ex.S_yy, ex.S_xy, ex.asymptotics, {}};
    b.opts.band = Band{2.0 * std::numbers::pi / 200.0, 2.0 * std::numbers::pi * 128.0};
    return b;
}

/// S_xx = 2/(w^2+1), unit white noise; no preconditioning, w0 = 10, band [1e-2, 1e4].
inline Benchmark rational_benchmark() {
    Benchmark b;
    b.name              = "rational benchmark";
    b.S_xx              = rational_lowpass(1.0, 1.0);
    b.S_yy              = b.S_xx + constant_spectrum(1.0);
    b.S_xy              = as_cross(b.S_xx);
    b.asym              = Asymptotics{2.0, 0.0, 0.0, 0.0, 1.0, 3.0, 0.0, 0.0};
    b.opts.omega_0      = 10.0;
    b.opts.precondition = false;
    b.opts.band         = Band{1e-2, 1e4};
    return b;
}

/// Closed-form causal Wiener filter of the rational benchmark: 2 / ((sqrt3 + 1)(sqrt3 - i w)).
inline cplx rational_exact_response(double w) {
    const double s3 = std::sqrt(3.0);
    return 2.0 / ((s3 + 1.0) * cplx{s3, -w});
}

namespace detail {

inline double relative_l2(const FrequencyResponseFn& a, const FrequencyResponseFn& b, Band band,
                          std::size_t points = 2000) {
    double num = 0.0, den = 0.0;
    for (double w : log_grid(band.lo, band.hi, points)) {
        num += std::norm(a(w) - b(w)) + std::norm(a(-w) - b(-w));
        den += std::norm(b(w)) + std::norm(b(-w));
    }
    return std::sqrt(num / den);
}

template<typename Fn>
CheckResult timed_check(Fn&& fn) {
    const auto  t0 = std::chrono::steady_clock::now();
    CheckResult r  = fn();
    r.seconds      = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

/// Part of t_k carried by |w| outside [w_m, w_M], by direct quadrature in the circle angle.
inline std::vector<double> outside_toeplitz(const SpectralFunction& S, double omega_0, double omega_m, double omega_M,
                                            std::size_t n) {
    using GK           = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double u_m   = circle_angle(omega_m, omega_0);
    const double u_M   = circle_angle(omega_M, omega_0);
    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto f = [&](double u) {
            return std::cos(static_cast<double>(k) * u) * S.real(omega_0 * std::tan(0.5 * u));
        };
        d[k] = (GK::integrate(f, 0.0, u_m, 10, 1e-10) + GK::integrate(f, u_M, std::numbers::pi, 10, 1e-10)) /
               std::numbers::pi;
    }
    return d;
}

} // namespace detail

/// max_{j,k <= 64} |<phi_j, phi_k> - delta_jk| from the FFT analysis of each phi_k.
inline CheckResult verify_orthonormality() {
    return detail::timed_check([] {
        const BasisConfig cfg{1.7, 65, 1 << 14};
        double            worst = 0.0;
        for (long k = 0; k <= 64; ++k) {
            const SpectralFunction phi(
                SpectrumKind::Cross, [k, &cfg](double w) { return eval_phi(k, w, cfg.omega_0); }, Band{1e-12, 1e12},
                0.0, 1.0);
            const auto s = rhs_coeffs(phi, cfg);
            for (std::size_t j = 0; j < s.values.size(); ++j) {
                worst = std::max(worst, std::abs(s.values[j] - (static_cast<long>(j) == k ? 1.0 : 0.0)));
            }
        }
        return CheckResult{"orthonormality", worst < 1e-10, worst, 1e-10, "max |<phi_j,phi_k> - delta_jk|, j,k <= 64"};
    });
}

/// Discrete Hilbert transform of phi_0 and phi_-1 on |w| <= 10 of a lattice with step 0.02 out to
/// |w| = 4000: -i phi_0 and +i phi_-1.
inline CheckResult verify_hilbert() {
    return detail::timed_check([] {
        const double      W = 4000.0, d = 0.02;
        const std::size_t n   = 2 * static_cast<std::size_t>(W / d) + 1;
        const std::size_t mid = n / 2;
        std::vector<cplx> f0(n), fm(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (static_cast<double>(i) - static_cast<double>(mid)) * d;
            f0[i]          = eval_phi(0, w, 1.0);
            fm[i]          = eval_phi(-1, w, 1.0);
        }
        const auto h0 = discrete_hilbert(f0);
        const auto hm = discrete_hilbert(fm);
        double     e  = 0.0;
        for (std::size_t i = mid - 500; i <= mid + 500; ++i) {
            e = std::max(e, std::abs(h0[i] - cplx{0.0, -1.0} * f0[i]));
            e = std::max(e, std::abs(hm[i] - cplx{0.0, 1.0} * fm[i]));
        }
        return CheckResult{"hilbert-eigen", e < 1e-3, e, 1e-3, "max |H phi_k + i sgn(k) phi_k| on |w| <= 10"};
    });
}

namespace detail {

struct PreparedSystem {
    ToeplitzSystem sys;
    double         inf_S = 0.0;
    double         sup_S = 0.0;
};

inline PreparedSystem prepare_system(const Benchmark& b, std::size_t n) {
    const Band   band   = *b.opts.band;
    const double omega0 = b.opts.omega_0 > 0.0 ? b.opts.omega_0 : choose_scale(band.lo, band.hi);
    const auto   s      = b.opts.precondition ? make_scaling(b.asym, omega0) : ScalingFunction{0.0, 0.0, omega0, 0.0};
    const auto   p      = transform(b.S_xy, b.S_yy, s);
    const auto   c      = compute_coefficients(p.S_xy_prime, p.S_yy_prime, BasisConfig{omega0, n, 0});
    return {{c.t, c.s}, p.inf_S_yy, p.sup_S_yy};
}

} // namespace detail

/// Eigenvalues of T(256) for the preconditioned paper example inside [inf S', sup S'] + 1e-8 sup S';
/// the Cholesky solve must succeed.
inline CheckResult verify_toeplitz_bounds() {
    return detail::timed_check([] {
        const auto ps = detail::prepare_system(paper_benchmark(), 256);
        const auto r  = spectrum_bounds_check(ps.sys, ps.inf_S, ps.sup_S);
        bool       chol = true;
        try {
            (void)solve(ps.sys);
        } catch (const NotPositiveDefinite&) {
            chol = false;
        }
        const double excess = std::max(ps.inf_S - r.eig_min, r.eig_max - ps.sup_S);
        std::string  info = "eig in [" + detail::fmt(r.eig_min) + ", " + detail::fmt(r.eig_max) + "], bounds [" +
                             detail::fmt(ps.inf_S) + ", " + detail::fmt(ps.sup_S) + "]";
        if (!chol) {
            info += "; Cholesky failed";
        }
        return CheckResult{"toeplitz-bounds", r.ok && chol, excess, r.tol, info};
    });
}

/// 1 + v/t_0 <= kappa(T(n)) <= sup S'/inf S' for n in {16, 64, 256} on both benchmarks.
/// Metric: the worst violation (<= 0 passes).
inline CheckResult verify_condition_sandwich() {
    return detail::timed_check([] {
        double      worst = -std::numeric_limits<double>::infinity();
        std::string info;
        for (const auto& b : {paper_benchmark(), rational_benchmark()}) {
            const auto ps = detail::prepare_system(b, 256);
            for (std::size_t n : {16, 64, 256}) {
                const auto   c = condition_report(ps.sys.truncated(n), ps.inf_S, ps.sup_S);
                const double k = *c.measured_kappa();
                worst          = std::max({worst, c.kappa_lower - k, k - c.kappa_upper});
                info += b.name + " n=" + std::to_string(n) + ": " + detail::fmt(c.kappa_lower) + " <= " +
                          detail::fmt(k) + " <= " + detail::fmt(c.kappa_upper) + "; ";
            }
        }
        return CheckResult{"condition-sandwich", worst <= 0.0, worst, 0.0, info};
    });
}

/// design() at n = 100 against the closed form, relative L2 on the trusted band.
inline CheckResult verify_rational_benchmark() {
    return detail::timed_check([] {
        const auto   b   = rational_benchmark();
        const auto   flt = design(b.S_xy, b.S_yy, b.asym, b.opts);
        const double e   = detail::relative_l2(flt.response_fn(), rational_exact_response, *b.opts.band);
        return CheckResult{"rational-benchmark", e < 1e-3, e, 1e-3, "relative L2 vs closed-form factorization, n = 100"};
    });
}

/// design() against the Richardson-extrapolated time-lattice Wiener-Hopf solution (16 s memory,
/// dt = 1/256) and the frequency-lattice solution, relative L2 on the trusted band.
inline CheckResult verify_lattice_oracle() {
    return detail::timed_check([] {
        const auto   b    = paper_benchmark();
        const Band   band = *b.opts.band;
        const auto   flt  = design(b.S_xy, b.S_yy, b.asym, b.opts);
        const auto   R    = richardson_lattice(b.S_xy, b.S_yy, 16.0, 1.0 / 256.0);
        const double dt   = detail::relative_l2(R.response_fn(), flt.response_fn(), band);

        const auto fl = frequency_lattice_filter(b.S_xy, b.S_yy, flt.scaling, 4000.0, std::size_t{1} << 21);
        double     num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < fl.omega.size(); ++i) {
            const double w = std::abs(fl.omega[i]);
            if (w > band.lo && w < band.hi) {
                const cplx h = flt.response(fl.omega[i]);
                num += std::norm(fl.h[i] - h);
                den += std::norm(h);
            }
        }
        const double df = std::sqrt(num / den);
        const double e  = std::max(dt, df);
        return CheckResult{"lattice-oracle", e < 1e-2, e, 1e-2,
                           "time lattice " + detail::fmt(dt) + ", frequency lattice " + detail::fmt(df)};
    });
}

/// ||h(n) - h(2n)|| strictly decreasing for n = 8..128 and V_eps(h(n)) nonincreasing within the
/// quadrature tolerance, on both benchmarks. Metric: worst ratio of consecutive deltas (< 1 passes).
inline CheckResult verify_convergence() {
    return detail::timed_check([] {
        double      worst_ratio = 0.0;
        double      worst_rise  = 0.0;
        double      qtol        = 0.0;
        std::string info;
        for (const auto& b : {paper_benchmark(), rational_benchmark()}) {
            const auto  flt = design(b.S_xy, b.S_yy, b.asym, b.opts, &b.S_xx);
            const auto& d   = flt.diagnostics;
            for (std::size_t i = 0; i + 1 < d.dyadic_deltas.size(); ++i) {
                worst_ratio = std::max(worst_ratio, d.dyadic_deltas[i + 1] / d.dyadic_deltas[i]);
            }
            const double tol = std::max(1e-12, d.quadrature_error) * std::max(1.0, d.monotone_Veps.front());
            qtol             = std::max(qtol, tol);
            for (std::size_t i = 0; i + 1 < d.monotone_Veps.size(); ++i) {
                worst_rise = std::max(worst_rise, d.monotone_Veps[i + 1] - d.monotone_Veps[i] - tol);
            }
            info += b.name + " deltas";
            for (double v : d.dyadic_deltas) {
                info += " " + detail::fmt(v);
            }
            info += "; ";
        }
        info += "max V_eps rise beyond tolerance " + detail::fmt(std::max(worst_rise, 0.0));
        return CheckResult{"convergence", worst_ratio < 1.0 && worst_rise <= 0.0, worst_ratio, 1.0, info};
    });
}

/// Noncausal floor <= V_eps(h(100)) <= Var(x) on the paper example, each with >= 1% slack.
/// Metric: the smaller relative slack.
inline CheckResult verify_variance_sandwich() {
    return detail::timed_check([] {
        const auto   b     = paper_benchmark();
        const auto   flt   = design(b.S_xy, b.S_yy, b.asym, b.opts);
        const Band   wide{1e-6, 1e6};
        const double v     = integrate_error_variance(flt.response_fn(), b.S_xx, b.S_xy, b.S_yy, wide).value;
        const double floor = noncausal_error_variance(b.S_xx, b.S_xy, b.S_yy).value;
        const double var_x = signal_variance(b.S_xx).value;
        const double slack = std::min(v / floor - 1.0, 1.0 - v / var_x);
        return CheckResult{"variance-sandwich", slack >= 0.01, slack, 0.01,
                           detail::fmt(floor) + " <= " + detail::fmt(v) + " <= " + detail::fmt(var_x)};
    });
}

/// max_k |t_k(band) - t_k(100 x band)| over k < 100 for bands [w0/r, w0 r], r = 10 .. 1000 (band
/// ratios 1e2 .. 1e6): the deviation divided by sqrt(w_m/w_M) stays within a factor 2.
inline CheckResult verify_band_scaling() {
    return detail::timed_check([] {
        const auto          b  = paper_benchmark();
        const double        w0 = 5.0;
        const auto          p  = transform(b.S_xy, b.S_yy, make_scaling(b.asym, w0));
        std::vector<double> normalized;
        for (double r : {10.0, 30.0, 100.0, 300.0, 1000.0}) {
            const double wm = w0 / r, wM = w0 * r;
            const auto   in  = detail::outside_toeplitz(p.S_yy_prime, w0, wm, wM, 100);
            const auto   ref = detail::outside_toeplitz(p.S_yy_prime, w0, wm / 10.0, wM * 10.0, 100);
            double       worst = 0.0;
            for (std::size_t k = 0; k < in.size(); ++k) {
                worst = std::max(worst, std::abs(in[k] - ref[k]));
            }
            normalized.push_back(worst / std::sqrt(wm / wM));
        }
        const auto [lo, hi] = std::minmax_element(normalized.begin(), normalized.end());
        const double spread = *hi / *lo;
        std::string  info = "deviation / sqrt(w_m/w_M):";
        for (double v : normalized) {
            info += " " + detail::fmt(v);
        }
        return CheckResult{"band-scaling", spread <= 2.0, spread, 2.0, info};
    });
}

struct VerifySuite {
    std::string                  name;
    std::function<CheckResult()> run;
};

inline std::vector<VerifySuite> verify_suites() {
    return {{"orthonormality", verify_orthonormality},       {"hilbert-eigen", verify_hilbert},
            {"toeplitz-bounds", verify_toeplitz_bounds},     {"condition-sandwich", verify_condition_sandwich},
            {"rational-benchmark", verify_rational_benchmark}, {"lattice-oracle", verify_lattice_oracle},
            {"convergence", verify_convergence},             {"variance-sandwich", verify_variance_sandwich},
            {"band-scaling", verify_band_scaling}};
}

} // namespace sfw

#endif // SFW_VERIFY_HPP
