#ifndef SFW_ORACLE_HPP
#define SFW_ORACLE_HPP

// Brute-force reference solvers used as ground truth: the non-causal filter, a time-lattice
// Wiener-Hopf solver (discrete normal equations, Richardson-extrapolated in the step), and a
// frequency-lattice spectral factorisation through the discrete Hilbert transform. Correctness
// over speed.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "sfw/basis.hpp"
#include "sfw/detail/fft.hpp"
#include "sfw/detail/parallel.hpp"
#include "sfw/errors.hpp"
#include "sfw/precondition.hpp"
#include "sfw/spectral_model.hpp"
#include "sfw/toeplitz.hpp"

namespace sfw {

/// h_nc(w) = S_xy(w) / S_yy(w).
inline std::vector<cplx> noncausal_filter(const SpectralFunction& S_xy, const SpectralFunction& S_yy,
                                          std::span<const double> omega) {
    std::vector<cplx> h(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) {
        const double syy = S_yy.real(omega[i]);
        if (!(syy > 0.0) || !std::isfinite(syy)) {
            std::ostringstream os;
            os << "S_yy = " << syy << " at w = " << omega[i] << " rad/s; the non-causal filter is undefined";
            throw ValidationError(os.str(), "oracle");
        }
        h[i] = S_xy(omega[i]) / syy;
    }
    return h;
}

// ---------------------------------------------------------------------------------------------
// Time lattice

struct LatticeOptions {
    std::size_t oversample    = 16;  // frequency grid spans oversample x the lattice Nyquist band
    std::size_t period_factor = 8;   // DFT period >= period_factor * L lattice steps
    bool        endpoint_correction = true;  // trapezoid half weight at t = 0 (see solve_lattice)
};

/// Discrete normal equations sum_{m=0}^{L-1} r_yy[k-m] g_m = r_xy[k], k = 0..L-1, for samples at
/// step dt. r_yy[k] = (c / dt) delta_k + R_r(k dt), c = S_yy(inf) the white floor carried exactly,
/// R_r the covariance of S_yy - c; r_xy[k] = R_xy(k dt) = E[x(t + k dt) y(t)].
struct LatticeProblem {
    std::size_t         lag_count = 0;  // L
    double              dt        = 0.0;
    std::vector<double> r_yy;           // lags 0..2L
    std::vector<double> r_xy;           // lags -L..L, index k + L
    double              white_floor = 0.0;
    bool                endpoint_correction = true;
};

namespace detail {

/// (1/pi) \int_W^inf B w^{-p} cos(w tau) dw: exact at tau = 0, two-term asymptotic otherwise.
inline double power_tail(double B, double p, double W, double tau) {
    if (B == 0.0 || !(p > 1.0)) {
        return 0.0;
    }
    if (tau == 0.0) {
        return B * std::pow(W, 1.0 - p) / ((p - 1.0) * std::numbers::pi);
    }
    const double s = -std::pow(W, -p) * std::sin(W * tau) / tau;
    const double c = p * std::pow(W, -p - 1.0) * std::cos(W * tau) / (tau * tau);
    return B * (s + c) / std::numbers::pi;
}

/// (1/pi) \int_W^inf B w^{-q} sin(w tau) dw, the odd (imaginary) tail; two-term asymptotic.
inline double power_tail_odd(double B, double q, double W, double tau) {
    if (B == 0.0 || !(q > 0.0) || tau == 0.0) {
        return 0.0;
    }
    const double c = std::pow(W, -q) * std::cos(W * tau) / tau;
    const double s = q * std::pow(W, -q - 1.0) * std::sin(W * tau) / (tau * tau);
    return B * (c + s) / std::numbers::pi;
}

/// Local power law B w^{-p} through g(W/2) and g(W); zero when g does not decay.
inline std::pair<double, double> fit_tail(double g_half, double g_full, double W) {
    if (!(g_half > 0.0) || !(g_full > 0.0) || !(g_full < g_half)) {
        return {0.0, 0.0};
    }
    const double p = std::log(g_half / g_full) / std::log(2.0);
    return {g_full * std::pow(W, p), p};
}

/// R(j delta) = (1/2pi) \int S(w) e^{-iwt} dw on the grid w_m = m dw, |m| <= M/2, delta = 2 pi / (M dw),
/// for a spectrum with S(-w) = conj(S(w)). The DC sample is S(0) when finite, else the first
/// nonzero bin (spectra divergent at zero are flattened below dw).
inline std::vector<double> covariance_grid(const std::function<cplx(double)>& S, std::size_t M, double dw) {
    const std::size_t bins = M / 2 + 1;
    std::vector<cplx> v(bins);
    parallel_for(bins, [&](std::size_t k) { v[k] = std::conj(S(dw * static_cast<double>(k))); }, 1024);
    if (!std::isfinite(v[0].real()) || !std::isfinite(v[0].imag())) {
        v[0] = std::conj(S(dw));
    }
    v[0]        = {v[0].real(), 0.0};
    v[bins - 1] = {v[bins - 1].real(), 0.0};
    RealFft      fft(M);
    const auto   g     = fft.inverse(v);
    const double scale = dw / (2.0 * std::numbers::pi);
    std::vector<double> out(g.begin(), g.end());
    for (auto& x : out) {
        x *= scale;
    }
    return out;
}

} // namespace detail

inline LatticeProblem lattice_problem(const SpectralFunction& S_xy, const SpectralFunction& S_yy, std::size_t L, double dt,
                                      const LatticeOptions& opts = {}) {
    if (L < 2 || !(dt > 0.0) || opts.oversample < 2 || opts.period_factor < 4) {
        throw std::invalid_argument("lattice needs L >= 2, dt > 0, oversample >= 2, period_factor >= 4");
    }
    const auto c_lim = S_yy.limit_at_infinity();
    const double c   = c_lim && std::isfinite(c_lim->real()) ? c_lim->real() : 0.0;
    if (c < 0.0) {
        throw ValidationError("S_yy has a negative limit at infinity", "oracle");
    }
    const std::size_t P  = sfw::detail::next_power_of_two(opts.period_factor * L);
    const std::size_t os = sfw::detail::next_power_of_two(opts.oversample);
    const std::size_t M  = os * P;
    const double      dw = 2.0 * std::numbers::pi / (static_cast<double>(P) * dt);
    const double      W  = dw * static_cast<double>(M / 2);

    const auto residual = [&](double w) { return cplx{S_yy.real(w) - c, 0.0}; };
    const auto ryy      = detail::covariance_grid(residual, M, dw);
    const auto rxy      = detail::covariance_grid([&](double w) { return S_xy(w); }, M, dw);

    const auto [By, py] = detail::fit_tail(std::abs(residual(W / 2).real()), std::abs(residual(W).real()), W);
    const double sy     = residual(W).real() < 0.0 ? -1.0 : 1.0;
    const auto [Bx, px] = detail::fit_tail(std::abs(S_xy(W / 2).real()), std::abs(S_xy(W).real()), W);
    const double sx     = S_xy(W).real() < 0.0 ? -1.0 : 1.0;
    const auto [Bi, qi] = detail::fit_tail(std::abs(S_xy(W / 2).imag()), std::abs(S_xy(W).imag()), W);
    const double si     = S_xy(W).imag() < 0.0 ? -1.0 : 1.0;

    LatticeProblem lp;
    lp.lag_count   = L;
    lp.dt          = dt;
    lp.white_floor = c;
    lp.endpoint_correction = opts.endpoint_correction;
    lp.r_yy.resize(2 * L + 1);
    lp.r_xy.resize(2 * L + 1);
    for (std::size_t k = 0; k <= 2 * L; ++k) {
        const double tau = static_cast<double>(k) * dt;
        lp.r_yy[k]       = ryy[(k * os) % M] + sy * detail::power_tail(By, py, W, tau);
    }
    lp.r_yy[0] += c / dt;
    for (std::size_t i = 0; i <= 2 * L; ++i) {
        const long   k   = static_cast<long>(i) - static_cast<long>(L);
        const double tau = static_cast<double>(k) * dt;
        const auto   j   = static_cast<std::size_t>((k * static_cast<long>(os) + static_cast<long>(M)) % static_cast<long>(M));
        lp.r_xy[i]       = rxy[j] + sx * detail::power_tail(Bx, px, W, tau) + si * detail::power_tail_odd(Bi, qi, W, tau);
    }
    if (opts.endpoint_correction) {
        // The equations hold for t -> 0+; the grid returns the midpoint of a jump at lag 0.
        const double left = 2.0 * lp.r_xy[L - 1] - lp.r_xy[L - 2];
        lp.r_xy[L]        = 2.0 * lp.r_xy[L] - left;
    }
    return lp;
}

struct LatticeFilter {
    std::vector<double> taps;  // x_hat_k = sum_m taps_m y_{k-m}
    double              dt = 0.0;

    cplx response(double omega) const {
        const cplx step = std::polar(1.0, omega * dt);
        cplx       acc  = 0.0;
        for (std::size_t j = taps.size(); j-- > 0;) {
            acc = acc * step + taps[j];
        }
        return acc;
    }
};

/// Solves the normal equations for the taps g. With the endpoint correction the system is the
/// trapezoid Nystrom discretisation of c H(t) + \int_0^inf R_r(t - s) H(s) ds = R_xy(t), t >= 0,
/// with g_m = dt w_m H(m dt) and w_0 = 1/2: the plain normal equations plus c / dt on the (0, 0)
/// entry, solved by Sherman-Morrison over two Levinson solves. Without it the step error is O(dt)
/// whenever H jumps at t = 0.
inline LatticeFilter solve_lattice(const LatticeProblem& lp) {
    const std::size_t L = lp.lag_count;
    std::span<const double> t(lp.r_yy.data(), L);
    std::span<const double> b(lp.r_xy.data() + L, L);
    try {
        auto g = levinson_solve<double>(t, b);
        const double extra = lp.endpoint_correction ? lp.white_floor / lp.dt : 0.0;
        if (extra > 0.0) {
            std::vector<double> e0(L, 0.0);
            e0[0]         = 1.0;
            const auto u  = levinson_solve<double>(t, std::span<const double>(e0));
            const double f = extra * g[0] / (1.0 + extra * u[0]);
            for (std::size_t i = 0; i < L; ++i) {
                g[i] -= f * u[i];
            }
        }
        return {std::move(g), lp.dt};
    } catch (const NotPositiveDefinite& e) {
        throw NotPositiveDefinite(std::string("lattice covariance is not positive definite: ") + e.what(), "oracle");
    }
}

/// Lattice filter with L = round(memory / dt) lags.
inline LatticeFilter lattice_causal_filter(const SpectralFunction& S_xy, const SpectralFunction& S_yy, std::size_t L,
                                           double dt, const LatticeOptions& opts = {}) {
    return solve_lattice(lattice_problem(S_xy, S_yy, L, dt, opts));
}

/// Three lattice solutions at dt, dt/2, dt/4 over a fixed memory, extrapolated to dt -> 0. With the
/// endpoint correction the step error starts at O(dt^2) and (32 h_3 - 12 h_2 + h_1) / 21 cancels the
/// dt^2 and dt^3 terms; without it (8 h_3 - 6 h_2 + h_1) / 3 cancels the dt and dt^2 terms.
struct RichardsonLattice {
    std::array<LatticeFilter, 3> levels;
    bool                         second_order = true;

    cplx response(double omega) const {
        const cplx h1 = levels[0].response(omega), h2 = levels[1].response(omega), h3 = levels[2].response(omega);
        return second_order ? (32.0 * h3 - 12.0 * h2 + h1) / 21.0 : (8.0 * h3 - 6.0 * h2 + h1) / 3.0;
    }
    FrequencyResponseFn response_fn() const {
        return [self = *this](double w) { return self.response(w); };
    }
};

inline RichardsonLattice richardson_lattice(const SpectralFunction& S_xy, const SpectralFunction& S_yy, double memory,
                                            double dt, const LatticeOptions& opts = {}) {
    const auto        L0 = static_cast<std::size_t>(std::llround(memory / dt));
    RichardsonLattice r;
    r.second_order = opts.endpoint_correction;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t f = std::size_t{1} << i;
        r.levels[i]         = lattice_causal_filter(S_xy, S_yy, L0 * f, dt / static_cast<double>(f), opts);
    }
    return r;
}

// ---------------------------------------------------------------------------------------------
// Frequency lattice

struct FrequencyLatticeResult {
    std::vector<double> omega;
    std::vector<cplx>   h;
};

/// Causal filter by spectral factorisation on a uniform frequency lattice of N points over [-W, W],
/// applied to the preconditioned pair (S_xy', S_yy') for scaling f:
///   psi+ = exp(P+[log S_yy']), psi- = conj(psi+), h' = P+[S_xy' / psi-] / psi+, h = f h',
/// with P+ g = (g + i H g) / 2 the projection onto functions analytic in the upper half plane.
/// log S_yy' is taken relative to its limit at infinity so that the transformed function decays.
/// Points near the lattice ends are unreliable.
inline FrequencyLatticeResult frequency_lattice_filter(const SpectralFunction& S_xy, const SpectralFunction& S_yy,
                                                       const ScalingFunction& scaling, double W, std::size_t N) {
    if (N < 16 || !(W > 0.0)) {
        throw std::invalid_argument("frequency lattice needs N >= 16 and W > 0");
    }
    const auto problem = transform(S_xy, S_yy, scaling);
    FrequencyLatticeResult out;
    out.omega.resize(N);
    const double step = 2.0 * W / static_cast<double>(N - 1);
    for (std::size_t i = 0; i < N; ++i) {
        out.omega[i] = -W + step * static_cast<double>(i);
    }
    const auto   lim   = problem.S_yy_prime.limit_at_infinity();
    const double c_inf = lim && std::abs(*lim) > 0.0 && std::isfinite(lim->real()) ? lim->real()
                                                                                    : problem.S_yy_prime.real(W);
    std::vector<cplx> logS(N), sxy(N);
    detail::parallel_for(N, [&](std::size_t i) {
        const double w = out.omega[i] == 0.0 ? 0.5 * step : out.omega[i];
        logS[i]        = std::log(problem.S_yy_prime.real(w) / c_inf);
        sxy[i]         = problem.S_xy_prime(w);
    }, 1024);
    const auto        Hlog = discrete_hilbert(logS);
    std::vector<cplx> psi_plus(N), g(N);
    const cplx        I{0.0, 1.0};
    for (std::size_t i = 0; i < N; ++i) {
        psi_plus[i] = std::sqrt(c_inf) * std::exp(0.5 * (logS[i] + I * Hlog[i]));
        g[i]        = sxy[i] / std::conj(psi_plus[i]);
    }
    const auto Hg = discrete_hilbert(g);
    out.h.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double w = out.omega[i] == 0.0 ? 0.5 * step : out.omega[i];
        out.h[i]       = eval_f(scaling, w) * 0.5 * (g[i] + I * Hg[i]) / psi_plus[i];
    }
    return out;
}

} // namespace sfw

#endif // SFW_ORACLE_HPP
