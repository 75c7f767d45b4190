#ifndef SFW_FILTER_DESIGN_HPP
#define SFW_FILTER_DESIGN_HPP

// End-to-end causal Wiener design: validate -> precondition -> eigenbasis coefficients -> Toeplitz
// solve -> diagnostics and budget -> reconstruction, plus time-domain realisation (FIR), recorded
// and streaming application, and residual spectra.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <future>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sfw/basis.hpp"
#include "sfw/detail/fft.hpp"
#include "sfw/detail/numeric.hpp"
#include "sfw/detail/parallel.hpp"
#include "sfw/errors.hpp"
#include "sfw/estimation.hpp"
#include "sfw/precondition.hpp"
#include "sfw/spectral_model.hpp"
#include "sfw/toeplitz.hpp"
#include "sfw/truncation_budget.hpp"

namespace sfw {

struct DesignOptions {
    double              omega_0          = 0.0;  // 0: geometric mean of the trusted band
    std::size_t         n_modes          = 100;
    std::size_t         quad_points      = 0;    // 0: automatic
    bool                precondition     = true;
    double              phase_rad        = 0.0;
    std::optional<Band> band;                    // trusted band; default: common support of the data
    bool                cap_n            = false;  // limit n to n_max / 3
    double              lead_time        = 0.0;  // predict x(t + lead_time)
    ToeplitzSolver      solver           = ToeplitzSolver::Cholesky;
    std::size_t         diagnostic_modes = 256;  // largest n in the dyadic sequence; 0 disables it
};

struct ConvergenceReport {
    std::vector<std::size_t>       dyadic_n;            // n = 8, 16, ...
    std::vector<double>            dyadic_deltas;       // ||h(n) - h(2n)||, one fewer than dyadic_n
    double                         rate_fit        = 0.0;  // slope of log delta against log n
    double                         rate_fit_stderr = 0.0;
    std::vector<double>            explained_variance;  // Re(s^H h(n)) / 2pi, nondecreasing in n
    std::vector<double>            monotone_Veps;       // Var(x) - explained, when S_xx is given
    std::vector<std::vector<cplx>> leading_coeffs;      // h_0..h_7 of each h(n)
    std::vector<double>            coeff_tail;          // |h_k| of the returned filter
    double                         quadrature_error = 0.0;
    bool                           under_resolved   = false;
};

struct FirFilter {
    std::vector<double> taps;
    double              dt               = 1.0;
    double              leakage          = 0.0;  // negative-time energy fraction before truncation
    double              truncated_energy = 0.0;  // causal energy beyond the last tap
};

struct WienerFilter {
    std::vector<cplx>        coeffs;
    ScalingFunction          scaling;
    BasisConfig              basis_cfg;
    std::optional<FirFilter> fir;
    ConvergenceReport        diagnostics;
    ErrorBudget              budget;
    ConditionReport          condition;
    double                   inf_S_yy = 0.0;
    double                   sup_S_yy = 0.0;
    double                   lead_time = 0.0;
    std::vector<std::string> warnings;

    /// h(w) = f(w) sum_k h_k phi_k(w).
    cplx response(double omega) const {
        return eval_f(scaling, omega) * synthesize_at(coeffs, basis_cfg.omega_0, omega);
    }
    FrequencyResponseFn response_fn() const {
        return [self = *this](double w) { return self.response(w); };
    }
};

namespace detail {

inline SpectralFunction apply_lead_time(const SpectralFunction& S_xy, double tau) {
    if (tau == 0.0) {
        return S_xy;
    }
    return make_cross_spectrum([S_xy, tau](double w) { return std::polar(1.0, -w * tau) * S_xy(w); }, S_xy.support(),
                               S_xy.exponent_at_zero(), S_xy.exponent_at_infinity());
}

inline double coeff_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    const std::size_t n = std::max(a.size(), b.size());
    double            s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const cplx x = k < a.size() ? a[k] : cplx{};
        const cplx y = k < b.size() ? b[k] : cplx{};
        s += std::norm(x - y);
    }
    return std::sqrt(s);
}

inline double explained(const std::vector<cplx>& s, const std::vector<cplx>& h) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        acc += std::conj(s[k]) * h[k];
    }
    return acc.real() / (2.0 * std::numbers::pi);
}

} // namespace detail

/// Runs the five design steps. Errors carry the failing stage: "validation", "precondition",
/// "basis", "toeplitz".
inline WienerFilter design(const SpectralFunction& S_xy_in, const SpectralFunction& S_yy, const Asymptotics& asym,
                           const DesignOptions& opts = {}, const SpectralFunction* S_xx = nullptr) {
    const auto report = validate_data(S_xy_in, S_yy, asym, S_xx);
    if (!report.ok()) {
        throw ValidationError(report.failures(), "validation");
    }
    if (opts.n_modes < 1) {
        throw ValidationError("n_modes must be at least 1", "validation");
    }
    WienerFilter flt;
    flt.lead_time       = opts.lead_time;
    const auto S_xy     = detail::apply_lead_time(S_xy_in, opts.lead_time);
    const Band support  = {std::max(S_xy.support().lo, S_yy.support().lo), std::min(S_xy.support().hi, S_yy.support().hi)};
    const Band band     = opts.band.value_or(support);
    const double omega0 = opts.omega_0 > 0.0 ? opts.omega_0 : choose_scale(band.lo, band.hi);
    if (!scale_well_separated(band.lo, band.hi, omega0)) {
        std::ostringstream os;
        os << "omega_0 = " << omega0 << " is not well inside the band [" << band.lo << ", " << band.hi
           << "]; the finite-band bound is loose";
        flt.warnings.push_back(os.str());
    }

    flt.scaling = opts.precondition ? make_scaling(asym, omega0, opts.phase_rad)
                                    : ScalingFunction{0.0, 0.0, omega0, opts.phase_rad};
    const auto problem = transform(S_xy, S_yy, flt.scaling);
    flt.inf_S_yy       = problem.inf_S_yy;
    flt.sup_S_yy       = problem.sup_S_yy;

    // Budget first: it may cap n.
    auto budget_asym = asym;
    {
        const auto env       = fit_envelopes(problem.S_xy_prime, asym, band);
        budget_asym.A_x_bar  = env.A_x_bar;
        budget_asym.B_x_bar  = env.B_x_bar;
    }
    std::size_t n = opts.n_modes;

    const std::size_t n_coef = std::max(n, opts.diagnostic_modes);
    BasisConfig       coef_cfg{omega0, n_coef, opts.quad_points};
    if (coef_cfg.quad_points != 0 && coef_cfg.quad_points < 8 * n_coef) {
        coef_cfg.quad_points = detail::next_power_of_two(8 * n_coef);
    }
    const auto s_coeffs = rhs_coeffs(problem.S_xy_prime, coef_cfg);
    const auto t_coeffs = toeplitz_coeffs(problem.S_yy_prime, coef_cfg);
    const ToeplitzSystem full{t_coeffs.values, s_coeffs.values};

    {
        const auto   probe = condition_report(full.truncated(n), flt.inf_S_yy, flt.sup_S_yy);
        const double kappa = probe.measured_kappa().value_or(probe.kappa_upper);
        const auto   nmax  = n_max(std::max(1.0, kappa), band.lo, band.hi);
        if (opts.cap_n) {
            n = std::min(n, std::max<std::size_t>(1, nmax / 3));
        } else if (n > nmax) {
            std::ostringstream os;
            os << "n = " << n << " exceeds n_max = " << nmax << " for the trusted band; the finite-band error bound exceeds 1";
            flt.warnings.push_back(os.str());
        }
    }

    const SolveOptions solve_opts{opts.solver, false};
    const auto         sys = full.truncated(n);
    flt.coeffs             = solve(sys, solve_opts);
    flt.basis_cfg          = BasisConfig{omega0, n, opts.quad_points};
    flt.condition          = condition_report(sys, flt.inf_S_yy, flt.sup_S_yy);

    // Diagnostics over the dyadic sequence of truncations.
    auto& d            = flt.diagnostics;
    d.quadrature_error = std::max(s_coeffs.quadrature_error, t_coeffs.quadrature_error);
    d.under_resolved   = s_coeffs.under_resolved;
    if (d.under_resolved) {
        flt.warnings.push_back("right-hand side coefficients are not yet decaying at the largest mode; increase n");
    }
    const double var_x = S_xx ? signal_variance(*S_xx).value : 0.0;
    std::vector<std::vector<cplx>> sols;
    for (std::size_t m = 8; m <= opts.diagnostic_modes; m *= 2) {
        sols.push_back(solve(full.truncated(m), solve_opts));
        d.dyadic_n.push_back(m);
        d.explained_variance.push_back(detail::explained(full.s, sols.back()));
        if (S_xx) {
            d.monotone_Veps.push_back(var_x - d.explained_variance.back());
        }
        d.leading_coeffs.emplace_back(sols.back().begin(), sols.back().begin() + 8);
    }
    for (std::size_t i = 0; i + 1 < sols.size(); ++i) {
        d.dyadic_deltas.push_back(detail::coeff_distance(sols[i], sols[i + 1]));
    }
    if (d.dyadic_deltas.size() >= 2) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < d.dyadic_deltas.size(); ++i) {
            if (d.dyadic_deltas[i] > 0.0) {
                x.push_back(std::log(static_cast<double>(d.dyadic_n[i])));
                y.push_back(std::log(d.dyadic_deltas[i]));
            }
        }
        if (x.size() >= 2) {
            const auto line   = detail::fit_line(x, y);
            d.rate_fit        = line.slope;
            d.rate_fit_stderr = line.slope_stderr;
        }
    }
    for (const auto& c : flt.coeffs) {
        d.coeff_tail.push_back(std::abs(c));
    }

    const double kappa = flt.condition.measured_kappa().value_or(flt.condition.kappa_upper);
    flt.budget         = compute_budget({band.lo, band.hi, omega0, flt.inf_S_yy, flt.sup_S_yy, kappa,
                                         std::max(norm2(sys.s), 1e-300), n, budget_asym});
    return flt;
}

/// Design from estimated spectra: non-positive auto-spectrum bins are floored, both tables are
/// averaged in `log_bins` logarithmic bins (0 disables), extended beyond their range with the
/// declared exponents, and the trusted band defaults to the table range.
inline WienerFilter design_from_estimates(TabulatedSpectrum S_xy, TabulatedSpectrum S_yy, const Asymptotics& asym,
                                          DesignOptions opts = {}, std::size_t log_bins = 250) {
    if (S_yy.kind != SpectrumKind::Auto) {
        throw ValidationError("S_yy table must be an auto-spectrum", "validation");
    }
    floor_nonpositive(S_yy);
    if (!opts.band) {
        opts.band = Band{std::max(S_xy.omega.front(), S_yy.omega.front()), std::min(S_xy.omega.back(), S_yy.omega.back())};
    }
    S_xy = log_bin_spectrum(S_xy, log_bins);
    S_yy = log_bin_spectrum(S_yy, log_bins);
    const auto syy = make_spectral_function(S_yy, asym.beta_y, asym.alpha_y);
    const auto sxy = make_spectral_function(S_xy, asym.beta_x, asym.alpha_x);
    return design(sxy, syy, asym, opts);
}

// ---------------------------------------------------------------------------------------------
// Frequency response

struct FrequencyResponse {
    std::vector<double> omega;
    std::vector<cplx>   h;
    std::vector<double> mag2;
    std::vector<double> phase;
};

inline FrequencyResponse frequency_response(const WienerFilter& flt, std::span<const double> omega) {
    FrequencyResponse r;
    r.omega.assign(omega.begin(), omega.end());
    r.h.resize(omega.size());
    detail::parallel_for(omega.size(), [&](std::size_t i) { r.h[i] = flt.response(omega[i]); }, 256);
    for (const auto& v : r.h) {
        r.mag2.push_back(std::norm(v));
        r.phase.push_back(std::arg(v));
    }
    return r;
}

// ---------------------------------------------------------------------------------------------
// FIR realisation

struct FirOptions {
    std::size_t grid_points    = std::size_t{1} << 20;  // DFT grid over +-pi * sample_rate * oversample
    std::size_t oversample     = 16;
    double      taper_fraction = 0.1;                   // Tukey taper over the last 10% of taps
    double      max_leakage    = 1e-2;
    double      tail_energy    = 1e-8;                  // automatic length: causal energy left out
};

/// Causal taps h_j = \int H(t) L((t - j dt)/dt) dt, L the unit triangle, i.e. the filter applied to the
/// piecewise-linear interpolant of the samples. In frequency, H is weighted by dt sinc^2(w dt / 2)
/// and inverted on an oversampled DFT grid; the constant h(inf), if any, is added as an exact delta.
/// Energy the grid assigns to t < 0 is reported as leakage and discarded.
inline FirFilter to_fir(const FrequencyResponseFn& h, double sample_rate, std::size_t n_taps = 0,
                        const FirOptions& opts = {}) {
    if (!(sample_rate > 0.0)) {
        throw ValidationError("FIR sample rate must be positive", "fir");
    }
    if (!detail::is_power_of_two(opts.grid_points) || opts.oversample < 1 ||
        opts.grid_points < 4 * opts.oversample) {
        throw std::invalid_argument("FIR grid must be a power of two, >= 4 * oversample");
    }
    const std::size_t M      = opts.grid_points;
    const std::size_t os     = opts.oversample;
    const double      dt     = 1.0 / sample_rate;
    const double      Omega  = std::numbers::pi * sample_rate * static_cast<double>(os);
    const double      dw     = 2.0 * Omega / static_cast<double>(M);
    const std::size_t bins   = M / 2 + 1;
    const std::size_t j_max  = M / (2 * os);  // coarse taps per half period

    const double h_inf = h(1e4 * Omega).real();
    std::vector<cplx> v(bins);
    detail::parallel_for(bins, [&](std::size_t k) {
        const double w    = dw * static_cast<double>(k);
        const double x    = 0.5 * w * dt;
        const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
        // conj for the e^{-iwt} inversion through a c2r (e^{+i}) transform of a real result
        v[k] = std::conj((h(w) - h_inf) * dt * sinc * sinc);
    }, 1024);
    v[0]        = {v[0].real(), 0.0};
    v[bins - 1] = {v[bins - 1].real(), 0.0};
    if (!std::all_of(v.begin(), v.end(), [](const cplx& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); })) {
        throw NumericalError("frequency response is not finite on the FIR grid", "fir");
    }

    detail::RealFft fft(M);
    const auto      g     = fft.inverse(v);
    const double    scale = dw / (2.0 * std::numbers::pi);

    std::vector<double> pos(j_max);
    double              e_pos = 0.0, e_neg = 0.0;
    for (std::size_t j = 0; j < j_max; ++j) {
        pos[j] = scale * g[j * os] + (j == 0 ? h_inf : 0.0);
        e_pos += pos[j] * pos[j];
    }
    for (std::size_t j = 1; j < j_max; ++j) {
        const double t = scale * g[M - j * os];
        e_neg += t * t;
    }
    FirFilter fir;
    fir.dt      = dt;
    fir.leakage = e_pos + e_neg > 0.0 ? e_neg / (e_pos + e_neg) : 0.0;
    if (fir.leakage > opts.max_leakage) {
        std::ostringstream os_;
        os_ << "negative-time energy fraction " << fir.leakage << " exceeds " << opts.max_leakage
            << " (insufficient preconditioning or grid)";
        throw LeakageTooHigh(os_.str(), "fir");
    }

    if (n_taps == 0) {
        double tail = 0.0;
        n_taps      = j_max;
        for (std::size_t j = j_max; j-- > 1;) {
            tail += pos[j] * pos[j];
            if (tail > opts.tail_energy * e_pos) {
                n_taps = j + 1;
                break;
            }
        }
        n_taps = std::max<std::size_t>(n_taps, 1);
    }
    if (n_taps > j_max) {
        std::ostringstream os_;
        os_ << "n_taps = " << n_taps << " exceeds the grid's half period of " << j_max << " taps";
        throw std::invalid_argument(os_.str());
    }
    double dropped = 0.0;
    for (std::size_t j = n_taps; j < j_max; ++j) {
        dropped += pos[j] * pos[j];
    }
    fir.truncated_energy = e_pos > 0.0 ? dropped / e_pos : 0.0;
    fir.taps.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_taps));
    const auto m = static_cast<std::size_t>(std::floor(opts.taper_fraction * static_cast<double>(n_taps)));
    for (std::size_t i = 0; i < m; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        fir.taps[n_taps - m + i] *= 0.5 * (1.0 + std::cos(std::numbers::pi * x));
    }
    return fir;
}

inline FirFilter to_fir(const WienerFilter& flt, double sample_rate, std::size_t n_taps = 0,
                        const FirOptions& opts = {}) {
    return to_fir(flt.response_fn(), sample_rate, n_taps, opts);
}

/// Discrete-time response sum_j taps_j e^{+i w j dt}.
inline cplx fir_response(const FirFilter& fir, double omega) {
    const cplx step = std::polar(1.0, omega * fir.dt);
    cplx       acc  = 0.0;
    for (std::size_t j = fir.taps.size(); j-- > 0;) {
        acc = acc * step + fir.taps[j];
    }
    return acc;
}

// ---------------------------------------------------------------------------------------------
// Application

inline void check_rate(const FirFilter& fir, double dt) {
    if (std::abs(fir.dt - dt) > 1e-9 * fir.dt) {
        std::ostringstream os;
        os << "sample period " << dt << " s does not match the filter's " << fir.dt << " s";
        throw ValidationError(os.str(), "apply");
    }
}

/// x_hat_k = sum_j taps_j y_{k-j} (zero before the record): direct sums for short filters, FFT
/// overlap-add otherwise.
inline TimeSeries apply_recorded(const FirFilter& fir, const TimeSeries& y) {
    y.validate();
    check_rate(fir, y.dt);
    const std::size_t n = y.size();
    const std::size_t J = fir.taps.size();
    TimeSeries        out{y.dt, std::vector<double>(n, 0.0)};
    if (n == 0 || J == 0) {
        return out;
    }
    if (J <= 64) {
        for (std::size_t k = 0; k < n; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < J && j <= k; ++j) {
                acc += fir.taps[j] * y.samples[k - j];
            }
            out.samples[k] = acc;
        }
        return out;
    }
    const std::size_t size  = detail::next_power_of_two(std::max<std::size_t>(2 * J, 1024));
    const std::size_t block = size - J + 1;
    detail::RealFft   fft(size);
    const auto        th = fft.forward(fir.taps);
    std::vector<cplx> taps_hat(th.begin(), th.end());
    std::vector<cplx> prod(taps_hat.size());
    for (std::size_t start = 0; start < n; start += block) {
        const std::size_t len = std::min(block, n - start);
        const auto        yb  = fft.forward(std::span<const double>(y.samples).subspan(start, len));
        for (std::size_t k = 0; k < prod.size(); ++k) {
            prod[k] = yb[k] * taps_hat[k];
        }
        const auto conv = fft.inverse(prod);
        for (std::size_t i = 0; i < len + J - 1 && start + i < n; ++i) {
            out.samples[start + i] += conv[i] / static_cast<double>(size);
        }
    }
    return out;
}

/// Welch PSD of the residual x - x_hat.
inline TabulatedSpectrum error_psd(const TimeSeries& x, const TimeSeries& x_hat, const WelchConfig& cfg) {
    if (x.size() != x_hat.size() || x.dt != x_hat.dt) {
        throw ValidationError("error PSD needs records of equal length and sample period", "apply");
    }
    TimeSeries r{x.dt, std::vector<double>(x.size())};
    for (std::size_t i = 0; i < r.size(); ++i) {
        r.samples[i] = x.samples[i] - x_hat.samples[i];
    }
    return welch_psd(r, cfg);
}

// ---------------------------------------------------------------------------------------------
// Streaming

struct StreamingConfig {
    std::size_t                     block          = 2048;
    double                          smoothing      = 0.9;  // P <- s P + (1 - s) P_block
    std::size_t                     redesign_every = 8;
    bool                            async          = false;  // redesign overlaps the next block
    Asymptotics                     asym;
    DesignOptions                   design;
    FirOptions                      fir{std::size_t{1} << 18, 16, 0.1, 1e-2, 1e-8};
    std::size_t                     n_taps   = 0;
    std::size_t                     log_bins = 250;  // smoothing of the running estimates before design
    std::optional<SpectralFunction> S_xy_model;  // otherwise estimated from the reference x stream
};

/// Real-time scenario: running PSD estimates from past blocks, periodic redesign, FIR state carried
/// across blocks. Output sample k depends only on inputs <= k; the filter changes only at block
/// boundaries. Until the first successful design the output is zero.
class StreamingFilter {
public:
    StreamingFilter(double dt, StreamingConfig cfg) : dt_(dt), cfg_(std::move(cfg)) {
        if (!(dt > 0.0)) {
            throw ValidationError("stream sample period must be positive", "stream");
        }
        if (cfg_.block < 16 || cfg_.redesign_every < 1 || !(cfg_.smoothing >= 0.0 && cfg_.smoothing < 1.0)) {
            throw ValidationError("stream needs block >= 16, redesign_every >= 1, smoothing in [0, 1)", "stream");
        }
        window_ = hann_window(cfg_.block);
        log_.push_back("cold start: output is zero until the first design");
    }

    StreamingFilter(const StreamingFilter&)            = delete;
    StreamingFilter& operator=(const StreamingFilter&) = delete;
    ~StreamingFilter() {
        if (pending_.valid()) {
            pending_.wait();
        }
    }

    /// Filters one block of y. `x_ref` (same length) feeds the cross-spectrum estimate when no
    /// S_xy model is configured. Blocks shorter than cfg.block are filtered but not used for PSDs.
    std::vector<double> process(std::span<const double> y, std::span<const double> x_ref = {}) {
        if (!x_ref.empty() && x_ref.size() != y.size()) {
            throw ValidationError("reference block length differs from the data block", "stream");
        }
        std::vector<double> out(y.size(), 0.0);
        const auto&         taps = fir_ ? fir_->taps : empty_;
        for (std::size_t i = 0; i < y.size(); ++i) {
            history_.push_back(y[i]);
            const std::size_t avail = history_.size();
            const std::size_t J     = std::min(taps.size(), avail);
            double            acc   = 0.0;
            for (std::size_t j = 0; j < J; ++j) {
                acc += taps[j] * history_[avail - 1 - j];
            }
            out[i] = acc;
        }
        trim_history();

        if (pending_.valid()) {
            swap_in(pending_.get());
        }
        if (y.size() == cfg_.block) {
            update_psd(y, x_ref);
            ++blocks_;
            if (!fir_ || blocks_ % cfg_.redesign_every == 0) {
                if (cfg_.async) {
                    pending_ = std::async(std::launch::async, [this, snap = snapshot()] { return redesign(snap); });
                } else {
                    swap_in(redesign(snapshot()));
                }
            }
        }
        return out;
    }

    const std::optional<FirFilter>&    fir() const noexcept { return fir_; }
    const std::optional<WienerFilter>& filter() const noexcept { return filter_; }
    const std::vector<std::string>&    log() const noexcept { return log_; }
    std::size_t                        redesigns() const noexcept { return redesigns_; }
    std::size_t                        failed_redesigns() const noexcept { return failed_; }

private:
    struct Snapshot {
        std::vector<double> omega;
        std::vector<double> p_yy;
        std::vector<cplx>   p_xy;
        std::size_t         block_index = 0;
    };
    struct Outcome {
        std::optional<WienerFilter> filter;
        std::optional<FirFilter>    fir;
        std::string                 message;
    };

    void update_psd(std::span<const double> y, std::span<const double> x) {
        WelchConfig cfg;
        cfg.segment_length   = cfg_.block;
        cfg.overlap_fraction = 0.0;
        const auto yy        = detail::welch_table(detail::welch_accumulate(y, y, cfg, window_, 1), dt_, cfg, window_, 1,
                                                   SpectrumKind::Auto);
        std::optional<TabulatedSpectrum> xy;
        if (!cfg_.S_xy_model) {
            if (x.empty()) {
                throw ValidationError("streaming needs an S_xy model or a reference x stream", "stream");
            }
            xy = detail::welch_table(detail::welch_accumulate(x, y, cfg, window_, 1), dt_, cfg, window_, 1,
                                     SpectrumKind::Cross);
        }
        // Bias-corrected exponential average: raw sums start at zero, snapshots divide by 1 - a^k.
        const double a = cfg_.smoothing;
        weight_        = a * weight_ + (1.0 - a);
        if (p_yy_.empty()) {
            omega_ = yy.omega;
            p_yy_.assign(yy.values.size(), 0.0);
            p_xy_.assign(yy.values.size(), 0.0);
        }
        for (std::size_t k = 0; k < p_yy_.size(); ++k) {
            p_yy_[k] = a * p_yy_[k] + (1.0 - a) * yy.values[k].real();
            if (xy) {
                p_xy_[k] = a * p_xy_[k] + (1.0 - a) * xy->values[k];
            }
        }
    }

    Snapshot snapshot() const {
        Snapshot snap{omega_, p_yy_, p_xy_, blocks_};
        for (auto& v : snap.p_yy) {
            v /= weight_;
        }
        for (auto& v : snap.p_xy) {
            v /= weight_;
        }
        return snap;
    }

    Outcome redesign(const Snapshot& snap) const {
        Outcome out;
        try {
            TabulatedSpectrum syy{SpectrumKind::Auto, snap.omega, {}};
            for (double v : snap.p_yy) {
                syy.values.emplace_back(v, 0.0);
            }
            auto opts             = cfg_.design;
            opts.diagnostic_modes = 0;
            WienerFilter flt;
            if (cfg_.S_xy_model) {
                floor_nonpositive(syy);
                const auto& a = cfg_.asym;
                if (!opts.band) {
                    opts.band = Band{snap.omega.front(), snap.omega.back()};
                }
                syy = log_bin_spectrum(syy, cfg_.log_bins);
                flt = design(*cfg_.S_xy_model, make_spectral_function(syy, a.beta_y, a.alpha_y), a, opts);
            } else {
                flt = design_from_estimates(TabulatedSpectrum{SpectrumKind::Cross, snap.omega, snap.p_xy}, syy,
                                            cfg_.asym, opts, cfg_.log_bins);
            }
            out.fir               = to_fir(flt, 1.0 / dt_, cfg_.n_taps, cfg_.fir);
            out.filter            = std::move(flt);
            std::ostringstream os;
            os << "redesign after block " << snap.block_index << ": " << out.fir->taps.size() << " taps, leakage "
               << out.fir->leakage;
            out.message = os.str();
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "redesign after block " << snap.block_index << " failed, keeping the previous filter: " << e.what();
            out.message = os.str();
        }
        return out;
    }

    void swap_in(Outcome o) {
        log_.push_back(std::move(o.message));
        if (o.fir) {
            fir_    = std::move(o.fir);
            filter_ = std::move(o.filter);
            ++redesigns_;
        } else {
            ++failed_;
        }
    }

    void trim_history() {
        const std::size_t keep = std::max<std::size_t>(cfg_.fir.grid_points / (2 * cfg_.fir.oversample), cfg_.n_taps);
        if (history_.size() > 2 * keep) {
            history_.erase(history_.begin(), history_.end() - static_cast<std::ptrdiff_t>(keep));
        }
    }

    double                      dt_;
    StreamingConfig             cfg_;
    std::vector<double>         window_;
    std::vector<double>         omega_;
    std::vector<double>         p_yy_;
    std::vector<cplx>           p_xy_;
    std::vector<double>         history_;
    std::vector<double>         empty_;
    std::optional<FirFilter>    fir_;
    std::optional<WienerFilter> filter_;
    std::future<Outcome>        pending_;
    std::vector<std::string>    log_;
    double                      weight_    = 0.0;  // 1 - a^k after k blocks
    std::size_t                 blocks_    = 0;
    std::size_t                 redesigns_ = 0;
    std::size_t                 failed_    = 0;
};

/// Runs a whole record through a StreamingFilter block by block.
inline TimeSeries apply_streaming(const TimeSeries& y, StreamingConfig cfg, const TimeSeries* x_ref = nullptr,
                                  std::vector<std::string>* log = nullptr) {
    y.validate();
    const std::size_t block = cfg.block;
    StreamingFilter   sf(y.dt, std::move(cfg));
    TimeSeries        out{y.dt, {}};
    out.samples.reserve(y.size());
    for (std::size_t start = 0; start < y.size(); start += block) {
        const std::size_t len = std::min(block, y.size() - start);
        const auto        yb  = std::span<const double>(y.samples).subspan(start, len);
        const auto        xb  = x_ref ? std::span<const double>(x_ref->samples).subspan(start, len)
                                      : std::span<const double>{};
        const auto        o   = sf.process(yb, xb);
        out.samples.insert(out.samples.end(), o.begin(), o.end());
    }
    if (log) {
        *log = sf.log();
    }
    return out;
}

} // namespace sfw

#endif // SFW_FILTER_DESIGN_HPP
