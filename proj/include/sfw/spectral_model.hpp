#ifndef SFW_SPECTRAL_MODEL_HPP
#define SFW_SPECTRAL_MODEL_HPP

// Spectral data (S_xx, S_xy, S_yy) with explicit power-law asymptotics.
//
// Conventions used throughout the library:
//   * angular frequency w in rad/s, two-sided densities normalized so that
//     Var(x) = \int S_xx(w) dw / 2pi;
//   * h(w) = \int H(t) e^{+i w t} dt, so causal filters are analytic in the upper half plane;
//   * S_xy(w) = \int E[x(t+tau) y(t)] e^{+i w tau} dtau.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfw/detail/numeric.hpp"
#include "sfw/errors.hpp"

namespace sfw {

using cplx = std::complex<double>;

enum class SpectrumKind { Auto, Cross };

/// Closed frequency interval [lo, hi] in rad/s.
struct Band {
    double lo = 0.0;
    double hi = 0.0;
};

/// Power-law exponents and amplitudes of the data pair (S_xy, S_yy):
///   |S_xy| ~ |w|^-alpha_x,  S_yy ~ A_y |w|^-alpha_y   as |w| -> inf
///   |S_xy| ~ |w|^-beta_x,   S_yy ~ B_y |w|^-beta_y    as |w| -> 0
/// A_x_bar and B_x_bar bound the preconditioned cross-spectrum near inf and 0.
struct Asymptotics {
    double alpha_x = 0.0;
    double alpha_y = 0.0;
    double beta_x  = 0.0;
    double beta_y  = 0.0;
    double A_y     = 1.0;
    double B_y     = 1.0;
    double A_x_bar = 0.0;
    double B_x_bar = 0.0;

    double high_margin() const { return 2.0 * alpha_x - alpha_y; }
    double low_margin() const { return 2.0 * beta_x - beta_y; }

    bool integrable() const { return high_margin() > 1.0 && low_margin() < 1.0; }
    /// Conditions under which the expansion converges uniformly (smooth-data regime).
    bool strengthened() const { return high_margin() > 2.0 && low_margin() < 0.0; }
};

/// Immutable, evaluable spectrum. Inside the trusted support the user evaluator is called;
/// outside it a power law with the declared exponent is continued from the boundary value.
class SpectralFunction {
public:
    /// Evaluator on signed angular frequency; only called with lo <= |w| <= hi.
    using Evaluator = std::function<cplx(double)>;

    SpectralFunction() = default;

    /// `exponent_at_zero` p0 and `exponent_at_infinity` pinf describe S ~ |w|^-p near 0 and inf.
    SpectralFunction(SpectrumKind kind, Evaluator raw, Band support, double exponent_at_zero,
                     double exponent_at_infinity)
        : kind_(kind), raw_(std::make_shared<const Evaluator>(std::move(raw))), support_(support) {
        if (!(support.lo > 0.0) || !(support.hi > support.lo)) {
            throw std::invalid_argument("spectral support must satisfy 0 < lo < hi");
        }
        zero_.exponent = exponent_at_zero;
        inf_.exponent  = exponent_at_infinity;
        zero_.pos      = eval_raw(support.lo) * std::pow(support.lo, exponent_at_zero);
        zero_.neg      = eval_raw(-support.lo) * std::pow(support.lo, exponent_at_zero);
        inf_.pos       = eval_raw(support.hi) * std::pow(support.hi, exponent_at_infinity);
        inf_.neg       = eval_raw(-support.hi) * std::pow(support.hi, exponent_at_infinity);
    }

    bool valid() const noexcept { return static_cast<bool>(raw_); }

    cplx operator()(double omega) const {
        const double a = std::abs(omega);
        if (a >= support_.lo && a <= support_.hi) {
            return eval_raw(omega);
        }
        const Tail& tail = a < support_.lo ? zero_ : inf_;
        const cplx  coef = omega < 0.0 ? tail.neg : tail.pos;
        if (a == 0.0) {
            return limit(tail, coef);
        }
        return coef * std::pow(a, -tail.exponent);
    }

    double real(double omega) const { return (*this)(omega).real(); }

    SpectrumKind kind() const noexcept { return kind_; }
    const Band&  support() const noexcept { return support_; }
    double       exponent_at_zero() const noexcept { return zero_.exponent; }
    double       exponent_at_infinity() const noexcept { return inf_.exponent; }

    /// Amplitude c of the continuation S ~ c |w|^-p beyond the upper support edge.
    cplx infinity_coefficient(int sign = 1) const { return sign < 0 ? inf_.neg : inf_.pos; }

    /// Limit w -> 0 from the side given by `sign`; empty if the spectrum diverges there.
    std::optional<cplx> limit_at_zero(int sign = 1) const {
        const cplx c = sign < 0 ? zero_.neg : zero_.pos;
        const cplx v = limit(zero_, c);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            return std::nullopt;
        }
        return v;
    }

    /// Limit |w| -> inf on the side given by `sign`; empty if the spectrum grows without bound.
    std::optional<cplx> limit_at_infinity(int sign = 1) const {
        const cplx c = sign < 0 ? inf_.neg : inf_.pos;
        if (detail::nearly_zero(inf_.exponent)) {
            return c;
        }
        if (inf_.exponent > 0.0) {
            return cplx{0.0, 0.0};
        }
        return std::nullopt;
    }

private:
    struct Tail {
        cplx   pos{};
        cplx   neg{};
        double exponent = 0.0;
    };

    static cplx limit(const Tail& t, cplx coef) {
        if (detail::nearly_zero(t.exponent)) {
            return coef;
        }
        if (t.exponent < 0.0) {
            return {0.0, 0.0};
        }
        return {std::numeric_limits<double>::infinity(), 0.0};
    }

    cplx eval_raw(double omega) const {
        const cplx v = (*raw_)(omega);
        return kind_ == SpectrumKind::Auto ? cplx{v.real(), 0.0} : v;
    }

    SpectrumKind                     kind_ = SpectrumKind::Auto;
    std::shared_ptr<const Evaluator> raw_;
    Band                             support_{};
    Tail                             zero_{};
    Tail                             inf_{};
};

inline constexpr Band default_analytic_support{1e-8, 1e8};

/// Real even spectrum from its values on w >= 0.
inline SpectralFunction make_auto_spectrum(std::function<double(double)> fn, Band support, double p0, double pinf) {
    return SpectralFunction(
        SpectrumKind::Auto, [fn = std::move(fn)](double w) { return cplx{fn(std::abs(w)), 0.0}; }, support, p0, pinf);
}

/// Cross spectrum of real processes, S(-w) = conj(S(w)), from its values on w >= 0.
inline SpectralFunction make_cross_spectrum(std::function<cplx(double)> fn, Band support, double p0, double pinf) {
    return SpectralFunction(
        SpectrumKind::Cross,
        [fn = std::move(fn)](double w) { return w < 0.0 ? std::conj(fn(-w)) : fn(w); }, support, p0, pinf);
}

/// Cross spectrum with the same values as a real even auto-spectrum (e.g. S_xy = S_xx for
/// signal and noise that are orthogonal).
inline SpectralFunction as_cross(const SpectralFunction& s) {
    if (s.kind() == SpectrumKind::Cross) {
        return s;
    }
    return SpectralFunction(
        SpectrumKind::Cross, [s](double w) { return s(w); }, s.support(), s.exponent_at_zero(),
        s.exponent_at_infinity());
}

inline SpectralFunction constant_spectrum(double c, Band support = default_analytic_support) {
    return make_auto_spectrum([c](double) { return c; }, support, 0.0, 0.0);
}

/// A gamma^2 / ((|w| - w_c)^2 + gamma^2): peaks of height A at +-w_c, half-width gamma.
inline SpectralFunction lorentzian_peak(double amplitude, double gamma, double omega_c,
                                        Band support = default_analytic_support) {
    return make_auto_spectrum(
        [=](double w) {
            const double d = w - omega_c;
            return amplitude * gamma * gamma / (d * d + gamma * gamma);
        },
        support, 0.0, 2.0);
}

/// B / |w|^beta + white.
inline SpectralFunction powerlaw_plus_white(double amplitude, double beta, double white,
                                            Band support = default_analytic_support) {
    const double p0   = amplitude > 0.0 ? std::max(beta, 0.0) : 0.0;
    const double pinf = white > 0.0 ? std::min(beta, 0.0) : beta;
    return make_auto_spectrum([=](double w) { return amplitude / std::pow(w, beta) + white; }, support, p0, pinf);
}

/// amplitude * 2a / (w^2 + a^2): spectrum of an Ornstein-Uhlenbeck process with variance `amplitude`.
inline SpectralFunction rational_lowpass(double amplitude, double a, Band support = default_analytic_support) {
    return make_auto_spectrum([=](double w) { return amplitude * 2.0 * a / (w * w + a * a); }, support, 0.0, 2.0);
}

/// Pointwise sum. Auto + auto stays auto; anything else is a general cross spectrum.
inline SpectralFunction operator+(const SpectralFunction& a, const SpectralFunction& b) {
    const Band support{std::max(a.support().lo, b.support().lo), std::min(a.support().hi, b.support().hi)};
    const auto kind = (a.kind() == SpectrumKind::Auto && b.kind() == SpectrumKind::Auto) ? SpectrumKind::Auto
                                                                                          : SpectrumKind::Cross;
    return SpectralFunction(
        kind, [a, b](double w) { return a(w) + b(w); }, support,
        std::max(a.exponent_at_zero(), b.exponent_at_zero()),
        std::min(a.exponent_at_infinity(), b.exponent_at_infinity()));
}

/// Spectra of the worked scale-free example: Lorentzian signal line over 1/w^1.8 + white noise.
struct PaperExample {
    double gamma   = 2.0 * std::numbers::pi;
    double A       = 0.9;
    double omega_c = 20.0 * std::numbers::pi;
    double noise_B = 5.0;
    double noise_beta  = 1.8;
    double noise_white = 0.01;

    SpectralFunction S_xx;
    SpectralFunction S_nn;
    SpectralFunction S_yy;
    SpectralFunction S_xy;
    Asymptotics      asymptotics;
};

inline PaperExample make_paper_example(Band support = default_analytic_support) {
    PaperExample ex;
    ex.S_xx = lorentzian_peak(ex.A, ex.gamma, ex.omega_c, support);
    ex.S_nn = powerlaw_plus_white(ex.noise_B, ex.noise_beta, ex.noise_white, support);
    ex.S_yy = ex.S_xx + ex.S_nn;
    ex.S_xy = as_cross(ex.S_xx);

    auto& a   = ex.asymptotics;
    a.alpha_x = 2.0;
    a.beta_x  = 0.0;
    a.alpha_y = 0.0;
    a.beta_y  = ex.noise_beta;
    a.A_y     = ex.noise_white;
    a.B_y     = ex.noise_B;
    return ex;
}

// ---------------------------------------------------------------------------------------------
// Tabulated spectra

struct TabulatedSpectrum {
    SpectrumKind      kind = SpectrumKind::Auto;
    std::vector<double> omega;  // strictly increasing, > 0
    std::vector<cplx>   values;

    void validate() const {
        if (omega.size() < 2 || omega.size() != values.size()) {
            throw std::invalid_argument("tabulated spectrum needs >= 2 points and matching value count");
        }
        for (std::size_t i = 0; i < omega.size(); ++i) {
            if (!(omega[i] > 0.0) || (i > 0 && !(omega[i] > omega[i - 1]))) {
                throw std::invalid_argument("tabulated frequencies must be positive and strictly increasing");
            }
            if (kind == SpectrumKind::Auto && !(values[i].real() > 0.0)) {
                std::ostringstream os;
                os << "tabulated auto-spectrum is not strictly positive at w = " << omega[i];
                throw std::invalid_argument(os.str());
            }
        }
    }
};

/// Replaces non-positive auto-spectrum bins by `eps` times the median of the surrounding
/// `halfwidth` bins on each side.
inline void floor_nonpositive(TabulatedSpectrum& s, double eps = 1e-6, std::size_t halfwidth = 16) {
    const std::size_t n = s.values.size();
    std::vector<cplx> out = s.values;
    for (std::size_t i = 0; i < n; ++i) {
        if (s.values[i].real() > 0.0) {
            continue;
        }
        std::vector<double> local;
        for (std::size_t j = (i > halfwidth ? i - halfwidth : 0); j < std::min(n, i + halfwidth + 1); ++j) {
            if (s.values[j].real() > 0.0) {
                local.push_back(s.values[j].real());
            }
        }
        double med = 1.0;
        if (!local.empty()) {
            std::nth_element(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(local.size() / 2), local.end());
            med = local[local.size() / 2];
        }
        out[i] = {eps * med, 0.0};
    }
    s.values = std::move(out);
}

/// Interpolating spectral function: log-log for auto-spectra, real and imaginary parts linear in
/// log|w| for cross-spectra. Beyond the table the declared power laws are continued.
inline SpectralFunction make_spectral_function(const TabulatedSpectrum& table, double p0, double pinf) {
    table.validate();
    struct Data {
        std::vector<double> logw;
        std::vector<cplx>   v;
        SpectrumKind        kind;
    };
    auto data  = std::make_shared<Data>();
    data->kind = table.kind;
    data->v    = table.values;
    data->logw.reserve(table.omega.size());
    for (double w : table.omega) {
        data->logw.push_back(std::log(w));
    }
    if (table.kind == SpectrumKind::Auto) {
        for (auto& v : data->v) {
            v = {std::log(v.real()), 0.0};
        }
    }
    const auto interp = [data](double w) -> cplx {
        const double lw = std::log(w);
        const auto&  x  = data->logw;
        auto         it = std::upper_bound(x.begin(), x.end(), lw);
        std::size_t  i  = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
        i               = std::min(i, x.size() - 2);
        const double t  = (lw - x[i]) / (x[i + 1] - x[i]);
        const cplx   v  = data->v[i] + t * (data->v[i + 1] - data->v[i]);
        return data->kind == SpectrumKind::Auto ? cplx{std::exp(v.real()), 0.0} : v;
    };
    const Band support{table.omega.front(), table.omega.back()};
    if (table.kind == SpectrumKind::Auto) {
        return make_auto_spectrum([interp](double w) { return interp(w).real(); }, support, p0, pinf);
    }
    return make_cross_spectrum(interp, support, p0, pinf);
}

// ---------------------------------------------------------------------------------------------
// Validation

struct ValidationCheck {
    std::string name;
    bool        passed = true;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool                         strengthened = false;  // smooth-data regime, informational

    bool ok() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }

    std::string failures() const {
        std::string out;
        for (const auto& c : checks) {
            if (!c.passed) {
                if (!out.empty()) {
                    out += "; ";
                }
                out += c.name + " failed (" + c.detail + ")";
            }
        }
        return out;
    }
};

struct Extremes {
    double min_value = 0.0;
    double min_at    = 0.0;
    double max_value = 0.0;
    double max_at    = 0.0;
};

/// Extremes of a real function of w on a log grid over [lo, hi], refined locally around the
/// grid extrema.
inline Extremes sample_extremes(const std::function<double(double)>& fn, double lo, double hi,
                                std::size_t points = 4096) {
    const auto          grid = detail::log_grid(lo, hi, points);
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        v[i] = fn(grid[i]);
    }
    const auto imin = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
    const auto imax = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    Extremes   e{v[imin], grid[imin], v[imax], grid[imax]};
    const auto refine = [&](std::size_t i, bool maximize) {
        const double a = grid[i > 0 ? i - 1 : 0];
        const double b = grid[std::min(i + 1, grid.size() - 1)];
        if (!(b > a)) {
            return;
        }
        const auto [x, y] = detail::refine_extremum(fn, a, b, maximize);
        if (maximize && y > e.max_value) {
            e.max_value = y;
            e.max_at    = x;
        }
        if (!maximize && y < e.min_value) {
            e.min_value = y;
            e.min_at    = x;
        }
    };
    refine(imin, false);
    refine(imax, true);
    return e;
}

/// Checks the feasibility conditions of the scale-free Wiener problem. Never throws on
/// infeasible data; the report lists every condition with its outcome.
inline ValidationReport validate_data(const SpectralFunction& S_xy, const SpectralFunction& S_yy,
                                      const Asymptotics& asym, const SpectralFunction* S_xx = nullptr) {
    ValidationReport r;
    auto             add = [&r](std::string name, bool ok, std::string detail) {
        r.checks.push_back({std::move(name), ok, std::move(detail)});
    };
    std::ostringstream os;

    add("A_y > 0", asym.A_y > 0.0, "A_y = " + std::to_string(asym.A_y));
    add("B_y > 0", asym.B_y > 0.0, "B_y = " + std::to_string(asym.B_y));

    os << "2*alpha_x - alpha_y = " << asym.high_margin();
    add("2αx−αy > 1", asym.high_margin() > 1.0, os.str());
    os.str({});
    os << "2*beta_x - beta_y = " << asym.low_margin();
    add("2βx−βy < 1", asym.low_margin() < 1.0, os.str());
    os.str({});

    const Band sup = S_yy.support();
    const auto e   = sample_extremes([&S_yy](double w) { return S_yy.real(w); }, sup.lo, sup.hi);
    // A dip that is many orders below the spectrum one octave around it is a zero, not a power law.
    double local = 0.0;
    for (double w : detail::log_grid(std::max(sup.lo, 0.5 * e.min_at), std::min(sup.hi, 2.0 * e.min_at), 64)) {
        local = std::max(local, S_yy.real(w));
    }
    const bool positive = e.min_value > 0.0 && e.min_value > 1e-10 * local;
    os << "min S_yy = " << e.min_value << " at w = " << e.min_at;
    add("S_yy > 0 on trusted support", positive, os.str());
    os.str({});

    if (S_xx != nullptr) {
        const auto grid  = detail::log_grid(sup.lo, sup.hi, 1024);
        double     worst = 0.0;
        double     at    = 0.0;
        for (double w : grid) {
            const double lhs = S_xx->real(w) * S_yy.real(w);
            const double rhs = std::norm(S_xy(w));
            const double gap = (rhs - lhs) / std::max(lhs, 1e-300);
            if (gap > worst) {
                worst = gap;
                at    = w;
            }
        }
        os << "max relative excess " << worst << " at w = " << at;
        add("S_xx S_yy >= |S_xy|^2", worst <= 1e-9, os.str());
    }

    r.strengthened = asym.strengthened();
    return r;
}

// ---------------------------------------------------------------------------------------------
// Error spectrum and variance

/// S_ee = S_xx + |h|^2 S_yy - 2 Re{conj(h) S_xy} at one frequency.
inline double eval_error_spectrum(cplx h, const SpectralFunction& S_xx, const SpectralFunction& S_xy,
                                  const SpectralFunction& S_yy, double omega) {
    const double syy = S_yy.real(omega);
    if (!(syy > 0.0)) {
        throw std::domain_error("S_yy must be positive where the error spectrum is evaluated");
    }
    return S_xx.real(omega) + std::norm(h) * syy - 2.0 * (std::conj(h) * S_xy(omega)).real();
}

using FrequencyResponseFn = std::function<cplx(double)>;

struct VarianceResult {
    double value     = 0.0;
    double quad_error = 0.0;
    double tail_low  = 0.0;  // contribution of |w| below the integration band
    double tail_high = 0.0;  // contribution of |w| above the integration band
    bool   divergent = false;
};

/// Integral over both half-lines of a real spectral density g(w) dw / 2pi: adaptive quadrature
/// on [band.lo, band.hi] in |w| plus power-law tails fitted at the band edges.
inline VarianceResult integrate_spectrum(const std::function<double(double)>& g, Band band) {
    VarianceResult r;
    const auto     both = [&g](double w) { return g(w) + g(-w); };
    // A coarse pass over |g| sets the absolute tolerance, so panels where g is negligible or
    // cancels do not chase an unreachable relative accuracy.
    const auto     mag  = detail::integrate_log([&both](double w) { return std::abs(both(w)); }, band.lo, band.hi,
                                                1e-3);
    const auto     q    = detail::integrate_log(both, band.lo, band.hi, 1e-11, 0.5, 1e-12 * mag.value);
    r.value             = q.value;
    r.quad_error        = q.error;

    // Tail above: S ~ c w^-p with p from a two-point slope.
    const double s1 = both(band.hi);
    const double s2 = both(2.0 * band.hi);
    if (s1 > 0.0 && s2 > 0.0) {
        const double p = -std::log(s2 / s1) / std::log(2.0);
        if (p <= 1.0) {
            r.divergent = true;
        } else {
            r.tail_high = s1 * band.hi / (p - 1.0);
        }
    } else if (std::abs(s1) > 0.0) {
        r.tail_high = s1 * band.hi;  // sign change at the edge: crude bound-sized estimate
    }
    // Tail below: S ~ c w^-q.
    const double z1 = both(band.lo);
    const double z2 = both(0.5 * band.lo);
    if (z1 > 0.0 && z2 > 0.0) {
        const double qexp = std::log(z2 / z1) / std::log(2.0);
        if (qexp >= 1.0) {
            r.divergent = true;
        } else {
            r.tail_low = z1 * band.lo / (1.0 - qexp);
        }
    } else {
        r.tail_low = z1 * band.lo;
    }
    const double inv2pi = 0.5 / std::numbers::pi;
    r.value             = (r.value + r.tail_low + r.tail_high) * inv2pi;
    r.quad_error *= inv2pi;
    r.tail_low *= inv2pi;
    r.tail_high *= inv2pi;
    if (r.divergent) {
        r.value = std::numeric_limits<double>::infinity();
    }
    return r;
}

inline Band common_support(const SpectralFunction& a, const SpectralFunction& b, const SpectralFunction& c) {
    return {std::max({a.support().lo, b.support().lo, c.support().lo}),
            std::min({a.support().hi, b.support().hi, c.support().hi})};
}

/// V_e[h] = \int S_ee(w) dw / 2pi.
inline VarianceResult integrate_error_variance(const FrequencyResponseFn& h, const SpectralFunction& S_xx,
                                               const SpectralFunction& S_xy, const SpectralFunction& S_yy,
                                               std::optional<Band> band = std::nullopt) {
    const Band b = band.value_or(common_support(S_xx, S_xy, S_yy));
    return integrate_spectrum([&](double w) { return eval_error_spectrum(h(w), S_xx, S_xy, S_yy, w); }, b);
}

/// Error variance of the unconstrained (non-causal) optimum: \int (S_xx - |S_xy|^2/S_yy) dw/2pi.
inline VarianceResult noncausal_error_variance(const SpectralFunction& S_xx, const SpectralFunction& S_xy,
                                               const SpectralFunction& S_yy, std::optional<Band> band = std::nullopt) {
    const Band b = band.value_or(common_support(S_xx, S_xy, S_yy));
    return integrate_spectrum(
        [&](double w) {
            const double syy = S_yy.real(w);
            if (!std::isfinite(syy)) {
                return S_xx.real(w);
            }
            return S_xx.real(w) - std::norm(S_xy(w)) / syy;
        },
        b);
}

/// Var(x) = \int S_xx dw / 2pi.
inline VarianceResult signal_variance(const SpectralFunction& S_xx, std::optional<Band> band = std::nullopt) {
    return integrate_spectrum([&](double w) { return S_xx.real(w); }, band.value_or(S_xx.support()));
}

} // namespace sfw

#endif // SFW_SPECTRAL_MODEL_HPP
