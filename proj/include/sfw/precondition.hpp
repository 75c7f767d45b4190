#ifndef SFW_PRECONDITION_HPP
#define SFW_PRECONDITION_HPP

// Scaling function f(w) = phase * w^beta (i w0 + w)^(alpha - beta) and the map of the data
// (S_xy, S_yy) -> (conj(f) S_xy, |f|^2 S_yy) that renders a scale-free problem square integrable.

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "sfw/errors.hpp"
#include "sfw/spectral_model.hpp"

namespace sfw {

struct ScalingFunction {
    double alpha     = 0.0;
    double beta      = 0.0;
    double omega_0   = 1.0;
    double phase_rad = 0.0;  // f carries the unit-modulus constant e^{i phase_rad}

    cplx phase() const { return std::polar(1.0, phase_rad); }
    bool is_identity() const { return alpha == 0.0 && beta == 0.0; }
};

/// alpha = alpha_y / 2, beta = beta_y / 2.
inline std::pair<double, double> choose_exponents(const Asymptotics& asym) {
    return {0.5 * asym.alpha_y, 0.5 * asym.beta_y};
}

inline ScalingFunction make_scaling(const Asymptotics& asym, double omega_0, double phase_rad = 0.0) {
    const auto [a, b] = choose_exponents(asym);
    return {a, b, omega_0, phase_rad};
}

/// f(w) on the real line. w^beta uses arg w in {0, pi} so that f continues analytically into the
/// upper half plane; (i w0 + w)^(alpha-beta) uses the principal branch, whose cut never meets Im w >= 0.
inline cplx eval_f(const ScalingFunction& s, double omega) {
    if (omega == 0.0) {
        if (s.beta < 0.0) {
            throw std::domain_error("scaling function is singular at w = 0 for beta < 0");
        }
        if (s.beta > 0.0) {
            return {0.0, 0.0};
        }
    }
    const cplx   z{omega, s.omega_0};
    const double arg = omega < 0.0 ? std::numbers::pi : 0.0;
    const cplx   wb  = omega == 0.0 ? cplx{1.0, 0.0} : std::polar(std::pow(std::abs(omega), s.beta), s.beta * arg);
    const double g   = s.alpha - s.beta;
    const cplx   tail = g == 0.0 ? cplx{1.0, 0.0} : std::pow(z, g);
    return s.phase() * wb * tail;
}

/// Continuation of f into the closed upper half plane (principal branches of z^beta and
/// (i w0 + z)^(alpha-beta)); on the real line it agrees with eval_f(s, double).
inline cplx eval_f(const ScalingFunction& s, cplx z) {
    if (z.imag() < 0.0) {
        throw std::domain_error("scaling function is continued only into Im z >= 0");
    }
    if (z == cplx{0.0, 0.0}) {
        return eval_f(s, 0.0);
    }
    const double g    = s.alpha - s.beta;
    const cplx   zb   = s.beta == 0.0 ? cplx{1.0, 0.0} : std::pow(z, s.beta);
    const cplx   tail = g == 0.0 ? cplx{1.0, 0.0} : std::pow(z + cplx{0.0, s.omega_0}, g);
    return s.phase() * zb * tail;
}

/// |f(w)|^2 = |w|^{2 beta} (w0^2 + w^2)^{alpha - beta}, evaluated without complex powers.
inline double eval_f_norm2(const ScalingFunction& s, double omega) {
    if (omega == 0.0 && s.beta != 0.0) {
        if (s.beta < 0.0) {
            throw std::domain_error("scaling function is singular at w = 0 for beta < 0");
        }
        return 0.0;
    }
    const double a = std::abs(omega);
    return (s.beta == 0.0 ? 1.0 : std::pow(a, 2.0 * s.beta)) *
           std::pow(s.omega_0 * s.omega_0 + omega * omega, s.alpha - s.beta);
}

struct TransformedProblem {
    SpectralFunction S_xy_prime;
    SpectralFunction S_yy_prime;
    ScalingFunction  scaling;
    double           inf_S_yy = 0.0;
    double           sup_S_yy = 0.0;
};

/// Extremes of an even positive spectrum over a log grid spanning [lo/10, 10 hi], refined near the
/// grid extrema, merged with the spectrum's limits at 0 and infinity where those are finite.
inline std::pair<double, double> spectrum_inf_sup(const SpectralFunction& S) {
    const Band b = S.support();
    const auto e = sample_extremes([&S](double w) { return S.real(w); }, b.lo / 10.0, b.hi * 10.0);
    double     lo = e.min_value;
    double     hi = e.max_value;
    for (const auto& lim : {S.limit_at_zero(), S.limit_at_infinity()}) {
        if (lim) {
            lo = std::min(lo, lim->real());
            hi = std::max(hi, lim->real());
        } else {
            hi = std::numeric_limits<double>::infinity();
        }
    }
    return {lo, hi};
}

/// Applies the scaling: S_xy' = conj(f) S_xy, S_yy' = |f|^2 S_yy.
inline TransformedProblem transform(const SpectralFunction& S_xy, const SpectralFunction& S_yy,
                                    const ScalingFunction& s) {
    TransformedProblem p;
    p.scaling = s;
    p.S_yy_prime = SpectralFunction(
        SpectrumKind::Auto, [S_yy, s](double w) { return cplx{eval_f_norm2(s, w) * S_yy.real(w), 0.0}; },
        S_yy.support(), S_yy.exponent_at_zero() - 2.0 * s.beta, S_yy.exponent_at_infinity() - 2.0 * s.alpha);
    p.S_xy_prime = SpectralFunction(
        SpectrumKind::Cross, [S_xy, s](double w) { return std::conj(eval_f(s, w)) * S_xy(w); }, S_xy.support(),
        S_xy.exponent_at_zero() - s.beta, S_xy.exponent_at_infinity() - s.alpha);

    std::tie(p.inf_S_yy, p.sup_S_yy) = spectrum_inf_sup(p.S_yy_prime);
    if (!(p.inf_S_yy > 0.0)) {
        std::ostringstream os;
        os << "preconditioned S_yy has inf " << p.inf_S_yy
           << " <= 0; the declared asymptotic exponents do not match the data";
        throw ValidationError(os.str(), "precondition");
    }
    if (!std::isfinite(p.sup_S_yy)) {
        throw ValidationError("preconditioned S_yy is unbounded; the declared asymptotic exponents do not match the data",
                              "precondition");
    }
    return p;
}

/// h(w) = f(w) h'(w).
inline FrequencyResponseFn reconstruct_filter(FrequencyResponseFn h_prime, const ScalingFunction& s) {
    return [h_prime = std::move(h_prime), s](double w) { return eval_f(s, w) * h_prime(w); };
}

} // namespace sfw

#endif // SFW_PRECONDITION_HPP
