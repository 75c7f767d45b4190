#ifndef SFW_TRUNCATION_BUDGET_HPP
#define SFW_TRUNCATION_BUDGET_HPP

// Finite-bandwidth error budget: how much of the Toeplitz data is lost outside the trusted band
// [w_m, w_M], and the largest truncation n for which the band still constrains the solution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfw/errors.hpp"
#include "sfw/spectral_model.hpp"

namespace sfw {

inline double choose_scale(double omega_m, double omega_M) {
    if (!(omega_m > 0.0) || !(omega_M > omega_m)) {
        throw std::invalid_argument("choose_scale requires 0 < omega_m < omega_M");
    }
    return std::sqrt(omega_m * omega_M);
}

/// u = 2 atan(w / w0).
inline double circle_angle(double omega, double omega_0) { return 2.0 * std::atan(omega / omega_0); }

/// General bound (1/pi) sup(S) (u_m + pi - u_M).
inline double delta_t_bound(double sup_S, double omega_m, double omega_M, double omega_0) {
    const double u_m = circle_angle(omega_m, omega_0);
    const double u_M = circle_angle(omega_M, omega_0);
    return sup_S * (u_m + (std::numbers::pi - u_M)) / std::numbers::pi;
}

/// Specialized bound at w0 = sqrt(w_m w_M): (4/pi) sup(S) sqrt(w_m / w_M).
inline double delta_t_bound_optimal(double sup_S, double omega_m, double omega_M) {
    return 4.0 / std::numbers::pi * sup_S * std::sqrt(omega_m / omega_M);
}

/// True when w_m, w0, w_M are separated by at least a factor 10 on each side.
inline bool scale_well_separated(double omega_m, double omega_M, double omega_0) {
    return omega_0 >= 10.0 * omega_m && omega_M >= 10.0 * omega_0;
}

inline std::size_t n_max(double kappa, double omega_m, double omega_M) {
    if (!(kappa >= 1.0)) {
        throw std::invalid_argument("n_max requires kappa >= 1");
    }
    const double v = std::floor(std::sqrt(omega_M / omega_m) / kappa);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::min(v, 1e15)));
}

/// Bound on the cross-spectrum coefficient error:
///   (1/pi) ( B_x u_m^{1-e0} / (1 - e0) + A_x (pi - u_M)^{einf} / einf )
/// with e0 = beta_x - beta_y/2 < 1 and einf = alpha_x - alpha_y/2 > 0.
inline double delta_s_bound(const Asymptotics& asym, double u_m, double u_M) {
    const double e0   = asym.beta_x - 0.5 * asym.beta_y;
    const double einf = asym.alpha_x - 0.5 * asym.alpha_y;
    if (e0 - 1.0 >= 0.0) {
        std::ostringstream os;
        os << "delta_s bound needs beta_x - beta_y/2 < 1 (got " << e0 << ")";
        throw ValidationError(os.str(), "truncation_budget");
    }
    if (!(einf > 0.0)) {
        std::ostringstream os;
        os << "delta_s bound needs alpha_x - alpha_y/2 > 0 (got " << einf << ")";
        throw ValidationError(os.str(), "truncation_budget");
    }
    const double low  = asym.B_x_bar == 0.0 ? 0.0 : asym.B_x_bar * std::pow(u_m, 1.0 - e0) / (1.0 - e0);
    const double high = asym.A_x_bar == 0.0 ? 0.0 : asym.A_x_bar * std::pow(std::numbers::pi - u_M, einf) / einf;
    return (low + high) / std::numbers::pi;
}

struct EnvelopeFit {
    double A_x_bar = 0.0;
    double B_x_bar = 0.0;
};

/// Envelope amplitudes of a (preconditioned) cross spectrum: the max of |S| |w|^e over the outer
/// and inner decade of the band, e being the decay exponent at each end.
inline EnvelopeFit fit_envelopes(const SpectralFunction& S_xy_prime, const Asymptotics& asym, Band band,
                                 std::size_t points = 256) {
    const double e0   = asym.beta_x - 0.5 * asym.beta_y;
    const double einf = asym.alpha_x - 0.5 * asym.alpha_y;
    EnvelopeFit  f;
    const double inner_hi = std::min(band.hi, 10.0 * band.lo);
    const double outer_lo = std::max(band.lo, band.hi / 10.0);
    for (double w : detail::log_grid(band.lo, inner_hi, points)) {
        const double m = std::max(std::abs(S_xy_prime(w)), std::abs(S_xy_prime(-w)));
        f.B_x_bar      = std::max(f.B_x_bar, m * std::pow(w, e0));
    }
    for (double w : detail::log_grid(outer_lo, band.hi, points)) {
        const double m = std::max(std::abs(S_xy_prime(w)), std::abs(S_xy_prime(-w)));
        f.A_x_bar      = std::max(f.A_x_bar, m * std::pow(w, einf));
    }
    return f;
}

struct RelativeErrors {
    double rel_err_y       = 0.0;
    double rel_err_y_chain = 0.0;  // n |dt| / inf S
    double rel_err_y_kappa = 0.0;  // (4/pi) n kappa sqrt(w_m / w_M)
    double rel_err_x       = 0.0;
    std::string dominant;          // "y" or "x"
};

/// rel_err_y = min(n dt / inf S, (4/pi) n kappa sqrt(w_m/w_M)); rel_err_x = sqrt(n) kappa ds / ||s||.
inline RelativeErrors relative_filter_errors(std::size_t n, double delta_t, double inf_S, double kappa,
                                             double delta_s, double s_norm, double omega_m, double omega_M) {
    if (!(s_norm > 0.0)) {
        throw std::invalid_argument("relative filter errors need ||s|| > 0");
    }
    const double   nn = static_cast<double>(n);
    RelativeErrors r;
    r.rel_err_y_chain = nn * delta_t / inf_S;
    r.rel_err_y_kappa = 4.0 / std::numbers::pi * nn * kappa * std::sqrt(omega_m / omega_M);
    r.rel_err_y       = delta_t == 0.0 ? 0.0 : std::min(r.rel_err_y_chain, r.rel_err_y_kappa);
    r.rel_err_x       = std::sqrt(nn) * kappa * delta_s / s_norm;
    r.dominant        = r.rel_err_x > r.rel_err_y ? "x" : "y";
    return r;
}

struct ErrorBudget {
    double      omega_m       = 0.0;
    double      omega_M       = 0.0;
    double      omega_0       = 0.0;
    double      delta_t_bound = 0.0;
    double      delta_s_bound = 0.0;
    double      rel_err_y     = 0.0;
    double      rel_err_x     = 0.0;
    std::string dominant;
    double      kappa         = 1.0;
    std::size_t n_max         = 1;
    std::size_t n_used        = 0;
    bool        scale_separated = true;
    EnvelopeFit envelopes;
};

struct BudgetInputs {
    double      omega_m = 0.0;
    double      omega_M = 0.0;
    double      omega_0 = 0.0;
    double      inf_S   = 0.0;
    double      sup_S   = 0.0;
    double      kappa   = 1.0;
    double      s_norm  = 1.0;
    std::size_t n       = 1;
    Asymptotics asym;  // envelope amplitudes filled in
};

inline ErrorBudget compute_budget(const BudgetInputs& in) {
    ErrorBudget b;
    b.omega_m         = in.omega_m;
    b.omega_M         = in.omega_M;
    b.omega_0         = in.omega_0;
    b.kappa           = in.kappa;
    b.n_used          = in.n;
    b.scale_separated = scale_well_separated(in.omega_m, in.omega_M, in.omega_0);
    b.delta_t_bound   = delta_t_bound(in.sup_S, in.omega_m, in.omega_M, in.omega_0);
    b.delta_s_bound   = delta_s_bound(in.asym, circle_angle(in.omega_m, in.omega_0), circle_angle(in.omega_M, in.omega_0));
    b.n_max           = n_max(std::max(1.0, in.kappa), in.omega_m, in.omega_M);
    const auto rel    = relative_filter_errors(in.n, b.delta_t_bound, in.inf_S, std::max(1.0, in.kappa), b.delta_s_bound,
                                               in.s_norm, in.omega_m, in.omega_M);
    b.rel_err_y       = rel.rel_err_y;
    b.rel_err_x       = rel.rel_err_x;
    b.dominant        = rel.dominant;
    b.envelopes       = {in.asym.A_x_bar, in.asym.B_x_bar};
    return b;
}

} // namespace sfw

#endif // SFW_TRUNCATION_BUDGET_HPP
