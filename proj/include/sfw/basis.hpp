#ifndef SFW_BASIS_HPP
#define SFW_BASIS_HPP

// Eigenbasis of the Hilbert transform, phi_k(w) = (pi w0)^{-1/2} (1 - iw/w0)^{-1} ((1 + iw/w0)/(1 - iw/w0))^k,
// and the circle map w = w0 tan(u/2) under which phi_k becomes the Fourier mode e^{iku}.
// Coefficients of the Toeplitz system are Fourier coefficients on the u-circle, computed by FFT.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfw/detail/fft.hpp"
#include "sfw/detail/parallel.hpp"
#include "sfw/errors.hpp"
#include "sfw/spectral_model.hpp"

namespace sfw {

struct BasisConfig {
    double      omega_0     = 1.0;
    std::size_t n_modes     = 100;
    std::size_t quad_points = 0;  // 0: automatic, max(8 n, 2^15)

    std::size_t resolved_quad_points() const {
        const std::size_t want = quad_points != 0 ? quad_points : std::max<std::size_t>(8 * n_modes, std::size_t{1} << 15);
        return detail::next_power_of_two(want);
    }

    void validate() const {
        if (!(omega_0 > 0.0)) {
            throw std::invalid_argument("basis scale omega_0 must be positive");
        }
        if (n_modes < 1) {
            throw std::invalid_argument("basis needs at least one mode");
        }
        if (quad_points != 0 && (!detail::is_power_of_two(quad_points) || quad_points < 8 * n_modes)) {
            throw std::invalid_argument("quad_points must be a power of two and at least 8 * n_modes");
        }
    }
};

/// Real sequence with an error estimate from grid doubling.
struct RealCoefficients {
    std::vector<double> values;
    double              quadrature_error = 0.0;
};

struct ComplexCoefficients {
    std::vector<cplx> values;
    double            quadrature_error = 0.0;
    bool              under_resolved   = false;  // |s_k| still above 10x the quadrature error at k = n-1
};

struct CoefficientSet {
    std::vector<double> t;
    std::vector<cplx>   s;
    double              quadrature_error = 0.0;
};

inline cplx eval_phi(long k, double omega, double omega_0) {
    const cplx   x{0.0, omega / omega_0};
    const cplx   ratio = (1.0 + x) / (1.0 - x);
    const double norm  = 1.0 / std::sqrt(std::numbers::pi * omega_0);
    cplx         pk    = 1.0;
    if (k != 0) {
        // |ratio| = 1, so the power is a rotation by k arg(ratio).
        pk = std::polar(1.0, static_cast<double>(k) * std::arg(ratio));
    }
    return norm / (1.0 - x) * pk;
}

/// u_j = -pi + 2 pi j / N.
inline double circle_node(std::size_t j, std::size_t n) {
    return -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
}

/// Samples on the u-grid. Auto: S(w0 tan(u/2)), the u = -pi node taken from the w -> inf limit.
/// Cross: g~(u) = sqrt(pi w0) e^{-iu/2} sec(u/2) g(w0 tan(u/2)), which vanishes at u = -pi when g
/// decays faster than 1/|w|; the u = 0 node uses the w -> 0 limit.
inline std::vector<cplx> circle_map_samples(const SpectralFunction& S, double omega_0, std::size_t quad_points) {
    if (quad_points < 2 || quad_points % 2 != 0) {
        throw std::invalid_argument("quad_points must be even");
    }
    std::vector<cplx> out(quad_points);
    const std::size_t mid   = quad_points / 2;
    const bool        cross = S.kind() == SpectrumKind::Cross;
    const double      scale = std::sqrt(std::numbers::pi * omega_0);

    if (cross) {
        // u = +-pi is one node; take the mean of the two one-sided limits of sec(u/2) g(w0 tan(u/2)),
        // which are finite and nonzero only for g ~ c/|w|.
        const double p = S.exponent_at_infinity();
        if (detail::nearly_zero(p - 1.0)) {
            const cplx up   = cplx{0.0, -1.0} * S.infinity_coefficient(1);
            const cplx down = cplx{0.0, 1.0} * S.infinity_coefficient(-1);
            out[0]          = 0.5 * scale / omega_0 * (up + down);
        } else {
            out[0] = 0.0;
        }
    } else {
        const auto lim = S.limit_at_infinity();
        if (!lim) {
            throw ValidationError("spectrum has no finite limit at infinity; the u = pi sample is undefined", "basis");
        }
        out[0] = lim->real();
    }
    const auto zero = S.limit_at_zero();
    if (!zero && !cross) {
        throw ValidationError("spectrum diverges at w = 0; the u = 0 sample is undefined", "basis");
    }
    // A divergent cross-spectrum at 0 is still square integrable on the circle; one node of
    // measure zero is set to 0 rather than inf.
    out[mid] = zero ? (cross ? scale * *zero : cplx{zero->real(), 0.0}) : cplx{0.0, 0.0};

    detail::parallel_for(quad_points, [&](std::size_t j) {
        if (j == 0 || j == mid) {
            return;
        }
        const double u = circle_node(j, quad_points);
        const double w = omega_0 * std::tan(0.5 * u);
        if (cross) {
            out[j] = scale * std::polar(1.0 / std::cos(0.5 * u), -0.5 * u) * S(w);
        } else {
            out[j] = S.real(w);
        }
    });
    return out;
}

namespace detail {

/// c_k = (1/N) sum_j x_j e^{-sign i k u_j} for k = 0..count-1, where sign = +1 selects the
/// e^{-iku} (analysis) kernel and -1 the e^{+iku} kernel.
inline std::vector<cplx> circle_fourier(std::span<const cplx> x, std::size_t count, bool analysis) {
    const auto n   = x.size();
    const auto raw = dft(x, analysis ? FftDirection::Forward : FftDirection::Backward);
    std::vector<cplx> c(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double sgn = (k % 2 == 0) ? 1.0 : -1.0;  // e^{ik pi} from u_0 = -pi
        c[k]             = sgn * raw[k] / static_cast<double>(n);
    }
    return c;
}

} // namespace detail

/// t_k = (1/2pi) \int e^{iku} S(w0 tan(u/2)) du, k = 0..n-1, error estimated from grid doubling.
inline RealCoefficients toeplitz_coeffs(const SpectralFunction& S_yy_prime, const BasisConfig& cfg) {
    cfg.validate();
    const std::size_t n  = cfg.n_modes;
    const std::size_t q  = cfg.resolved_quad_points();
    const auto        lo = detail::circle_fourier(circle_map_samples(S_yy_prime, cfg.omega_0, q), n, false);
    const auto        hi = detail::circle_fourier(circle_map_samples(S_yy_prime, cfg.omega_0, 2 * q), n, false);

    RealCoefficients r;
    r.values.resize(n);
    double residue = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        r.values[k]        = hi[k].real();
        residue            = std::max(residue, std::abs(hi[k].imag()));
        r.quadrature_error = std::max(r.quadrature_error, std::abs(hi[k] - lo[k]));
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(r.values[0]));
    if (residue > tol) {
        std::ostringstream os;
        os << "Toeplitz coefficients have imaginary residue " << residue << " (S_yy is not even)";
        throw NumericalError(os.str(), "basis");
    }
    return r;
}

/// s_k = <phi_k, S_xy'>, k = 0..n-1.
inline ComplexCoefficients rhs_coeffs(const SpectralFunction& S_xy_prime, const BasisConfig& cfg) {
    cfg.validate();
    const std::size_t n  = cfg.n_modes;
    const std::size_t q  = cfg.resolved_quad_points();
    const auto        lo = detail::circle_fourier(circle_map_samples(S_xy_prime, cfg.omega_0, q), n, true);
    const auto        hi = detail::circle_fourier(circle_map_samples(S_xy_prime, cfg.omega_0, 2 * q), n, true);

    ComplexCoefficients r;
    r.values = hi;
    for (std::size_t k = 0; k < n; ++k) {
        r.quadrature_error = std::max(r.quadrature_error, std::abs(hi[k] - lo[k]));
    }
    r.under_resolved = std::abs(hi[n - 1]) > 10.0 * r.quadrature_error && std::abs(hi[n - 1]) > 1e-12 * std::abs(hi[0]);
    return r;
}

inline CoefficientSet compute_coefficients(const SpectralFunction& S_xy_prime, const SpectralFunction& S_yy_prime,
                                           const BasisConfig& cfg) {
    auto t = toeplitz_coeffs(S_yy_prime, cfg);
    auto s = rhs_coeffs(S_xy_prime, cfg);
    return {std::move(t.values), std::move(s.values), std::max(t.quadrature_error, s.quadrature_error)};
}

/// h'(w) = sum_k h_k phi_k(w) at each w, Horner recursion in the unimodular ratio.
inline cplx synthesize_at(std::span<const cplx> coeffs, double omega_0, double omega) {
    const cplx x{0.0, omega / omega_0};
    const cplx ratio = (1.0 + x) / (1.0 - x);
    cplx       acc   = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) {
        acc = acc * ratio + coeffs[k];
    }
    return acc / (std::sqrt(std::numbers::pi * omega_0) * (1.0 - x));
}

inline std::vector<cplx> synthesize(std::span<const cplx> coeffs, double omega_0, std::span<const double> omega) {
    std::vector<cplx> out(omega.size());
    detail::parallel_for(omega.size(), [&](std::size_t i) { out[i] = synthesize_at(coeffs, omega_0, omega[i]); }, 256);
    return out;
}

/// Principal-value Hilbert transform H[f](w) = (1/pi) PV \int f(w') / (w - w') dw' on a uniform lattice.
/// Uses the odd-offset rule (2/pi) sum_{m odd} f_{i-m} / m, which is second-order accurate in the
/// lattice step for smooth f (the plain 1/(pi m) kernel is only first order). Points within a few
/// kernel widths of the ends see a truncated kernel and carry no accuracy guarantee.
inline std::vector<cplx> discrete_hilbert(std::span<const cplx> f) {
    const std::size_t n = f.size();
    if (n == 0) {
        return {};
    }
    const std::size_t m = detail::next_power_of_two(2 * n);
    std::vector<cplx> a(m, 0.0);
    std::vector<cplx> k(m, 0.0);
    std::copy(f.begin(), f.end(), a.begin());
    for (std::size_t d = 1; d < n; d += 2) {
        const double v = 2.0 / (std::numbers::pi * static_cast<double>(d));
        k[d]           = v;
        k[m - d]       = -v;
    }
    auto fa = detail::dft(a, detail::FftDirection::Forward);
    auto fk = detail::dft(k, detail::FftDirection::Forward);
    for (std::size_t i = 0; i < m; ++i) {
        fa[i] *= fk[i];
    }
    const auto        conv = detail::dft(fa, detail::FftDirection::Backward);
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = conv[i] / static_cast<double>(m);
    }
    return out;
}

} // namespace sfw

#endif // SFW_BASIS_HPP
