#ifndef SFW_ESTIMATION_HPP
#define SFW_ESTIMATION_HPP

// Welch estimates of auto- and cross-spectra from sampled records, and log-log fits of their
// asymptotic power laws. Spectra are two-sided densities in rad/s: \int S dw / 2pi = variance.

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
#include "sfw/detail/numeric.hpp"
#include "sfw/detail/parallel.hpp"
#include "sfw/errors.hpp"
#include "sfw/spectral_model.hpp"

namespace sfw {

struct TimeSeries {
    double              dt = 1.0;
    std::vector<double> samples;

    std::size_t size() const noexcept { return samples.size(); }
    double      duration() const noexcept { return dt * static_cast<double>(samples.size()); }

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) {
            throw ValidationError("time series needs a positive sample period", "estimation");
        }
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!std::isfinite(samples[i])) {
                std::ostringstream os;
                os << "time series has a non-finite sample at index " << i;
                throw ValidationError(os.str(), "estimation");
            }
        }
    }
};

enum class WindowKind { Hann, Slepian };
enum class Detrend { None, Mean };

struct WelchConfig {
    std::size_t segment_length   = 4096;
    double      overlap_fraction = 0.85;
    WindowKind  window           = WindowKind::Hann;
    double      slepian_nw       = 3.0;
    Detrend     detrend          = Detrend::Mean;

    std::size_t step() const {
        const auto overlap = static_cast<std::size_t>(std::lround(overlap_fraction * static_cast<double>(segment_length)));
        return std::max<std::size_t>(1, segment_length - std::min(overlap, segment_length - 1));
    }

    void validate() const {
        if (segment_length < 16) {
            throw std::invalid_argument("Welch segment length must be at least 16");
        }
        if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
            throw std::invalid_argument("Welch overlap fraction must lie in [0, 1)");
        }
        if (window == WindowKind::Slepian && !(slepian_nw > 0.0 && slepian_nw < 0.5 * static_cast<double>(segment_length))) {
            throw std::invalid_argument("Slepian NW must lie in (0, segment_length / 2)");
        }
    }
};

/// Segment length (power of two) for which `bins` Fourier bins span a line of full width
/// `linewidth_rad_s`: bin spacing 2 pi / (L dt) = linewidth / bins.
inline std::size_t segment_length_for_linewidth(double linewidth_rad_s, double dt, double bins = 8.0) {
    if (!(linewidth_rad_s > 0.0) || !(dt > 0.0) || !(bins > 0.0)) {
        throw std::invalid_argument("linewidth, dt and bin count must be positive");
    }
    const double want = 2.0 * std::numbers::pi * bins / (linewidth_rad_s * dt);
    return detail::next_power_of_two(std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(want))));
}

inline std::size_t welch_segment_count(std::size_t n, const WelchConfig& cfg) {
    if (n < cfg.segment_length) {
        return 0;
    }
    return (n - cfg.segment_length) / cfg.step() + 1;
}

/// Periodic Hann window 0.5 (1 - cos(2 pi j / L)).
inline std::vector<double> hann_window(std::size_t length) {
    std::vector<double> w(length);
    for (std::size_t j = 0; j < length; ++j) {
        w[j] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(length)));
    }
    return w;
}

/// Zeroth discrete prolate spheroidal sequence: top eigenvector of the commuting tridiagonal
/// matrix with diagonal ((L-1-2j)/2)^2 cos(2 pi W) and off-diagonal j (L-j)/2, W = NW / L.
/// The eigenvalue is located by Sturm-sequence bisection, the vector by inverse iteration.
inline std::vector<double> slepian_window(std::size_t length, double nw) {
    const std::size_t   L = length;
    const double        c = std::cos(2.0 * std::numbers::pi * nw / static_cast<double>(L));
    std::vector<double> d(L), e(L, 0.0);  // e[j] couples j-1 and j
    for (std::size_t j = 0; j < L; ++j) {
        const double a = 0.5 * (static_cast<double>(L) - 1.0 - 2.0 * static_cast<double>(j));
        d[j]           = a * a * c;
        if (j > 0) {
            e[j] = 0.5 * static_cast<double>(j) * static_cast<double>(L - j);
        }
    }
    double lo = d[0], hi = d[0];
    for (std::size_t j = 0; j < L; ++j) {
        const double r = (j > 0 ? std::abs(e[j]) : 0.0) + (j + 1 < L ? std::abs(e[j + 1]) : 0.0);
        lo             = std::min(lo, d[j] - r);
        hi             = std::max(hi, d[j] + r);
    }
    // Number of eigenvalues below x.
    const auto count_below = [&](double x) {
        std::size_t count = 0;
        double      q     = d[0] - x;
        if (q < 0.0) {
            ++count;
        }
        for (std::size_t j = 1; j < L; ++j) {
            const double prev = q != 0.0 ? q : 1e-300;
            q                 = d[j] - x - e[j] * e[j] / prev;
            if (q < 0.0) {
                ++count;
            }
        }
        return count;
    };
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(std::abs(lo), std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_below(mid) >= L) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    const double lambda = hi + 1e-10 * std::max(1.0, std::abs(hi));

    // Inverse iteration with (T - lambda I); Thomas algorithm (the shifted matrix is negative
    // definite up to the one near-zero pivot, which is what amplifies the wanted vector).
    std::vector<double> v(L, 1.0), cp(L), dp(L);
    for (int it = 0; it < 4; ++it) {
        double b0 = d[0] - lambda;
        cp[0]     = (L > 1 ? e[1] : 0.0) / b0;
        dp[0]     = v[0] / b0;
        for (std::size_t j = 1; j < L; ++j) {
            const double denom = (d[j] - lambda) - e[j] * cp[j - 1];
            cp[j]              = (j + 1 < L ? e[j + 1] : 0.0) / denom;
            dp[j]              = (v[j] - e[j] * dp[j - 1]) / denom;
        }
        v[L - 1] = dp[L - 1];
        for (std::size_t j = L - 1; j-- > 0;) {
            v[j] = dp[j] - cp[j] * v[j + 1];
        }
        double norm = 0.0;
        for (double x : v) {
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : v) {
            x /= norm;
        }
    }
    double sum = 0.0;
    for (double x : v) {
        sum += x;
    }
    if (sum < 0.0) {
        for (double& x : v) {
            x = -x;
        }
    }
    return v;
}

inline std::vector<double> make_window(const WelchConfig& cfg) {
    return cfg.window == WindowKind::Hann ? hann_window(cfg.segment_length)
                                          : slepian_window(cfg.segment_length, cfg.slepian_nw);
}

namespace detail {

/// Sum over segments of X_a conj(X_b), X = sum_j w_j a_j e^{+i w_k t_j} (k = 0..L/2): if a = H * b
/// with h(w) = \int H(t) e^{+iwt} dt, the sum is h |X_b|^2. With b == a the result is |X_a|^2. Segments are split into a fixed number of chunks so that the summation
/// order, hence the result, does not depend on the worker count.
inline std::vector<cplx> welch_accumulate(std::span<const double> a, std::span<const double> b,
                                          const WelchConfig& cfg, const std::vector<double>& window,
                                          std::size_t segments) {
    const std::size_t L      = cfg.segment_length;
    const std::size_t bins   = L / 2 + 1;
    const std::size_t step   = cfg.step();
    const bool        same   = a.data() == b.data();
    const std::size_t chunks = std::min<std::size_t>(segments, 16);
    std::vector<std::vector<cplx>> partial(chunks, std::vector<cplx>(bins, 0.0));

    parallel_for(
        chunks,
        [&](std::size_t c) {
            RealFft             fft(L);
            std::vector<double> seg(L);
            std::vector<cplx>   xa(bins);
            const std::size_t   s0 = c * segments / chunks;
            const std::size_t   s1 = (c + 1) * segments / chunks;
            auto&               acc = partial[c];
            const auto          load = [&](std::span<const double> src, std::size_t start) {
                double mean = 0.0;
                if (cfg.detrend == Detrend::Mean) {
                    for (std::size_t j = 0; j < L; ++j) {
                        mean += src[start + j];
                    }
                    mean /= static_cast<double>(L);
                }
                for (std::size_t j = 0; j < L; ++j) {
                    seg[j] = (src[start + j] - mean) * window[j];
                }
            };
            for (std::size_t s = s0; s < s1; ++s) {
                const std::size_t start = s * step;
                load(a, start);
                // FFTW's forward kernel is e^{-i}; the e^{+i} transform of real data is its conjugate.
                const auto fa = fft.forward(seg);
                for (std::size_t k = 0; k < bins; ++k) {
                    xa[k] = std::conj(fa[k]);
                }
                if (same) {
                    for (std::size_t k = 0; k < bins; ++k) {
                        acc[k] += std::norm(xa[k]);
                    }
                } else {
                    load(b, start);
                    const auto fb = fft.forward(seg);
                    for (std::size_t k = 0; k < bins; ++k) {
                        acc[k] += xa[k] * fb[k];  // X_a conj(X_b), conj(X_b) being FFTW's output
                    }
                }
            }
        },
        1);

    std::vector<cplx> total(bins, 0.0);
    for (const auto& p : partial) {
        for (std::size_t k = 0; k < bins; ++k) {
            total[k] += p[k];
        }
    }
    return total;
}

inline std::size_t welch_checked_segments(std::size_t n, const WelchConfig& cfg) {
    cfg.validate();
    if (n < 2 * cfg.segment_length) {
        std::ostringstream os;
        os << "record of " << n << " samples is shorter than two segments of " << cfg.segment_length;
        throw ValidationError(os.str(), "estimation");
    }
    return welch_segment_count(n, cfg);
}

inline TabulatedSpectrum welch_table(const std::vector<cplx>& sums, double dt, const WelchConfig& cfg,
                                     const std::vector<double>& window, std::size_t segments, SpectrumKind kind) {
    double wsum2 = 0.0;
    for (double w : window) {
        wsum2 += w * w;
    }
    const double      scale = dt / (wsum2 * static_cast<double>(segments));
    const std::size_t L     = cfg.segment_length;
    TabulatedSpectrum t;
    t.kind = kind;
    // DC carries the detrended mean and is dropped; bins 1..L/2 form the trusted support.
    for (std::size_t k = 1; k <= L / 2; ++k) {
        t.omega.push_back(2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(L) * dt));
        t.values.push_back(kind == SpectrumKind::Auto ? cplx{sums[k].real() * scale, 0.0} : sums[k] * scale);
    }
    return t;
}

} // namespace detail

/// Averaged windowed periodogram, bins w_k = 2 pi k / (L dt), k = 1..L/2.
/// Values are not floored: bins can be validated with TabulatedSpectrum::validate or repaired
/// with floor_nonpositive.
inline TabulatedSpectrum welch_psd(const TimeSeries& y, const WelchConfig& cfg) {
    y.validate();
    const std::size_t segments = detail::welch_checked_segments(y.size(), cfg);
    const auto        window   = make_window(cfg);
    const auto        sums     = detail::welch_accumulate(y.samples, y.samples, cfg, window, segments);
    return detail::welch_table(sums, y.dt, cfg, window, segments, SpectrumKind::Auto);
}

/// Averaged cross-periodogram <conj(X) Y>; values at negative w follow from S(-w) = conj(S(w)).
inline TabulatedSpectrum welch_csd(const TimeSeries& x, const TimeSeries& y, const WelchConfig& cfg) {
    x.validate();
    y.validate();
    if (x.size() != y.size() || x.dt != y.dt) {
        throw ValidationError("cross-spectrum needs records of equal length and sample period", "estimation");
    }
    const std::size_t segments = detail::welch_checked_segments(x.size(), cfg);
    const auto        window   = make_window(cfg);
    const auto        sums     = detail::welch_accumulate(x.samples, y.samples, cfg, window, segments);
    return detail::welch_table(sums, x.dt, cfg, window, segments, SpectrumKind::Cross);
}

/// \int S dw / 2pi over the tabulated (two-sided) range by the rectangle rule on the bin grid.
inline double integrated_power(const TabulatedSpectrum& s) {
    if (s.omega.size() < 2) {
        return 0.0;
    }
    const double dw  = s.omega[1] - s.omega[0];
    double       sum = 0.0;
    for (const auto& v : s.values) {
        sum += v.real();
    }
    return 2.0 * sum * dw / (2.0 * std::numbers::pi);
}

// ---------------------------------------------------------------------------------------------
// Power-law fits

struct PowerLawFit {
    double      exponent         = 0.0;  // S ~ amplitude / |w|^exponent
    double      amplitude        = 0.0;
    double      exponent_stderr  = 0.0;
    double      log_amplitude_stderr = 0.0;
    std::size_t points           = 0;
};

/// Least-squares line in log|S| versus log w over the bins inside `band`.
inline PowerLawFit fit_power_law(const TabulatedSpectrum& s, Band band) {
    if (!(band.lo > 0.0) || band.hi < 10.0 * band.lo * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "power-law fit needs at least one decade, got [" << band.lo << ", " << band.hi << "]";
        throw ValidationError(os.str(), "estimation");
    }
    std::vector<double> x, y;
    for (std::size_t i = 0; i < s.omega.size(); ++i) {
        const double w = s.omega[i];
        const double m = std::abs(s.values[i]);
        if (w >= band.lo && w <= band.hi && m > 0.0) {
            x.push_back(std::log(w));
            y.push_back(std::log(m));
        }
    }
    if (x.size() < 3) {
        throw ValidationError("power-law fit band holds fewer than three usable bins", "estimation");
    }
    const auto  line = detail::fit_line(x, y);
    PowerLawFit f;
    f.exponent             = -line.slope;
    f.amplitude            = std::exp(line.intercept);
    f.exponent_stderr      = line.slope_stderr;
    f.log_amplitude_stderr = line.intercept_stderr;
    f.points               = x.size();
    return f;
}

struct AsymptoticFit {
    PowerLawFit low;   // S ~ B / |w|^beta as w -> 0
    PowerLawFit high;  // S ~ A / |w|^alpha as w -> inf

    void apply_to_y(Asymptotics& a) const {
        a.beta_y  = low.exponent;
        a.B_y     = low.amplitude;
        a.alpha_y = high.exponent;
        a.A_y     = high.amplitude;
    }
    void apply_to_x(Asymptotics& a) const {
        a.beta_x  = low.exponent;
        a.B_x_bar = low.amplitude;
        a.alpha_x = high.exponent;
        a.A_x_bar = high.amplitude;
    }
};

inline AsymptoticFit fit_asymptotics(const TabulatedSpectrum& s, Band low_band, Band high_band) {
    return {fit_power_law(s, low_band), fit_power_law(s, high_band)};
}

// ---------------------------------------------------------------------------------------------
// Log-binned averaging

struct LogBinned {
    std::vector<double>      omega;  // geometric centre of the occupied bins
    std::vector<double>      value;  // mean after outlier rejection
    std::vector<std::size_t> count;
};

/// Averages (w, v) pairs in `bins` logarithmic bins over [lo, hi]. Within a bin, points further than
/// `outlier_sigma` robust standard deviations (1.4826 MAD) from the median are dropped.
inline LogBinned log_bin_average(std::span<const double> omega, std::span<const double> values, double lo, double hi,
                                 std::size_t bins = 250, double outlier_sigma = 10.0) {
    if (omega.size() != values.size()) {
        throw std::invalid_argument("log_bin_average needs matching sizes");
    }
    if (!(lo > 0.0) || !(hi > lo) || bins == 0) {
        throw std::invalid_argument("log_bin_average needs 0 < lo < hi and bins > 0");
    }
    const double                     llo = std::log(lo), lhi = std::log(hi);
    std::vector<std::vector<double>> members(bins);
    for (std::size_t i = 0; i < omega.size(); ++i) {
        const double w = omega[i];
        if (!(w >= lo && w <= hi) || !std::isfinite(values[i])) {
            continue;
        }
        auto b = static_cast<std::size_t>((std::log(w) - llo) / (lhi - llo) * static_cast<double>(bins));
        members[std::min(b, bins - 1)].push_back(values[i]);
    }
    const auto median = [](std::vector<double> v) {
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        double m = *mid;
        if (v.size() % 2 == 0) {
            m = 0.5 * (m + *std::max_element(v.begin(), mid));
        }
        return m;
    };
    LogBinned out;
    for (std::size_t b = 0; b < bins; ++b) {
        auto& m = members[b];
        if (m.empty()) {
            continue;
        }
        const double        med = median(m);
        std::vector<double> dev(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            dev[i] = std::abs(m[i] - med);
        }
        const double sigma = 1.4826 * median(dev);
        double       sum   = 0.0;
        std::size_t  kept  = 0;
        for (double v : m) {
            if (std::abs(v - med) <= outlier_sigma * sigma) {
                sum += v;
                ++kept;
            }
        }
        const double centre = std::exp(llo + (static_cast<double>(b) + 0.5) / static_cast<double>(bins) * (lhi - llo));
        out.omega.push_back(centre);
        out.value.push_back(sum / static_cast<double>(kept));
        out.count.push_back(kept);
    }
    return out;
}

/// Smooths a table by plain averaging in `bins` logarithmic bins over its range; each occupied bin
/// becomes one point at the geometric mean of its members' frequencies. Bins holding a single
/// point pass it through unchanged.
inline TabulatedSpectrum log_bin_spectrum(const TabulatedSpectrum& s, std::size_t bins = 250) {
    s.validate();
    if (bins == 0 || s.omega.size() < 2) {
        return s;
    }
    const double llo = std::log(s.omega.front());
    const double lhi = std::log(s.omega.back());
    TabulatedSpectrum out{s.kind, {}, {}};
    std::size_t       i = 0;
    while (i < s.omega.size()) {
        const auto bin_of = [&](double w) {
            const auto b = static_cast<std::size_t>((std::log(w) - llo) / (lhi - llo) * static_cast<double>(bins));
            return std::min(b, bins - 1);
        };
        const std::size_t b    = bin_of(s.omega[i]);
        double            lw   = 0.0;
        cplx              sum  = 0.0;
        std::size_t       n    = 0;
        for (; i < s.omega.size() && bin_of(s.omega[i]) == b; ++i, ++n) {
            lw += std::log(s.omega[i]);
            sum += s.values[i];
        }
        out.omega.push_back(std::exp(lw / static_cast<double>(n)));
        out.values.push_back(sum / static_cast<double>(n));
    }
    return out;
}

} // namespace sfw

#endif // SFW_ESTIMATION_HPP
