#ifndef SFW_SIMULATE_HPP
#define SFW_SIMULATE_HPP

// Gaussian records with prescribed spectra by spectral shaping: complex Gaussian DFT coefficients
// scaled by sqrt(S), Hermitian symmetry, one inverse FFT. The record is synthesised at twice the
// requested length and the middle half kept, which suppresses the periodic wrap-around.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "sfw/detail/fft.hpp"
#include "sfw/detail/parallel.hpp"
#include "sfw/errors.hpp"
#include "sfw/estimation.hpp"
#include "sfw/spectral_model.hpp"

namespace sfw {

struct SimSpec {
    double           duration    = 0.0;  // s
    double           sample_rate = 0.0;  // Hz
    SpectralFunction signal;
    SpectralFunction noise;
    std::uint64_t    seed = 0;

    std::size_t samples() const { return static_cast<std::size_t>(std::llround(duration * sample_rate)); }

    void validate() const {
        if (!(duration > 0.0) || !(sample_rate > 0.0)) {
            throw ValidationError("simulation needs positive duration and sample rate", "simulate");
        }
        if (samples() < 1024) {
            throw ValidationError("simulation needs at least 1024 samples (duration * sample_rate)", "simulate");
        }
    }
};

struct SimResult {
    TimeSeries x;  // signal
    TimeSeries n;  // noise
    TimeSeries y;  // x + n
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform in (0, 1) from the counter (seed, stream, index, lane); independent of evaluation order.
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, std::uint64_t lane) {
    const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL)) ^
                                         (index * 4 + lane));
    return (static_cast<double>(key >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard complex Gaussian pair (re, im) ~ N(0, 1) each, Box-Muller on two counter uniforms.
inline std::pair<double, double> counter_gaussian_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const double u1 = counter_uniform(seed, stream, index, 0);
    const double u2 = counter_uniform(seed, stream, index, 1);
    const double r  = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(2.0 * std::numbers::pi * u2), r * std::sin(2.0 * std::numbers::pi * u2)};
}

/// One record of n samples at spacing dt with two-sided density S (rad/s convention).
inline std::vector<double> shape_record(const SpectralFunction& S, std::size_t n, double dt, std::uint64_t seed,
                                        std::uint64_t stream) {
    const std::size_t m    = 2 * n;
    const std::size_t bins = m / 2 + 1;
    const double      dw   = 2.0 * std::numbers::pi / (static_cast<double>(m) * dt);
    // Var z = sum_k E|c_k|^2 over all M bins approximates \int S dw / 2pi when E|c_k|^2 = S(w_k) / (M dt).
    const double      norm = 1.0 / (static_cast<double>(m) * dt);

    std::vector<double> density(bins);
    parallel_for(bins, [&](std::size_t k) {
        // DC takes the first nonzero bin: the record length caps the lowest resolvable frequency.
        const double w = dw * static_cast<double>(k == 0 ? 1 : k);
        density[k]     = S.real(w);
    });
    for (std::size_t k = 0; k < bins; ++k) {
        if (!std::isfinite(density[k]) || density[k] < 0.0) {
            std::ostringstream os;
            os << "spectrum is undefined or negative at w = " << dw * static_cast<double>(k) << " rad/s";
            throw ValidationError(os.str(), "simulate");
        }
    }

    std::vector<cplx> c(bins);
    parallel_for(bins, [&](std::size_t k) {
        const double sd      = std::sqrt(density[k] * norm);
        const auto [gr, gi]  = counter_gaussian_pair(seed, stream, k);
        if (k == 0 || k == m / 2) {
            c[k] = {sd * gr, 0.0};  // real bins carry the full variance in one component
        } else {
            c[k] = {sd * gr * std::numbers::sqrt2 / 2.0, sd * gi * std::numbers::sqrt2 / 2.0};
        }
    });

    // z_j = sum_k c_k e^{2 pi i jk/M} over all M bins with c_{-k} = conj(c_k): the c2r transform.
    RealFft             fft(m);
    const auto          full = fft.inverse(c);
    const std::size_t   off  = m / 4;
    return {full.begin() + static_cast<std::ptrdiff_t>(off), full.begin() + static_cast<std::ptrdiff_t>(off + n)};
}

} // namespace detail

/// Independent x and n with spectra spec.signal and spec.noise; y = x + n. Bit-reproducible for a
/// fixed spec, irrespective of the worker count.
inline SimResult synthesize(const SimSpec& spec) {
    spec.validate();
    const std::size_t n  = spec.samples();
    const double      dt = 1.0 / spec.sample_rate;
    SimResult         r;
    r.x = {dt, detail::shape_record(spec.signal, n, dt, spec.seed, 0)};
    r.n = {dt, detail::shape_record(spec.noise, n, dt, spec.seed, 1)};
    r.y = {dt, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        r.y.samples[i] = r.x.samples[i] + r.n.samples[i];
    }
    return r;
}

struct SimBlock {
    std::size_t         start = 0;  // index of the first sample in the record
    std::vector<double> x, n, y;
};

/// Blocked re-emission of a synthesised record; the concatenated blocks equal synthesize(spec).
class SimStream {
public:
    SimStream(const SimSpec& spec, std::size_t block) : record_(synthesize(spec)), block_(block) {
        if (block == 0) {
            throw ValidationError("stream block size must be positive", "simulate");
        }
    }

    double dt() const noexcept { return record_.y.dt; }

    std::optional<SimBlock> next() {
        const std::size_t total = record_.y.size();
        if (pos_ >= total) {
            return std::nullopt;
        }
        const std::size_t end = std::min(total, pos_ + block_);
        const auto        cut = [&](const TimeSeries& s) {
            return std::vector<double>(s.samples.begin() + static_cast<std::ptrdiff_t>(pos_),
                                       s.samples.begin() + static_cast<std::ptrdiff_t>(end));
        };
        SimBlock b{pos_, cut(record_.x), cut(record_.n), cut(record_.y)};
        pos_ = end;
        return b;
    }

private:
    SimResult   record_;
    std::size_t block_;
    std::size_t pos_ = 0;
};

} // namespace sfw

#endif // SFW_SIMULATE_HPP
