#ifndef SFW_DETAIL_FFT_HPP
#define SFW_DETAIL_FFT_HPP

#include <algorithm>
#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace sfw::detail {

// FFTW planning is not thread safe; execution of distinct plans is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

enum class FftDirection { Forward = FFTW_FORWARD, Backward = FFTW_BACKWARD };

/// Unnormalized complex DFT.
/// Forward:  X_k = sum_j x_j e^{-2 pi i jk/N};  Backward: x_j = sum_k X_k e^{+2 pi i jk/N}.
inline std::vector<std::complex<double>> dft(std::span<const std::complex<double>> in, FftDirection dir) {
    const auto n = in.size();
    std::vector<std::complex<double>> out(n);
    if (n == 0) {
        return out;
    }
    std::vector<std::complex<double>> buf(in.begin(), in.end());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(buf.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), static_cast<int>(dir), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

/// Reusable real-to-complex / complex-to-real plan pair of fixed size, used by the
/// block convolution and the Welch estimator where the same length is transformed many times.
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n), real_(n), spec_(n / 2 + 1) {
        std::lock_guard lock(fftw_planner_mutex());
        fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_.data(), reinterpret_cast<fftw_complex*>(spec_.data()),
                                    FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(spec_.data()), real_.data(),
                                    FFTW_ESTIMATE);
    }
    RealFft(const RealFft&)            = delete;
    RealFft& operator=(const RealFft&) = delete;
    ~RealFft() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }

    std::size_t size() const noexcept { return n_; }

    /// Forward transform of `x` (zero padded to size()). Returns n/2+1 bins.
    std::span<const std::complex<double>> forward(std::span<const double> x) {
        std::fill(real_.begin(), real_.end(), 0.0);
        std::copy_n(x.begin(), std::min(x.size(), n_), real_.begin());
        fftw_execute(fwd_);
        return spec_;
    }

    /// Inverse (unnormalized) transform of n/2+1 bins.
    std::span<const double> inverse(std::span<const std::complex<double>> bins) {
        std::copy_n(bins.begin(), spec_.size(), spec_.begin());
        fftw_execute(inv_);
        return real_;
    }

private:
    std::size_t                       n_;
    std::vector<double>               real_;
    std::vector<std::complex<double>> spec_;
    fftw_plan                         fwd_{};
    fftw_plan                         inv_{};
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) {
        p <<= 1;
    }
    return p;
}

} // namespace sfw::detail

#endif // SFW_DETAIL_FFT_HPP
