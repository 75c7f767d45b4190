#ifndef SFW_TOEPLITZ_HPP
#define SFW_TOEPLITZ_HPP

// Truncated symmetric Toeplitz system T h = s with T_jk = t_|j-k|, real t and complex s.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "sfw/errors.hpp"

namespace sfw {

using cplx = std::complex<double>;

struct ToeplitzSystem {
    std::vector<double> t;
    std::vector<cplx>   s;

    std::size_t n() const noexcept { return t.size(); }

    /// Leading n x n subsystem.
    ToeplitzSystem truncated(std::size_t n) const {
        if (n > t.size() || n > s.size()) {
            throw std::invalid_argument("truncation exceeds system size");
        }
        return {{t.begin(), t.begin() + static_cast<std::ptrdiff_t>(n)},
                {s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n)}};
    }
};

enum class ToeplitzSolver { Cholesky, Levinson };

struct SolveOptions {
    ToeplitzSolver method = ToeplitzSolver::Cholesky;
    bool           jitter = false;  // adds 1e-12 t_0 to the diagonal; exploratory use only
};

inline Eigen::MatrixXd dense_matrix(std::span<const double> t) {
    const auto      n = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            m(i, j) = t[static_cast<std::size_t>(std::abs(i - j))];
        }
    }
    return m;
}

/// T x for the symmetric Toeplitz matrix generated by t.
template<typename T>
std::vector<T> toeplitz_multiply(std::span<const double> t, std::span<const T> x) {
    const std::size_t n = t.size();
    std::vector<T>    y(n, T{});
    for (std::size_t i = 0; i < n; ++i) {
        T acc{};
        for (std::size_t j = 0; j < n; ++j) {
            acc += t[i > j ? i - j : j - i] * x[j];
        }
        y[i] = acc;
    }
    return y;
}

/// Levinson recursion for symmetric positive-definite Toeplitz T x = b. O(n^2).
/// Throws NotPositiveDefinite when a prediction-error power becomes nonpositive.
template<typename T>
std::vector<T> levinson_solve(std::span<const double> t, std::span<const T> b) {
    const std::size_t n = t.size();
    if (n == 0) {
        return {};
    }
    if (!(t[0] > 0.0)) {
        throw NotPositiveDefinite("Toeplitz generator has t_0 <= 0", "toeplitz");
    }
    std::vector<double> a{1.0};  // forward predictor, a[0] = 1
    std::vector<T>      x{b[0] / t[0]};
    double              err = t[0];
    for (std::size_t m = 1; m < n; ++m) {
        double k = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            k += a[j] * t[m - j];
        }
        k = -k / err;
        std::vector<double> next(m + 1, 0.0);
        for (std::size_t j = 0; j <= m; ++j) {
            const double aj  = j < m ? a[j] : 0.0;
            const double amj = (m - j) < m ? a[m - j] : 0.0;
            next[j]          = aj + k * amj;
        }
        a = std::move(next);
        err *= (1.0 - k * k);
        if (!(err > 0.0)) {
            throw NotPositiveDefinite("Levinson recursion lost positivity", "toeplitz");
        }
        // Extend the solution: x_{m+1} = [x_m; 0] + mu * reverse(a).
        T r{};
        for (std::size_t j = 0; j < m; ++j) {
            r += t[m - j] * x[j];
        }
        const T mu = (b[m] - r) / err;
        x.push_back(T{});
        for (std::size_t j = 0; j <= m; ++j) {
            x[j] += mu * a[m - j];
        }
    }
    return x;
}

/// Solves T h = s. The real and imaginary parts of s share one factorization.
inline std::vector<cplx> solve(const ToeplitzSystem& sys, const SolveOptions& opts = {}) {
    const std::size_t n = sys.n();
    if (n == 0 || sys.s.size() != n) {
        throw std::invalid_argument("Toeplitz system needs matching nonempty t and s");
    }
    std::vector<double> t = sys.t;
    if (opts.jitter) {
        t[0] += 1e-12 * t[0];
    }
    if (opts.method == ToeplitzSolver::Levinson) {
        return levinson_solve<cplx>(t, sys.s);
    }
    const Eigen::MatrixXd                 m = dense_matrix(t);
    const Eigen::LLT<Eigen::MatrixXd>     llt(m);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("Cholesky factorization failed: Toeplitz matrix is not positive definite",
                                  "toeplitz");
    }
    Eigen::MatrixXd rhs(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
        rhs(static_cast<Eigen::Index>(i), 0) = sys.s[i].real();
        rhs(static_cast<Eigen::Index>(i), 1) = sys.s[i].imag();
    }
    const Eigen::MatrixXd x = llt.solve(rhs);
    std::vector<cplx>     h(n);
    for (std::size_t i = 0; i < n; ++i) {
        h[i] = {x(static_cast<Eigen::Index>(i), 0), x(static_cast<Eigen::Index>(i), 1)};
    }
    return h;
}

/// ||T h - s||_2.
inline double residual_norm(const ToeplitzSystem& sys, std::span<const cplx> h) {
    const auto th  = toeplitz_multiply<cplx>(sys.t, h);
    double     acc = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i) {
        acc += std::norm(th[i] - sys.s[i]);
    }
    return std::sqrt(acc);
}

inline double norm2(std::span<const cplx> v) {
    double acc = 0.0;
    for (const auto& x : v) {
        acc += std::norm(x);
    }
    return std::sqrt(acc);
}

struct EigenExtremes {
    double min = 0.0;
    double max = 0.0;
};

inline EigenExtremes eigen_extremes(std::span<const double> t) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_matrix(t), Eigen::EigenvaluesOnly);
    const auto&                                         ev = es.eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
}

struct ConditionReport {
    double                       kappa_upper   = 0.0;  // sup S_yy' / inf S_yy'
    double                       kappa_lower   = 1.0;  // 1 + v / t_0
    double                       v             = 0.0;
    double                       eig_min_bound = 0.0;
    double                       eig_max_bound = 0.0;
    std::optional<EigenExtremes> measured;

    std::optional<double> measured_kappa() const {
        if (!measured) {
            return std::nullopt;
        }
        return measured->max / measured->min;
    }
};

/// v^2 = 2 sum_{k=1}^{n-1} t_k^2 (n - k) / n.
inline double spread_statistic(std::span<const double> t) {
    const std::size_t n   = t.size();
    double            acc = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        acc += t[k] * t[k] * static_cast<double>(n - k);
    }
    return std::sqrt(2.0 * acc / static_cast<double>(n));
}

inline constexpr std::size_t dense_eigen_limit = 512;

inline ConditionReport condition_report(const ToeplitzSystem& sys, double inf_S, double sup_S) {
    if (sys.n() < 1) {
        throw std::invalid_argument("condition report needs a nonempty system");
    }
    ConditionReport r;
    r.eig_min_bound = inf_S;
    r.eig_max_bound = sup_S;
    r.kappa_upper   = inf_S > 0.0 ? sup_S / inf_S : std::numeric_limits<double>::infinity();
    r.v             = spread_statistic(sys.t);
    r.kappa_lower   = 1.0 + r.v / sys.t[0];
    if (sys.n() <= dense_eigen_limit) {
        r.measured = eigen_extremes(sys.t);
    }
    return r;
}

struct SpectrumBoundsReport {
    bool   ok      = false;
    double eig_min = 0.0;
    double eig_max = 0.0;
    double tol     = 0.0;
};

/// True iff every eigenvalue of T lies in [inf - tol, sup + tol], tol = 1e-8 sup.
inline SpectrumBoundsReport spectrum_bounds_check(const ToeplitzSystem& sys, double inf_S, double sup_S) {
    if (sys.n() > dense_eigen_limit) {
        throw std::invalid_argument("spectrum bounds check is limited to n <= 512");
    }
    const auto e = eigen_extremes(sys.t);
    SpectrumBoundsReport r;
    r.eig_min = e.min;
    r.eig_max = e.max;
    r.tol     = 1e-8 * sup_S;
    r.ok      = e.min >= inf_S - r.tol && e.max <= sup_S + r.tol;
    return r;
}

} // namespace sfw

#endif // SFW_TOEPLITZ_HPP
