// Stationary distributions and the second-largest-eigenvalue-modulus estimate.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "qlump/error.hpp"
#include "qlump/matrix.hpp"
#include "qlump/rng.hpp"

namespace qlump {

enum class StationaryMethod { automatic, direct, power };

namespace detail {

inline void normalize_l1_inplace(Vec& v) {
    double s = 0.0;
    for (double x : v) s += x;
    if (!(s > 0.0)) throw DegeneracyError("distribution mass vanished during normalization");
    for (double& x : v) x /= s;
}

// Solves pi P = pi, sum(pi) = 1 by Gaussian elimination with partial pivoting
// on the transposed balance system; one balance equation is replaced by the
// normalization constraint.
inline Vec solve_balance_system(const Matrix& p) {
    const std::size_t n = p.dim;
    std::vector<double> a(n * n, 0.0);
    Vec b(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a[i * n + j] = p(j, i) - (i == j ? 1.0 : 0.0);
    for (std::size_t j = 0; j < n; ++j) a[(n - 1) * n + j] = 1.0;
    b[n - 1] = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(a[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best < 1e-12)
            throw DegeneracyError(
                "balance system is singular beyond tolerance (reducible or otherwise "
                "degenerate chain); pivot " +
                std::to_string(best) + " at column " + std::to_string(col));
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[pivot * n + j], a[col * n + j]);
            std::swap(b[pivot], b[col]);
        }
        const double d = a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / d;
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
            b[r] -= f * b[col];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
        x[i] = s / a[i * n + i];
    }
    return x;
}

// y = P x (column action), used by the deflated power iteration.
inline Vec right_apply(const Matrix& p, const Vec& x) {
    Vec y(p.dim, 0.0);
    for (std::size_t i = 0; i < p.dim; ++i) {
        const double* row = p.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < p.dim; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

}  // namespace detail

// Stationary distribution pi with ||pi P - pi||_1 <= tol on return.
// The caller asserts irreducibility and aperiodicity; degenerate inputs
// surface as DegeneracyError (direct) or ConvergenceError (power).
// "automatic" uses the direct solve up to n = 2048 and power iteration above.
inline Vec stationary_distribution(const Matrix& p,
                                   StationaryMethod method = StationaryMethod::automatic,
                                   double tol = 1e-12, std::size_t max_iter = 100000) {
    const std::size_t n = p.dim;
    if (n == 0) throw ShapeError("empty transition matrix");
    if (method == StationaryMethod::automatic)
        method = n <= 2048 ? StationaryMethod::direct : StationaryMethod::power;

    if (method == StationaryMethod::direct) {
        Vec pi = detail::solve_balance_system(p);
        for (double& v : pi) {
            if (v < 0.0) {
                if (v < -1e-9)
                    throw DegeneracyError("balance solution has negative mass " +
                                          std::to_string(v) + " (degenerate chain)");
                v = 0.0;
            }
        }
        detail::normalize_l1_inplace(pi);
        // Polish with forward steps while they shrink the fixed-point residual;
        // keeps the solve consistent with propagation arithmetic.
        Vec best = pi;
        double best_res = l1_distance(step_distribution(pi, p), pi);
        Vec cur = pi;
        for (int it = 0; it < 12 && best_res > 0.0; ++it) {
            cur = step_distribution(cur, p);
            detail::normalize_l1_inplace(cur);
            const double res = l1_distance(step_distribution(cur, p), cur);
            if (res < best_res) {
                best = cur;
                best_res = res;
            } else {
                break;
            }
        }
        if (best_res > tol) {
            std::ostringstream os;
            os << "direct stationary solve left residual " << best_res << " > " << tol
               << " (degenerate chain)";
            throw DegeneracyError(os.str());
        }
        return best;
    }

    // Power iteration from the uniform distribution.
    Vec v(n, 1.0 / static_cast<double>(n));
    double last_gap = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        Vec w = step_distribution(v, p);
        detail::normalize_l1_inplace(w);
        last_gap = l1_distance(w, v);
        if (last_gap <= 0.5 * tol) {
            const double res = l1_distance(step_distribution(w, p), w);
            if (res <= tol) return w;
        }
        v = std::move(w);
    }
    const double res = l1_distance(step_distribution(v, p), v);
    throw ConvergenceError("power iteration did not reach tolerance " + std::to_string(tol) +
                               " within " + std::to_string(max_iter) +
                               " iterations (periodic or slowly mixing chain?)",
                           res);
}

struct SlemEstimate {
    double value = 0.0;
    bool converged = true;  // false when the growth ratios never stabilized
    std::size_t iterations = 0;
};

// Estimates the second largest eigenvalue modulus by power iteration on the
// deflated operator P - 1 pi^T (rank-one removal of the Perron component).
// The returned value is clamped at the ergodic coefficient, which is a
// certified upper bound on the modulus; a dominant complex pair makes the
// iteration oscillate, reported through `converged` rather than an exception.
inline SlemEstimate slem_estimate(const Matrix& p, double tol = 1e-10,
                                  std::size_t max_iter = 50000) {
    const std::size_t n = p.dim;
    if (n <= 1) return {0.0, true, 0};
    const Vec pi = stationary_distribution(p);
    const double rho = ergodic_coefficient(p);

    SeededRng rng(0x51e3a11ce5ULL);
    Vec x(n);
    for (double& v : x) v = rng.uniform01() - 0.5;
    {
        double norm = 0.0;
        for (double v : x) norm += v * v;
        norm = std::sqrt(norm);
        if (norm == 0.0) x[0] = 1.0, norm = 1.0;
        for (double& v : x) v /= norm;
    }

    constexpr std::size_t kWindow = 1024;
    std::vector<double> log_ratios;
    log_ratios.reserve(kWindow);
    std::size_t ring_pos = 0;
    double prev_ratio = -1.0;
    std::size_t stable = 0;
    SlemEstimate est;

    for (std::size_t k = 0; k < max_iter; ++k) {
        Vec y = detail::right_apply(p, x);
        double shift = 0.0;
        for (std::size_t i = 0; i < n; ++i) shift += pi[i] * x[i];
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] -= shift;
            norm += y[i] * y[i];
        }
        norm = std::sqrt(norm);
        est.iterations = k + 1;
        if (norm < 1e-150) {
            // Operator annihilated the iterate: no second mode.
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        const double ratio = norm;
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;

        if (log_ratios.size() < kWindow) {
            log_ratios.push_back(std::log(ratio));
        } else {
            log_ratios[ring_pos] = std::log(ratio);
            ring_pos = (ring_pos + 1) % kWindow;
        }

        if (prev_ratio >= 0.0 &&
            std::abs(ratio - prev_ratio) <= std::max(1e-13, tol * std::max(ratio, 1.0)))
            ++stable;
        else
            stable = 0;
        prev_ratio = ratio;
        if (stable >= 40 && k >= 50) {
            est.value = ratio;
            est.converged = true;
            est.value = std::min(est.value, rho);
            return est;
        }
    }

    // Oscillating growth (dominant complex pair or tied moduli): report the
    // geometric mean over the trailing window with the quality flag lowered.
    double mean = 0.0;
    for (double lr : log_ratios) mean += lr;
    mean /= static_cast<double>(log_ratios.size());
    est.value = std::min(std::exp(mean), rho);
    est.converged = false;
    return est;
}

}  // namespace qlump
