// Dense stochastic linear algebra: square matrices, probability vectors,
// distances and ergodic coefficients. Everything is a pure function of its
// inputs and safe to call concurrently on shared read-only data.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qlump/error.hpp"

namespace qlump {

using Vec = std::vector<double>;

// Square real matrix, row-major. Row-stochasticity is a property checked
// where required (validate_stochastic), not a structural guarantee.
struct Matrix {
    std::size_t dim = 0;
    std::vector<double> data;

    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : dim(n), data(n * n, fill) {}

    double operator()(std::size_t i, std::size_t j) const { return data[i * dim + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * dim + j]; }

    const double* row(std::size_t i) const { return data.data() + i * dim; }
    double* row(std::size_t i) { return data.data() + i * dim; }

    bool operator==(const Matrix&) const = default;

    static Matrix identity(std::size_t n) {
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    // Builds from nested rows; rejects ragged or non-square input.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        const std::size_t n = rows.size();
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != n) {
                std::ostringstream os;
                os << "matrix is not square: row " << i << " has " << rows[i].size()
                   << " entries, expected " << n;
                throw ShapeError(os.str());
            }
            std::copy(rows[i].begin(), rows[i].end(), m.row(i));
        }
        return m;
    }
};

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.dim != b.dim)
        throw ShapeError("matrix product dimension mismatch: " + std::to_string(a.dim) +
                         " vs " + std::to_string(b.dim));
    Matrix c(a.dim);
    for (std::size_t i = 0; i < a.dim; ++i) {
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.dim; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < a.dim; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
    if (a.dim != b.dim)
        throw ShapeError("matrix difference dimension mismatch: " + std::to_string(a.dim) +
                         " vs " + std::to_string(b.dim));
    Matrix c(a.dim);
    for (std::size_t i = 0; i < a.data.size(); ++i) c.data[i] = a.data[i] - b.data[i];
    return c;
}

// ---------------------------------------------------------------------------
// Vector helpers

inline double l1_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

inline double l1_distance(const Vec& p, const Vec& q) {
    if (p.size() != q.size())
        throw ShapeError("vector dimension mismatch: " + std::to_string(p.size()) + " vs " +
                         std::to_string(q.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return s;
}

// Total variation distance: half the L1 distance between two distributions.
inline double total_variation(const Vec& p, const Vec& q) {
    return 0.5 * l1_distance(p, q);
}

// Checks the probability-vector invariants: entries >= -tol, sum within tol of 1.
inline bool is_distribution(const Vec& v, double tol = 1e-9) {
    double s = 0.0;
    for (double x : v) {
        if (!std::isfinite(x) || x < -tol) return false;
        s += x;
    }
    return std::abs(s - 1.0) <= tol;
}

// ---------------------------------------------------------------------------
// Stochasticity validation

struct StochasticViolation {
    std::size_t row = 0;
    std::string what;
};

struct StochasticCheck {
    bool ok = true;
    std::vector<StochasticViolation> violations;
    explicit operator bool() const { return ok; }
};

// ok iff every entry >= -tol and every row sum lies within tol of 1.
inline StochasticCheck validate_stochastic(const Matrix& m, double tol = 1e-9) {
    StochasticCheck check;
    for (std::size_t i = 0; i < m.dim; ++i) {
        const double* ri = m.row(i);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.dim; ++j) {
            const double v = ri[j];
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "entry (" << i << "," << j << ") is not finite";
                check.violations.push_back({i, os.str()});
            } else if (v < -tol) {
                std::ostringstream os;
                os << "entry (" << i << "," << j << ") is negative: " << v;
                check.violations.push_back({i, os.str()});
            }
            sum += v;
        }
        if (!(std::abs(sum - 1.0) <= tol)) {
            std::ostringstream os;
            os << "row " << i << " sums to " << sum;
            check.violations.push_back({i, os.str()});
        }
    }
    check.ok = check.violations.empty();
    return check;
}

// ---------------------------------------------------------------------------
// Core operations

// p(x, A): one-step probability of moving from state x into the state set A.
inline double transition_mass(const Matrix& p, std::size_t x,
                              const std::vector<std::size_t>& targets) {
    if (x >= p.dim) throw IndexError("state index " + std::to_string(x) + " out of range");
    const double* row = p.row(x);
    double s = 0.0;
    for (std::size_t y : targets) {
        if (y >= p.dim) throw IndexError("target state " + std::to_string(y) + " out of range");
        s += row[y];
    }
    return s;
}

// One-step forward propagation v -> vP.
inline Vec step_distribution(const Vec& v, const Matrix& p) {
    if (v.size() != p.dim)
        throw ShapeError("distribution has " + std::to_string(v.size()) +
                         " entries, matrix dimension is " + std::to_string(p.dim));
    Vec out(p.dim, 0.0);
    for (std::size_t i = 0; i < p.dim; ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        const double* row = p.row(i);
        for (std::size_t j = 0; j < p.dim; ++j) out[j] += vi * row[j];
    }
    return out;
}

// P^k by repeated squaring; k = 0 yields the identity.
inline Matrix k_step_matrix(const Matrix& p, unsigned long k) {
    Matrix result = Matrix::identity(p.dim);
    Matrix base = p;
    while (k > 0) {
        if (k & 1UL) result = multiply(result, base);
        k >>= 1UL;
        if (k > 0) base = multiply(base, base);
    }
    return result;
}

// rho(M) = 1/2 max_{i,j} sum_k |m_ik - m_jk|: the largest total variation
// distance between two rows when the rows are distributions. Exact pairwise
// scan; the matrices this is needed for are small.
inline double ergodic_coefficient(const Matrix& m) {
    if (m.dim < 2) return 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < m.dim; ++i) {
        const double* ri = m.row(i);
        for (std::size_t j = i + 1; j < m.dim; ++j) {
            const double* rj = m.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < m.dim; ++k) s += std::abs(ri[k] - rj[k]);
            worst = std::max(worst, s);
        }
    }
    return 0.5 * worst;
}

// Operator norm induced by the L1 vector norm on row vectors:
// max over rows of the absolute row sum.
inline double induced_row_norm(const Matrix& m) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m.dim; ++i) {
        const double* ri = m.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < m.dim; ++j) s += std::abs(ri[j]);
        worst = std::max(worst, s);
    }
    return worst;
}

}  // namespace qlump
