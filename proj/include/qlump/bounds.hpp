// Closed-form convergence bounds for aggregated chains, plus the stochastic
// product-contraction inequality used as a test oracle.
//
// Norm bookkeeping: the aggregate-deviation bound controls the L1 sum over
// blocks, sum_i |pi_t(A_i) - pi(A_i)|; the lumped and two-block bounds control
// a total variation distance, which is half that sum. Every curve carries an
// explicit norm tag so the factor of two can never be dropped silently.
#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "qlump/error.hpp"
#include "qlump/matrix.hpp"

namespace qlump {

enum class NormTag { none, l1_sum, tv };

inline const char* norm_name(NormTag tag) {
    switch (tag) {
        case NormTag::l1_sum: return "l1_sum";
        case NormTag::tv: return "tv";
        default: return "none";
    }
}

// Parameters of the aggregate-deviation bound: rho upper-bounds the ergodic
// coefficient of the lower matrix, epsilon is the block-mass spread, blocks
// is the partition size. Valid iff rho + epsilon*m/2 < 1.
struct BoundParams {
    double rho = 0.0;
    double epsilon = 0.0;
    std::size_t blocks = 1;

    double contraction() const { return rho + epsilon * static_cast<double>(blocks) / 2.0; }
    bool valid() const {
        return rho >= 0.0 && epsilon >= 0.0 && blocks >= 1 && contraction() < 1.0;
    }
};

// sum_{k=0}^{t-1} r^k. Closed form except near r = 1, where the difference
// quotient cancels catastrophically and direct summation is used instead.
inline double geometric_sum(double r, long t) {
    if (t <= 0) return 0.0;
    if (std::abs(1.0 - r) < 1e-9) {
        double s = 0.0, pk = 1.0;
        for (long k = 0; k < t; ++k) {
            s += pk;
            pk *= r;
        }
        return s;
    }
    return (1.0 - std::pow(r, static_cast<double>(t))) / (1.0 - r);
}

namespace detail {

inline void require_valid(const BoundParams& p) {
    if (!p.valid()) {
        std::ostringstream os;
        os << "bound parameters invalid: rho + epsilon*m/2 = " << p.contraction()
           << " must be < 1 with rho, epsilon >= 0 (rho = " << p.rho << ", epsilon = " << p.epsilon
           << ", m = " << p.blocks << ")";
        throw DomainError(os.str());
    }
}

}  // namespace detail

// Bound on sum_i |pi_t(A_i) - pi(A_i)| for an eps-lumpable chain after t steps:
//   2 (rho + eps*m/2)^t + eps*m * (1 - (rho + eps*m/2)^t) / (1 - rho - eps*m/2).
// With eps = 0 it reduces to 2 rho^t; as t grows it approaches
// eps*m / (1 - rho - eps*m/2).
inline double aggregate_deviation_bound(const BoundParams& p, long t) {
    if (t < 1) throw DomainError("step count must be >= 1, got " + std::to_string(t));
    detail::require_valid(p);
    const double r = p.contraction();
    return 2.0 * std::pow(r, static_cast<double>(t)) +
           p.epsilon * static_cast<double>(p.blocks) * geometric_sum(r, t);
}

inline double aggregate_deviation_limit(const BoundParams& p) {
    detail::require_valid(p);
    return p.epsilon * static_cast<double>(p.blocks) / (1.0 - p.contraction());
}

// For exactly lumpable chains: D_TV(pi~_t, pi~) <= rho^t with rho the ergodic
// coefficient of the lumped matrix.
inline double lumped_tv_bound(double rho, long t) {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw DomainError("rho must lie in [0,1], got " + std::to_string(rho));
    if (t < 0) throw DomainError("step count must be >= 0, got " + std::to_string(t));
    return std::pow(rho, static_cast<double>(t));
}

namespace detail {

// Two-block non-degeneracy conditions: p0 + eps < 1, q0 + eps < 1,
// 0 < p0 + q0 < 1, all parameters nonnegative.
inline void require_two_block_params(double p0, double q0, double eps) {
    std::ostringstream os;
    if (!(p0 >= 0.0 && q0 >= 0.0 && eps >= 0.0)) {
        os << "p0, q0, epsilon must be nonnegative (p0 = " << p0 << ", q0 = " << q0
           << ", epsilon = " << eps << ")";
        throw DomainError(os.str());
    }
    if (!(p0 + eps < 1.0)) {
        os << "degenerate two-block parameters: p0 + epsilon = " << p0 + eps << " must be < 1";
        throw DomainError(os.str());
    }
    if (!(q0 + eps < 1.0)) {
        os << "degenerate two-block parameters: q0 + epsilon = " << q0 + eps << " must be < 1";
        throw DomainError(os.str());
    }
    if (!(p0 + q0 > 0.0)) {
        os << "degenerate two-block parameters: p0 + q0 = " << p0 + q0 << " must be > 0";
        throw DomainError(os.str());
    }
    if (!(p0 + q0 < 1.0)) {
        os << "degenerate two-block parameters: p0 + q0 = " << p0 + q0 << " must be < 1";
        throw DomainError(os.str());
    }
}

}  // namespace detail

// Two-block specialization, a total variation bound on |pi_t(A) - pi(A)|:
//   (1 - p0 - q0)^t + eps * (1 - (1 - p0 - q0)^t) / (p0 + q0).
// Equals half the aggregate-deviation bound at rho = 1 - p0 - q0 - eps, m = 2.
inline double two_block_bound(double p0, double q0, double eps, long t) {
    if (t < 1) throw DomainError("step count must be >= 1, got " + std::to_string(t));
    detail::require_two_block_params(p0, q0, eps);
    const double r = 1.0 - p0 - q0;
    return std::pow(r, static_cast<double>(t)) + eps * geometric_sum(r, t);
}

// Large-t limit of the two-block bound: eps / (p0 + q0). Independent of the
// state-space size.
inline double asymptotic_bound(double p0, double q0, double eps) {
    if (!(p0 >= 0.0 && q0 >= 0.0 && eps >= 0.0))
        throw DomainError("p0, q0, epsilon must be nonnegative");
    if (!(p0 + q0 > 0.0))
        throw DomainError("p0 + q0 must be > 0, got " + std::to_string(p0 + q0));
    return eps / (p0 + q0);
}

// ---------------------------------------------------------------------------
// Bound curves

struct BoundCurvePoint {
    long t = 0;
    double value = 0.0;
};

struct BoundCurve {
    NormTag norm = NormTag::none;
    std::vector<BoundCurvePoint> points;  // consecutive t values, ascending
};

inline BoundCurve aggregate_deviation_curve(const BoundParams& p, long horizon) {
    detail::require_valid(p);
    BoundCurve curve{NormTag::l1_sum, {}};
    for (long t = 1; t <= horizon; ++t) curve.points.push_back({t, aggregate_deviation_bound(p, t)});
    return curve;
}

inline BoundCurve lumped_tv_curve(double rho, long horizon) {
    BoundCurve curve{NormTag::tv, {}};
    for (long t = 0; t <= horizon; ++t) curve.points.push_back({t, lumped_tv_bound(rho, t)});
    return curve;
}

inline BoundCurve two_block_curve(double p0, double q0, double eps, long horizon) {
    BoundCurve curve{NormTag::tv, {}};
    for (long t = 1; t <= horizon; ++t) curve.points.push_back({t, two_block_bound(p0, q0, eps, t)});
    return curve;
}

// ---------------------------------------------------------------------------
// Product-contraction inequality (Hartfiel)

struct HartfielResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// Checks ||x B_1..B_k - y C_1..C_k||_1 <= rho0^k ||x - y||_1 +
// (sum_{j<k} rho0^j) * max_i ||B_i - C_i||, with the max-absolute-row-sum
// matrix norm. Preconditions (stochastic inputs, ergodic coefficients at most
// rho0) are verified here rather than trusted: the check serves as an oracle
// and a silent precondition violation would mask defects.
inline HartfielResult hartfiel_check(const Vec& x, const Vec& y, const std::vector<Matrix>& bs,
                                     const std::vector<Matrix>& cs, double rho0) {
    if (bs.empty() || bs.size() != cs.size())
        throw ShapeError("matrix lists must be nonempty and of equal length");
    const std::size_t n = x.size();
    if (y.size() != n) throw ShapeError("vectors x and y differ in dimension");
    if (!is_distribution(x, 1e-9) || !is_distribution(y, 1e-9))
        throw DomainError("x and y must be stochastic vectors");
    auto check_list = [&](const std::vector<Matrix>& ms, const char* name) {
        for (std::size_t i = 0; i < ms.size(); ++i) {
            if (ms[i].dim != n)
                throw ShapeError(std::string(name) + "[" + std::to_string(i) +
                                 "] dimension mismatch");
            if (!validate_stochastic(ms[i], 1e-9).ok)
                throw DomainError(std::string(name) + "[" + std::to_string(i) +
                                  "] is not stochastic");
            const double rho = ergodic_coefficient(ms[i]);
            if (rho > rho0 + 1e-12) {
                std::ostringstream os;
                os << name << "[" << i << "] has ergodic coefficient " << rho
                   << " exceeding rho0 = " << rho0;
                throw DomainError(os.str());
            }
        }
    };
    check_list(bs, "B");
    check_list(cs, "C");

    Vec xa = x, ya = y;
    double spread = 0.0;
    for (std::size_t i = 0; i < bs.size(); ++i) {
        xa = step_distribution(xa, bs[i]);
        ya = step_distribution(ya, cs[i]);
        spread = std::max(spread, induced_row_norm(subtract(bs[i], cs[i])));
    }
    HartfielResult result;
    result.lhs = l1_distance(xa, ya);
    result.rhs = std::pow(rho0, static_cast<double>(bs.size())) * l1_distance(x, y) +
                 geometric_sum(rho0, static_cast<long>(bs.size())) * spread;
    result.holds = result.lhs <= result.rhs + 1e-12;
    return result;
}

}  // namespace qlump
