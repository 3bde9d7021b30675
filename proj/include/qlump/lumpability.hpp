// Partition analysis: exact lumpability, tight block-mass spread, lower/upper
// aggregated matrices, lumped-chain construction, and the distribution-
// dependent aggregated transition matrices.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "qlump/error.hpp"
#include "qlump/matrix.hpp"
#include "qlump/partition.hpp"

namespace qlump {

enum class AggKind { lower, upper, lumped, time_dependent };

// m x m aggregated matrix. `lower` rows may sum below 1 and `upper` rows
// above 1; `lumped` and `time_dependent` are row-stochastic.
struct AggregatedMatrix {
    Matrix mat;
    AggKind kind = AggKind::lumped;
};

namespace detail {

inline void check_partition_shape(const Matrix& p, const StatePartition& q) {
    if (q.states() != p.dim)
        throw ShapeError("partition covers " + std::to_string(q.states()) +
                         " states, matrix dimension is " + std::to_string(p.dim));
}

}  // namespace detail

// (min, max) over x in block i of p(x, A_j).
inline std::pair<double, double> block_transition_range(const Matrix& p, const StatePartition& q,
                                                        std::size_t i, std::size_t j) {
    detail::check_partition_shape(p, q);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const auto& target = q.block(j);
    for (std::size_t x : q.block(i)) {
        const double mass = transition_mass(p, x, target);
        lo = std::min(lo, mass);
        hi = std::max(hi, mass);
    }
    return {lo, hi};
}

// Blockwise min/max of p(x, A_j) over the source block: the lower and upper
// transition matrices. They coincide exactly when the chain is lumpable.
inline std::pair<AggregatedMatrix, AggregatedMatrix> lower_upper_matrices(
    const Matrix& p, const StatePartition& q) {
    detail::check_partition_shape(p, q);
    const std::size_t m = q.block_count();
    Matrix lower(m), upper(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const auto [lo, hi] = block_transition_range(p, q, i, j);
            lower(i, j) = lo;
            upper(i, j) = hi;
        }
    return {AggregatedMatrix{std::move(lower), AggKind::lower},
            AggregatedMatrix{std::move(upper), AggKind::upper}};
}

// Entry (i,j) is the spread u_ij - l_ij; localizes where quasi-lumpability
// fails rather than reporting only the scalar maximum.
inline Matrix block_spread_matrix(const Matrix& p, const StatePartition& q) {
    const auto [lower, upper] = lower_upper_matrices(p, q);
    return subtract(upper.mat, lower.mat);
}

// Smallest eps such that |p(x, A_j) - p(y, A_j)| <= eps for all same-block
// x, y and every block j; equals the largest entry of the spread matrix.
inline double tight_epsilon(const Matrix& p, const StatePartition& q) {
    const Matrix spread = block_spread_matrix(p, q);
    double worst = 0.0;
    for (double v : spread.data) worst = std::max(worst, v);
    return worst;
}

inline bool is_exactly_lumpable(const Matrix& p, const StatePartition& q, double tol = 1e-9) {
    return tight_epsilon(p, q) <= tol;
}

// The lumped chain: entry (i,j) is p(x, A_j) for the first state of block i,
// verified against every other state of the block within tol.
inline AggregatedMatrix lumped_matrix(const Matrix& p, const StatePartition& q,
                                      double tol = 1e-9) {
    detail::check_partition_shape(p, q);
    const std::size_t m = q.block_count();
    Matrix mat(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& block = q.block(i);
        const std::size_t rep = block.front();
        for (std::size_t j = 0; j < m; ++j) {
            const double ref = transition_mass(p, rep, q.block(j));
            for (std::size_t k = 1; k < block.size(); ++k) {
                const double other = transition_mass(p, block[k], q.block(j));
                if (std::abs(other - ref) > tol) {
                    std::ostringstream os;
                    os << "not exactly lumpable at tolerance " << tol << ": block masses into block "
                       << j << " differ between states " << rep << " and " << block[k] << " of block "
                       << i << " (" << ref << " vs " << other << ")";
                    throw LumpabilityError(os.str(), i, j, rep, block[k]);
                }
            }
            mat(i, j) = ref;
        }
    }
    return {std::move(mat), AggKind::lumped};
}

// Per-block masses of v: entry i is the total probability of block A_i.
inline Vec aggregate_distribution(const Vec& v, const StatePartition& q) {
    if (v.size() != q.states())
        throw ShapeError("distribution has " + std::to_string(v.size()) +
                         " entries, partition covers " + std::to_string(q.states()));
    Vec out(q.block_count(), 0.0);
    for (std::size_t i = 0; i < q.block_count(); ++i) {
        double s = 0.0;
        for (std::size_t x : q.block(i)) s += v[x];
        out[i] = s;
    }
    return out;
}

// Block-to-block transition matrix conditioned on the detailed distribution v:
// entry (i,j) averages p(x, A_j) over x in A_i with weights v(x) / v(A_i).
// Every block needs positive mass under v; rows land between the lower and
// upper matrices entrywise.
inline AggregatedMatrix aggregated_transition_matrix(const Matrix& p, const StatePartition& q,
                                                     const Vec& v) {
    detail::check_partition_shape(p, q);
    if (v.size() != p.dim)
        throw ShapeError("conditioning distribution has " + std::to_string(v.size()) +
                         " entries, matrix dimension is " + std::to_string(p.dim));
    const std::size_t m = q.block_count();
    Matrix mat(m);
    for (std::size_t i = 0; i < m; ++i) {
        double mass = 0.0;
        for (std::size_t x : q.block(i)) mass += v[x];
        if (!(mass > 1e-300))
            throw ConditioningError("block " + std::to_string(i) +
                                        " has zero probability mass under the conditioning "
                                        "distribution",
                                    i);
        for (std::size_t x : q.block(i)) {
            const double w = v[x] / mass;
            if (w == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) mat(i, j) += w * transition_mass(p, x, q.block(j));
        }
    }
    return {std::move(mat), AggKind::time_dependent};
}

struct LumpabilityReport {
    double epsilon = 0.0;     // largest entry of `spread`
    AggregatedMatrix lower;   // blockwise minima
    AggregatedMatrix upper;   // blockwise maxima
    double rho_lower = 0.0;   // ergodic coefficient of the lower matrix
    bool exact = false;       // epsilon <= exactness tolerance
    Matrix spread;            // upper - lower, per block pair
};

inline LumpabilityReport analyze_lumpability(const Matrix& p, const StatePartition& q,
                                             double exact_tol = 1e-9) {
    LumpabilityReport rep;
    auto [lower, upper] = lower_upper_matrices(p, q);
    rep.spread = subtract(upper.mat, lower.mat);
    rep.epsilon = 0.0;
    for (double v : rep.spread.data) rep.epsilon = std::max(rep.epsilon, v);
    rep.rho_lower = ergodic_coefficient(lower.mat);
    rep.exact = rep.epsilon <= exact_tol;
    rep.lower = std::move(lower);
    rep.upper = std::move(upper);
    return rep;
}

}  // namespace qlump
