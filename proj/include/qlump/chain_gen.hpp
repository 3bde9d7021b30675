// Deterministic, seeded construction of test chains: the two-block family
// with bounded cross-block mass, exactly lumpable chains for a target lumped
// matrix, and bounded perturbations of lumpable chains.
//
// Randomness contract: within-set allocation is a flat simplex draw
// (independent Exp(1) weights, normalized); cross-set mass is uniform on its
// allowed interval. Identical spec + seed reproduces identical bytes.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "qlump/error.hpp"
#include "qlump/lumpability.hpp"
#include "qlump/matrix.hpp"
#include "qlump/partition.hpp"
#include "qlump/rng.hpp"

namespace qlump {

// Two-block family: every state of A sends mass in [p0, p0+epsilon] to the
// complement, every other state sends mass in [q0, q0+epsilon] into A.
struct TwoBlockSpec {
    std::size_t n = 0;
    std::size_t a_size = 0;                 // ignored when a_indices is given
    std::vector<std::size_t> a_indices;     // optional explicit membership of A
    double p0 = 0.0;
    double q0 = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
};

inline void validate(const TwoBlockSpec& s) {
    std::ostringstream os;
    if (s.n < 2) throw DomainError("two-block chain needs n >= 2 states");
    if (s.a_indices.empty()) {
        if (s.a_size < 1 || s.a_size > s.n - 1) {
            os << "block size must satisfy 1 <= a_size <= n-1, got a_size = " << s.a_size
               << " with n = " << s.n;
            throw DomainError(os.str());
        }
    } else {
        std::vector<bool> seen(s.n, false);
        for (std::size_t x : s.a_indices) {
            if (x >= s.n) throw IndexError("block state " + std::to_string(x) + " out of range");
            if (seen[x]) throw DomainError("block state " + std::to_string(x) + " listed twice");
            seen[x] = true;
        }
        if (s.a_indices.size() > s.n - 1)
            throw DomainError("block A must leave at least one state outside");
    }
    if (!(s.p0 >= 0.0 && s.q0 >= 0.0 && s.epsilon >= 0.0))
        throw DomainError("p0, q0, epsilon must be nonnegative");
    if (!(s.p0 + s.epsilon < 1.0)) {
        os << "degenerate parameters: p0 + epsilon = " << s.p0 + s.epsilon << " must be < 1";
        throw DomainError(os.str());
    }
    if (!(s.q0 + s.epsilon < 1.0)) {
        os << "degenerate parameters: q0 + epsilon = " << s.q0 + s.epsilon << " must be < 1";
        throw DomainError(os.str());
    }
    if (!(s.p0 + s.q0 > 0.0)) {
        os << "degenerate parameters: p0 + q0 = " << s.p0 + s.q0 << " must be > 0";
        throw DomainError(os.str());
    }
    if (!(s.p0 + s.q0 < 1.0)) {
        os << "degenerate parameters: p0 + q0 = " << s.p0 + s.q0 << " must be < 1";
        throw DomainError(os.str());
    }
}

struct GeneratedChain {
    Matrix P;
    StatePartition Q;           // block 0 = A, block 1 = complement
    double realized_spread = 0; // tight epsilon actually achieved
    std::uint64_t seed = 0;
};

namespace detail {

// First k entries of a seeded Fisher-Yates shuffle of 0..n-1, sorted.
inline std::vector<std::size_t> sample_without_replacement(SeededRng& rng, std::size_t n,
                                                           std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// Distributes `mass` over row x at the given columns, proportionally to fresh
// Exp(1) weights. The largest share absorbs the rounding residual so the
// column sum reproduces `mass` to a few ulp.
inline void fill_simplex_mass(SeededRng& rng, Matrix& p, std::size_t x,
                              const std::vector<std::size_t>& cols, double mass) {
    std::vector<double> w(cols.size());
    double wsum = 0.0;
    std::size_t imax = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = rng.exponential();
        wsum += w[i];
        if (w[i] > w[imax]) imax = i;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i == imax) continue;
        const double e = mass * (w[i] / wsum);
        p(x, cols[i]) = e;
        acc += e;
    }
    p(x, cols[imax]) = mass - acc;
}

}  // namespace detail

// Draws the two-block chain: cross-set mass uniform on [p0, p0+eps] (resp.
// [q0, q0+eps]), allocated by flat simplex draws within each set. The output
// is verified against its own contract before being returned.
inline GeneratedChain generate_two_block_chain(const TwoBlockSpec& spec) {
    validate(spec);
    SeededRng rng(spec.seed);
    std::vector<std::size_t> a = spec.a_indices;
    if (a.empty()) a = detail::sample_without_replacement(rng, spec.n, spec.a_size);
    StatePartition q = StatePartition::two_block(a, spec.n);

    std::vector<bool> in_a(spec.n, false);
    for (std::size_t x : q.block(0)) in_a[x] = true;

    Matrix p(spec.n);
    for (std::size_t x = 0; x < spec.n; ++x) {
        const bool xa = in_a[x];
        const double lo = xa ? spec.p0 : spec.q0;
        const double cross = rng.uniform(lo, lo + spec.epsilon);
        const auto& cross_set = xa ? q.block(1) : q.block(0);
        const auto& own_set = xa ? q.block(0) : q.block(1);
        detail::fill_simplex_mass(rng, p, x, cross_set, cross);
        detail::fill_simplex_mass(rng, p, x, own_set, 1.0 - cross);
    }

    GeneratedChain chain{std::move(p), std::move(q), 0.0, spec.seed};
    chain.realized_spread = tight_epsilon(chain.P, chain.Q);

    // Post-conditions of the construction; a failure here is a library defect.
    const auto check = validate_stochastic(chain.P, 1e-9);
    if (!check.ok)
        throw Error("two-block generator produced a non-stochastic matrix: " +
                    check.violations.front().what);
    if (chain.realized_spread > spec.epsilon + 1e-12)
        throw Error("two-block generator exceeded the requested spread: " +
                    std::to_string(chain.realized_spread));
    for (std::size_t x = 0; x < spec.n; ++x) {
        const bool xa = in_a[x];
        const double lo = xa ? spec.p0 : spec.q0;
        const double cross = transition_mass(chain.P, x, chain.Q.block(xa ? 1 : 0));
        if (cross < lo - 1e-12 || cross > lo + spec.epsilon + 1e-12)
            throw Error("two-block generator violated the cross-mass interval at state " +
                        std::to_string(x));
    }
    return chain;
}

// Chain whose block masses match `target` exactly for every state: entry
// p(x, A_j) equals target(i,j) for x in A_i, with the within-block allocation
// drawn from the seeded simplex.
inline Matrix generate_exactly_lumpable(std::size_t n, const StatePartition& q,
                                        const Matrix& target, std::uint64_t seed) {
    if (q.states() != n)
        throw ShapeError("partition covers " + std::to_string(q.states()) + " states, expected " +
                         std::to_string(n));
    if (target.dim != q.block_count())
        throw ShapeError("target matrix dimension " + std::to_string(target.dim) +
                         " does not match block count " + std::to_string(q.block_count()));
    const auto check = validate_stochastic(target, 1e-9);
    if (!check.ok)
        throw DomainError("target lumped matrix is not stochastic: " +
                          check.violations.front().what);

    SeededRng rng(seed);
    Matrix p(n);
    for (std::size_t x = 0; x < n; ++x) {
        const std::size_t i = q.block_of(x);
        for (std::size_t j = 0; j < q.block_count(); ++j)
            detail::fill_simplex_mass(rng, p, x, q.block(j), target(i, j));
    }
    return p;
}

// Perturbs an exactly lumpable chain into an eps-lumpable one. Each state
// transfers a uniform draw from [0, eps/2] out of its block's largest lumped
// entry into another randomly chosen block, so same-block states never drift
// more than eps apart in any block mass. Infeasible when eps/2 exceeds the
// largest lumped entry of some row block.
inline Matrix perturb_lumpable(const Matrix& p, const StatePartition& q, double epsilon,
                               std::uint64_t seed) {
    if (epsilon < 0.0) throw DomainError("epsilon must be nonnegative");
    const AggregatedMatrix lumped = lumped_matrix(p, q);  // throws if not lumpable
    const std::size_t m = q.block_count();
    if (epsilon == 0.0 || m < 2) return p;

    for (std::size_t i = 0; i < m; ++i) {
        double pmax = 0.0;
        for (std::size_t j = 0; j < m; ++j) pmax = std::max(pmax, lumped.mat(i, j));
        if (epsilon / 2.0 > pmax + 1e-15) {
            std::ostringstream os;
            os << "epsilon = " << epsilon << " infeasible: transfer " << epsilon / 2.0
               << " exceeds the largest lumped entry " << pmax << " of block " << i
               << " (binding row: state " << q.block(i).front() << ")";
            throw InfeasibilityError(os.str(), q.block(i).front());
        }
    }

    SeededRng rng(seed);
    Matrix out = p;
    for (std::size_t x = 0; x < q.states(); ++x) {
        const std::size_t i = q.block_of(x);
        std::size_t src = 0;
        for (std::size_t j = 1; j < m; ++j)
            if (lumped.mat(i, j) > lumped.mat(i, src)) src = j;
        std::size_t dst = rng.uniform_index(m - 1);
        if (dst >= src) ++dst;
        const double delta = rng.uniform(0.0, epsilon / 2.0);

        const double src_mass = lumped.mat(i, src);
        const double dst_mass = lumped.mat(i, dst);
        const double src_scale = (src_mass - delta) / src_mass;
        for (std::size_t y : q.block(src)) out(x, y) = p(x, y) * src_scale;
        if (dst_mass > 0.0) {
            const double dst_scale = (dst_mass + delta) / dst_mass;
            for (std::size_t y : q.block(dst)) out(x, y) = p(x, y) * dst_scale;
        } else {
            // Destination block previously unreachable: spread the transferred
            // mass over it with a fresh simplex draw.
            detail::fill_simplex_mass(rng, out, x, q.block(dst), delta);
        }
    }

    const auto check = validate_stochastic(out, 1e-9);
    if (!check.ok)
        throw Error("perturbation produced a non-stochastic matrix: " +
                    check.violations.front().what);
    const double realized = tight_epsilon(out, q);
    if (realized > epsilon + 1e-12)
        throw Error("perturbation exceeded the requested spread: " + std::to_string(realized));
    return out;
}

}  // namespace qlump
