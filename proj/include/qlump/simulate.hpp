// Forward simulation: exact distribution propagation and seeded Monte Carlo
// walkers, with per-step aggregated traces and bound attachment.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "qlump/bounds.hpp"
#include "qlump/error.hpp"
#include "qlump/lumpability.hpp"
#include "qlump/matrix.hpp"
#include "qlump/partition.hpp"
#include "qlump/rng.hpp"
#include "qlump/stationary.hpp"

namespace qlump {

enum class SimMode { exact, monte_carlo };

struct SimulationConfig {
    Matrix chain;
    StatePartition partition;
    std::size_t target_block = 0;  // the block whose stationary mass is estimated
    Vec pi0;                       // initial distribution over states
    long horizon = 1;              // number of steps T; rows cover t = 0..T
    SimMode mode = SimMode::exact;
    std::size_t walkers = 0;       // monte_carlo only
    std::uint64_t seed = 0;        // monte_carlo only
    std::size_t shards = 0;        // monte_carlo execution knob; 0 = auto.
                                   // Results never depend on the shard count.
};

struct TraceRow {
    long t = 0;
    Vec mass;                // block occupancy (exact masses or walker frequencies)
    double deviation = 0.0;  // |mass[target] - stationary mass of target|
    double bound = std::numeric_limits<double>::quiet_NaN();
    NormTag norm = NormTag::none;
};

namespace detail {

inline void check_config(const SimulationConfig& cfg, SimMode expected) {
    if (cfg.mode != expected)
        throw DomainError(expected == SimMode::exact ? "configuration is not in exact mode"
                                                     : "configuration is not in monte_carlo mode");
    check_partition_shape(cfg.chain, cfg.partition);
    if (cfg.pi0.size() != cfg.chain.dim)
        throw ShapeError("initial distribution has " + std::to_string(cfg.pi0.size()) +
                         " entries, chain has " + std::to_string(cfg.chain.dim) + " states");
    if (!is_distribution(cfg.pi0, 1e-9))
        throw DomainError("initial distribution is not stochastic at tolerance 1e-9");
    if (cfg.target_block >= cfg.partition.block_count())
        throw IndexError("target block " + std::to_string(cfg.target_block) + " out of range");
    if (cfg.horizon < 1) throw DomainError("horizon must be >= 1");
    if (expected == SimMode::monte_carlo && cfg.walkers < 1)
        throw DomainError("monte_carlo mode needs walkers >= 1");
}

}  // namespace detail

// Propagates the full distribution t = 0..T (iterated vector-matrix products,
// never materializing a matrix power) and records aggregated block masses and
// the target-block deviation from stationarity.
inline std::vector<TraceRow> exact_trace(const SimulationConfig& cfg) {
    detail::check_config(cfg, SimMode::exact);
    const Vec pi = stationary_distribution(cfg.chain);
    const double target_stat = aggregate_distribution(pi, cfg.partition)[cfg.target_block];

    std::vector<TraceRow> rows;
    rows.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
    Vec v = cfg.pi0;
    for (long t = 0; t <= cfg.horizon; ++t) {
        if (t > 0) v = step_distribution(v, cfg.chain);
        TraceRow row;
        row.t = t;
        row.mass = aggregate_distribution(v, cfg.partition);
        row.deviation = std::abs(row.mass[cfg.target_block] - target_stat);
        rows.push_back(std::move(row));
    }
    return rows;
}

// Synchronously stepped independent walkers; row t holds the fraction of
// walkers in each block after t steps, an unbiased estimate of the exact
// masses with per-block standard error at most 1/(2 sqrt(walkers)).
// Walker w draws from the stream derive_stream(seed, w), so the trace is
// byte-identical however the walkers are sharded across threads.
inline std::vector<TraceRow> mc_trace(const SimulationConfig& cfg) {
    detail::check_config(cfg, SimMode::monte_carlo);
    const std::size_t n = cfg.chain.dim;
    const std::size_t m = cfg.partition.block_count();
    const long T = cfg.horizon;
    const Vec pi = stationary_distribution(cfg.chain);
    const double target_stat = aggregate_distribution(pi, cfg.partition)[cfg.target_block];

    // Row-wise transition CDFs plus the initial-distribution CDF.
    std::vector<double> cdf(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += cfg.chain(i, j);
            cdf[i * n + j] = acc;
        }
    }
    Vec pi0_cdf(n);
    {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += cfg.pi0[j];
            pi0_cdf[j] = acc;
        }
    }
    std::vector<std::size_t> block_of(n);
    for (std::size_t x = 0; x < n; ++x) block_of[x] = cfg.partition.block_of(x);

    auto sample = [n](const double* cdf_row, double u) {
        const double* hit = std::upper_bound(cdf_row, cdf_row + n, u);
        std::size_t idx = static_cast<std::size_t>(hit - cdf_row);
        return idx < n ? idx : n - 1;
    };

    using Counts = std::vector<std::uint64_t>;  // (T+1) x m, row-major
    auto run_range = [&](std::size_t w0, std::size_t w1) {
        Counts counts(static_cast<std::size_t>(T + 1) * m, 0);
        for (std::size_t w = w0; w < w1; ++w) {
            SeededRng rng(SeededRng::derive_stream(cfg.seed, w));
            std::size_t state = sample(pi0_cdf.data(), rng.uniform01());
            ++counts[block_of[state]];
            for (long t = 1; t <= T; ++t) {
                state = sample(cdf.data() + state * n, rng.uniform01());
                ++counts[static_cast<std::size_t>(t) * m + block_of[state]];
            }
        }
        return counts;
    };

    std::size_t shards = cfg.shards;
    if (shards == 0) {
        const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
        shards = std::clamp<std::size_t>(cfg.walkers / 1024, 1, hw);
    }
    shards = std::min(shards, cfg.walkers);

    Counts totals(static_cast<std::size_t>(T + 1) * m, 0);
    if (shards <= 1) {
        totals = run_range(0, cfg.walkers);
    } else {
        std::vector<std::future<Counts>> parts;
        const std::size_t chunk = (cfg.walkers + shards - 1) / shards;
        for (std::size_t s = 0; s < shards; ++s) {
            const std::size_t w0 = s * chunk;
            const std::size_t w1 = std::min(cfg.walkers, w0 + chunk);
            if (w0 >= w1) break;
            parts.push_back(std::async(std::launch::async, run_range, w0, w1));
        }
        for (auto& part : parts) {
            const Counts c = part.get();
            for (std::size_t i = 0; i < totals.size(); ++i) totals[i] += c[i];
        }
    }

    std::vector<TraceRow> rows;
    rows.reserve(static_cast<std::size_t>(T) + 1);
    const double inv_w = 1.0 / static_cast<double>(cfg.walkers);
    for (long t = 0; t <= T; ++t) {
        TraceRow row;
        row.t = t;
        row.mass.resize(m);
        for (std::size_t b = 0; b < m; ++b)
            row.mass[b] = static_cast<double>(totals[static_cast<std::size_t>(t) * m + b]) * inv_w;
        row.deviation = std::abs(row.mass[cfg.target_block] - target_stat);
        rows.push_back(std::move(row));
    }
    return rows;
}

// Aggregated transition matrices along the exact propagation: element t-1 of
// the result maps the block masses at time t-1 to those at time t, so the
// product identity mass_t = mass_0 * M_1 * ... * M_t holds. Every block needs
// positive mass at every conditioning step.
inline std::vector<AggregatedMatrix> aggregated_matrix_trace(const SimulationConfig& cfg) {
    detail::check_config(cfg, SimMode::exact);
    std::vector<AggregatedMatrix> out;
    out.reserve(static_cast<std::size_t>(cfg.horizon));
    Vec v = cfg.pi0;
    for (long t = 1; t <= cfg.horizon; ++t) {
        try {
            out.push_back(aggregated_transition_matrix(cfg.chain, cfg.partition, v));
        } catch (const ConditioningError& e) {
            throw ConditioningError(std::string(e.what()) + " at step " + std::to_string(t - 1),
                                    e.block, t - 1);
        }
        v = step_distribution(v, cfg.chain);
    }
    return out;
}

// First step index whose deviation is at or below the threshold and stays
// there through the end of the trace; nullopt when never sustained.
inline std::optional<long> time_to_bound(const std::vector<TraceRow>& trace, double threshold) {
    if (trace.empty()) return std::nullopt;
    std::size_t last_violation = trace.size();  // sentinel: none
    for (std::size_t i = trace.size(); i-- > 0;)
        if (trace[i].deviation > threshold) {
            last_violation = i;
            break;
        }
    if (last_violation == trace.size()) return trace.front().t;
    if (last_violation + 1 >= trace.size()) return std::nullopt;
    return trace[last_violation + 1].t;
}

// ---------------------------------------------------------------------------
// Bound attachment

struct DominationReport {
    bool checked = false;       // true when the curve covered at least one row
    bool dominated = true;
    long first_violation = -1;  // step of the first violation, when any
    double worst_gap = -std::numeric_limits<double>::infinity();  // max(measure - bound)
};

// Writes the curve's values (and norm tag) into the matching rows and checks
// that the norm-appropriate deviation measure stays within bound + slack.
// l1_sum compares sum_i |mass_i - stationary_i|; tv compares half of it.
inline DominationReport apply_bound(std::vector<TraceRow>& rows, const BoundCurve& curve,
                                    const Vec& stationary_mass, double slack) {
    DominationReport report;
    if (curve.points.empty()) return report;
    const long t0 = curve.points.front().t;
    for (TraceRow& row : rows) {
        const long idx = row.t - t0;
        if (idx < 0 || idx >= static_cast<long>(curve.points.size())) continue;
        row.bound = curve.points[static_cast<std::size_t>(idx)].value;
        row.norm = curve.norm;
        double measure = l1_distance(row.mass, stationary_mass);
        if (curve.norm == NormTag::tv) measure *= 0.5;
        const double gap = measure - row.bound;
        report.checked = true;
        report.worst_gap = std::max(report.worst_gap, gap);
        if (gap > slack && report.dominated) {
            report.dominated = false;
            report.first_violation = row.t;
        }
    }
    return report;
}

}  // namespace qlump
