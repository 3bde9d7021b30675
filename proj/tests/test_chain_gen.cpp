#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "qlump/bounds.hpp"
#include "qlump/chain_gen.hpp"
#include "qlump/lumpability.hpp"
#include "qlump/stationary.hpp"
#include "support/oracles.hpp"

using namespace qlump;

TEST_CASE("TwoBlockSpec validation names the violated inequality") {
    auto message_of = [](const TwoBlockSpec& s) {
        try {
            validate(s);
        } catch (const DomainError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    REQUIRE(message_of({10, 5, {}, 0.95, 0.2, 0.1, 0}).find("p0 + epsilon") != std::string::npos);
    REQUIRE(message_of({10, 5, {}, 0.2, 0.95, 0.1, 0}).find("q0 + epsilon") != std::string::npos);
    REQUIRE(message_of({10, 5, {}, 0.0, 0.0, 0.0, 0}).find("p0 + q0") != std::string::npos);
    REQUIRE(message_of({10, 5, {}, 0.6, 0.5, 0.0, 0}).find("p0 + q0") != std::string::npos);
    REQUIRE_THROWS_AS(validate({10, 0, {}, 0.2, 0.2, 0.1, 0}), DomainError);   // empty A
    REQUIRE_THROWS_AS(validate({10, 10, {}, 0.2, 0.2, 0.1, 0}), DomainError);  // A = everything
    REQUIRE_THROWS_AS(validate({10, 5, {3, 3}, 0.2, 0.2, 0.1, 0}), DomainError);
    REQUIRE_THROWS_AS(validate({10, 5, {12}, 0.2, 0.2, 0.1, 0}), IndexError);
}

TEST_CASE("generate_two_block_chain") {
    const TwoBlockSpec spec{100, 50, {}, 0.25, 0.25, 0.1, 7};

    SECTION("deterministic: same seed, same bytes") {
        const GeneratedChain a = generate_two_block_chain(spec);
        const GeneratedChain b = generate_two_block_chain(spec);
        REQUIRE(a.P.data == b.P.data);
        REQUIRE(a.Q == b.Q);
        REQUIRE(a.realized_spread == b.realized_spread);
        TwoBlockSpec other = spec;
        other.seed = 8;
        REQUIRE_FALSE(generate_two_block_chain(other).P.data == a.P.data);
    }

    SECTION("output satisfies its own contract") {
        const GeneratedChain g = generate_two_block_chain(spec);
        REQUIRE(g.Q.block(0).size() == 50);
        REQUIRE(validate_stochastic(g.P, 1e-9).ok);
        REQUIRE(g.realized_spread == tight_epsilon(g.P, g.Q));
        REQUIRE(g.realized_spread <= 0.1 + 1e-12);
        // Interval conditions state by state, on both sides.
        for (std::size_t b = 0; b < 2; ++b) {
            const double lo = b == 0 ? 0.25 : 0.25;
            for (std::size_t x : g.Q.block(b)) {
                const double cross = transition_mass(g.P, x, g.Q.block(1 - b));
                REQUIRE(cross >= lo - 1e-12);
                REQUIRE(cross <= lo + 0.1 + 1e-12);
            }
        }
        // Every drawn entry strictly positive: irreducible and aperiodic.
        REQUIRE(*std::min_element(g.P.data.begin(), g.P.data.end()) > 0.0);
        // Stationary solve is self-checking at the tight tolerance.
        const Vec pi = stationary_distribution(g.P);
        REQUIRE(l1_distance(step_distribution(pi, g.P), pi) <= 1e-12);
    }

    SECTION("eps = 0 forces exact lumpability") {
        const GeneratedChain g = generate_two_block_chain({30, 10, {}, 0.3, 0.2, 0.0, 5});
        REQUIRE(is_exactly_lumpable(g.P, g.Q, 1e-12));
    }

    SECTION("explicit index set is honored") {
        const GeneratedChain g =
            generate_two_block_chain({8, 0, {1, 3, 5}, 0.2, 0.3, 0.05, 9});
        REQUIRE(g.Q.block(0) == std::vector<std::size_t>{1, 3, 5});
        for (std::size_t x : g.Q.block(0)) {
            const double cross = transition_mass(g.P, x, g.Q.block(1));
            REQUIRE(cross >= 0.2 - 1e-12);
            REQUIRE(cross <= 0.25 + 1e-12);
        }
    }
}

TEST_CASE("generate_exactly_lumpable") {
    SECTION("block masses hit the target per state") {
        SeededRng rng(301);
        const StatePartition q = oracles::random_partition(rng, 12, 3);
        const Matrix target = oracles::mixed_target(rng, 3, 0.7);
        const Matrix p = generate_exactly_lumpable(12, q, target, 41);
        REQUIRE(validate_stochastic(p, 1e-9).ok);
        for (std::size_t x = 0; x < 12; ++x)
            for (std::size_t j = 0; j < 3; ++j)
                REQUIRE(std::abs(transition_mass(p, x, q.block(j)) -
                                 target(q.block_of(x), j)) < 1e-15);
    }
    SECTION("single block: any allocation is trivially lumpable") {
        const StatePartition whole({{0, 1, 2, 3}}, 4);
        const Matrix p = generate_exactly_lumpable(4, whole, Matrix::identity(1), 1);
        REQUIRE(validate_stochastic(p, 1e-9).ok);
        REQUIRE(is_exactly_lumpable(p, whole, 1e-12));
    }
    SECTION("identity target yields a block-closed chain") {
        const StatePartition q({{0, 1}, {2, 3, 4}}, 5);
        const Matrix p = generate_exactly_lumpable(5, q, Matrix::identity(2), 13);
        REQUIRE(transition_mass(p, 0, q.block(1)) == 0.0);
        REQUIRE(transition_mass(p, 4, q.block(0)) == 0.0);
    }
    SECTION("deterministic under the seed") {
        const StatePartition q({{0, 1}, {2}}, 3);
        const Matrix t = Matrix::from_rows({{0.7, 0.3}, {0.4, 0.6}});
        REQUIRE(generate_exactly_lumpable(3, q, t, 5).data ==
                generate_exactly_lumpable(3, q, t, 5).data);
    }
    SECTION("rejects bad targets") {
        const StatePartition q({{0, 1}, {2}}, 3);
        REQUIRE_THROWS_AS(
            generate_exactly_lumpable(3, q, Matrix::from_rows({{0.7, 0.4}, {0.4, 0.6}}), 1),
            DomainError);
        REQUIRE_THROWS_AS(generate_exactly_lumpable(3, q, Matrix::identity(3), 1), ShapeError);
    }
}

TEST_CASE("perturb_lumpable") {
    SeededRng rng(401);

    SECTION("zero perturbation returns the chain unchanged, bit for bit") {
        const StatePartition q = oracles::random_partition(rng, 10, 3);
        const Matrix p = generate_exactly_lumpable(10, q, oracles::mixed_target(rng, 3, 0.6), 2);
        REQUIRE(perturb_lumpable(p, q, 0.0, 77).data == p.data);
    }

    SECTION("requested spread is an upper bound on the realized spread") {
        for (int rep = 0; rep < 100; ++rep) {
            const std::size_t m = 2 + rng.uniform_index(3);
            const std::size_t n = m + 2 + rng.uniform_index(15);
            const StatePartition q = oracles::random_partition(rng, n, m);
            const double alpha = rng.uniform(0.0, 0.8);
            const Matrix base =
                generate_exactly_lumpable(n, q, oracles::mixed_target(rng, m, alpha),
                                          rng.next_u64());
            const double eps = rng.uniform(0.0, 1.0 / static_cast<double>(m));
            const Matrix p = perturb_lumpable(base, q, eps, rng.next_u64());
            REQUIRE(validate_stochastic(p, 1e-9).ok);
            REQUIRE(tight_epsilon(p, q) <= eps + 1e-12);
        }
    }

    SECTION("deterministic under the seed") {
        const StatePartition q = oracles::random_partition(rng, 8, 2);
        const Matrix base = generate_exactly_lumpable(8, q, oracles::mixed_target(rng, 2, 0.5), 3);
        REQUIRE(perturb_lumpable(base, q, 0.05, 11).data ==
                perturb_lumpable(base, q, 0.05, 11).data);
    }

    SECTION("keeps the bound parameters valid for a mild perturbation") {
        const StatePartition q({{0, 1, 2}, {3, 4, 5}}, 6);
        const Matrix target = Matrix::from_rows({{0.7, 0.3}, {0.4, 0.6}});
        const Matrix base = generate_exactly_lumpable(6, q, target, 19);
        const Matrix p = perturb_lumpable(base, q, 0.05, 23);
        const LumpabilityReport rep = analyze_lumpability(p, q);
        REQUIRE(BoundParams{rep.rho_lower, rep.epsilon, 2}.valid());
    }

    SECTION("rejects non-lumpable bases and infeasible spreads") {
        const Matrix bad =
            Matrix::from_rows({{0.5, 0.5, 0.0}, {0.3, 0.2, 0.5}, {0.0, 0.5, 0.5}});
        REQUIRE_THROWS_AS(perturb_lumpable(bad, StatePartition({{0, 1}, {2}}, 3), 0.01, 1),
                          LumpabilityError);

        // Uniform 4-block target: largest lumped entry is 0.25 < eps/2.
        const StatePartition q4 = oracles::random_partition(rng, 8, 4);
        const Matrix uniform_target(4, 0.25);
        const Matrix base = generate_exactly_lumpable(8, q4, uniform_target, 29);
        try {
            perturb_lumpable(base, q4, 0.9, 31);
            FAIL("expected InfeasibilityError");
        } catch (const InfeasibilityError& e) {
            REQUIRE(e.row == q4.block(0).front());
        }
        REQUIRE_THROWS_AS(perturb_lumpable(base, q4, -0.1, 31), DomainError);
    }
}
