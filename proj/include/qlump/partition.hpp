// Ordered partitions of the state set {0..n-1} into disjoint nonempty blocks.
#pragma once

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "qlump/error.hpp"

namespace qlump {

class StatePartition {
public:
    StatePartition() = default;

    // Validates disjointness, coverage and nonemptiness; blocks keep their
    // order, states within a block are stored sorted ascending.
    StatePartition(std::vector<std::vector<std::size_t>> blocks, std::size_t n_states)
        : blocks_(std::move(blocks)), n_states_(n_states) {
        if (n_states_ == 0) throw DomainError("partition needs at least one state");
        if (blocks_.empty()) throw DomainError("partition needs at least one block");
        block_index_.assign(n_states_, kUnassigned);
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            if (blocks_[b].empty())
                throw DomainError("block " + std::to_string(b) + " is empty");
            std::sort(blocks_[b].begin(), blocks_[b].end());
            for (std::size_t x : blocks_[b]) {
                if (x >= n_states_)
                    throw IndexError("state " + std::to_string(x) + " out of range (n = " +
                                     std::to_string(n_states_) + ")");
                if (block_index_[x] != kUnassigned) {
                    std::ostringstream os;
                    os << "state " << x << " appears in blocks " << block_index_[x] << " and " << b;
                    throw DomainError(os.str());
                }
                block_index_[x] = b;
            }
        }
        for (std::size_t x = 0; x < n_states_; ++x)
            if (block_index_[x] == kUnassigned)
                throw DomainError("state " + std::to_string(x) + " not covered by any block");
    }

    std::size_t block_count() const { return blocks_.size(); }
    std::size_t states() const { return n_states_; }
    const std::vector<std::vector<std::size_t>>& blocks() const { return blocks_; }

    const std::vector<std::size_t>& block(std::size_t i) const {
        if (i >= blocks_.size()) throw IndexError("block index " + std::to_string(i) + " out of range");
        return blocks_[i];
    }

    std::size_t block_of(std::size_t state) const {
        if (state >= n_states_) throw IndexError("state " + std::to_string(state) + " out of range");
        return block_index_[state];
    }

    bool operator==(const StatePartition&) const = default;

    static StatePartition singletons(std::size_t n) {
        std::vector<std::vector<std::size_t>> blocks(n);
        for (std::size_t i = 0; i < n; ++i) blocks[i] = {i};
        return StatePartition(std::move(blocks), n);
    }

    // {A, complement of A}, with A as block 0.
    static StatePartition two_block(std::vector<std::size_t> a, std::size_t n) {
        std::sort(a.begin(), a.end());
        std::vector<bool> in_a(n, false);
        for (std::size_t x : a) {
            if (x >= n) throw IndexError("state " + std::to_string(x) + " out of range");
            in_a[x] = true;
        }
        std::vector<std::size_t> rest;
        for (std::size_t x = 0; x < n; ++x)
            if (!in_a[x]) rest.push_back(x);
        return StatePartition({std::move(a), std::move(rest)}, n);
    }

private:
    static constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);

    std::vector<std::vector<std::size_t>> blocks_;
    std::size_t n_states_ = 0;
    std::vector<std::size_t> block_index_;
};

}  // namespace qlump
