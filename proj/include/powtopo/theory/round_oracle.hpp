#pragma once

#include <powtopo/net/latency.hpp>
#include <powtopo/types.hpp>

#include <cstdint>
#include <vector>

namespace powtopo::theory {

//! One mined block of the round model. Block ids equal round numbers; 0 is genesis.
struct RoundRecord {
    MinerId miner{kNoMiner};
    std::uint32_t parent{0};
    std::uint32_t height{0};
    bool in_chain{false};
};

struct Estimate {
    double value{0};
    double se{0};
};

/**
 * Output of the round-model Monte Carlo. Estimators ignore the last `tail` rounds so that
 * unresolved forks at the horizon do not bias them.
 */
struct RoundTrace {
    std::size_t n{0};
    std::uint32_t tail{100};
    std::vector<RoundRecord> rounds;  //!< rounds[0] is genesis
    std::vector<std::uint32_t> chain; //!< final chain, genesis first

    std::size_t round_count() const { return rounds.size() - 1; }
    //! Last round counted by the estimators.
    std::size_t retained_rounds() const;

    std::vector<std::uint64_t> mined() const;          //!< retained blocks per miner
    std::vector<std::uint64_t> mined_in_chain() const; //!< retained chain blocks per miner
    std::uint64_t retained_chain_length() const;
    std::uint64_t off_chain_blocks() const;            //!< retained blocks off the chain

    /**
     * Averaged per-miner fraction of chain blocks for a miner group, with a batch-means
     * standard error (batches of contiguous rounds).
     */
    Estimate group_F(const std::vector<MinerId>& group, std::size_t batches = 50) const;
    //! Fraction of the group's blocks left off the chain.
    Estimate group_W(const std::vector<MinerId>& group, std::size_t batches = 50) const;
    Estimate F(MinerId v, std::size_t batches = 50) const { return group_F({v}, batches); }
    Estimate W(MinerId v, std::size_t batches = 50) const { return group_W({v}, batches); }
};

/**
 * Simulate the round model: at round r one miner, drawn in proportion to hash rate, mines on
 * the highest block it can see, where a block from round r' by miner u is visible to v once
 * r' + delta(u, v) <= r (own blocks immediately). Height ties go to the earliest arrival, then
 * the lowest round. The final chain is the highest block at the horizon, earliest mined on ties.
 * @param delta  delivery times in rounds
 * @param hash_rates  empty for uniform
 * @throws ConfigError on invalid inputs.
 */
RoundTrace round_oracle(const net::DeltaMatrix& delta, const std::vector<double>& hash_rates,
                        std::uint32_t rounds, std::uint64_t seed, std::uint32_t tail = 100);

//! delta for a two-cluster network: the first round(p n) miners form cluster 1.
net::DeltaMatrix two_cluster_delta(std::size_t n, double p, double eps, double delta);
//! Cluster labels (1 or 2) matching two_cluster_delta.
std::vector<int> two_cluster_labels(std::size_t n, double p);

enum class PhaseKind { OneRun, TwoRun, Fork };

const char* to_string(PhaseKind kind);

struct Phase {
    PhaseKind kind{PhaseKind::OneRun};
    std::uint32_t first{0}; //!< first round, inclusive
    std::uint32_t last{0};  //!< last round, inclusive
    int winner{0};          //!< 1 or 2; 0 for an unfinished fork at the horizon
    bool closed{true};
};

/**
 * Split the rounds of a two-cluster trace into runs and forks. A run of K consecutive blocks
 * from one cluster covers its first K-1 blocks (all K at the end of the trace); the last one
 * opens a fork. A fork consumes opposing pairs until a pair from the same cluster appears; that
 * cluster wins and the pair starts the next run.
 */
std::vector<Phase> phase_partition(const std::vector<int>& cluster_sequence);

/**
 * phase_partition over the trace, then verify it: each fork grows exactly two branches, one per
 * cluster, and the winner blocks of the closed phases concatenate to the final chain.
 * @param cluster_of  label 1 or 2 per miner
 * @throws ModelError naming the round of the first violation.
 */
std::vector<Phase> classify_phases(const RoundTrace& trace, const std::vector<int>& cluster_of);

} // namespace powtopo::theory
