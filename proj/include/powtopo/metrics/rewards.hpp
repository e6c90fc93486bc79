#pragma once

#include <powtopo/engine/simulator.hpp>
#include <powtopo/net/latency.hpp>

#include <string>
#include <vector>

namespace powtopo::metrics {

struct MinerReward {
    MinerId miner_id{0};
    std::string city;
    net::Continent continent{net::Continent::None};
    //! Blocks mined no later than the last retained chain block.
    std::uint64_t blocks_mined{0};
    std::uint64_t blocks_in_chain{0};
    double f_pct{0};
    double w_pct{0};
};

struct RewardReport {
    std::vector<MinerReward> miners;
    std::uint64_t retained_length{0}; //!< chain blocks counted, genesis excluded
    double fair_pct{0};               //!< 100 / n
    double fork_rate{0};              //!< share of blocks in the window left off the chain
    std::uint32_t replica_disagreements{0};
};

/**
 * F and W per miner. The retained chain is the observer's chain without its last discard_tail
 * blocks; W only counts blocks mined no later than the last retained block.
 * @throws Error if the chain is not longer than discard_tail or miners do not match the result.
 */
RewardReport compute_rewards(const engine::SimResult& result, const std::vector<net::MinerSpec>& miners,
                             std::uint32_t discard_tail);

struct AggregateRow {
    MinerId miner_id{0};
    std::string city;
    net::Continent continent{net::Continent::None};
    double blocks_mined{0};
    double blocks_in_chain{0};
    double f_mean{0}, f_ci95{0};
    double w_mean{0}, w_ci95{0};
};

struct AggregateReport {
    std::vector<AggregateRow> miners;
    std::size_t runs{0};
    double fair_pct{0};
    double fork_rate_mean{0};
};

//! Mean and normal-approximation 95% half-width (1.96 s / sqrt(runs)) per miner.
AggregateReport aggregate(const std::vector<RewardReport>& reports);

struct ContinentRow {
    net::Continent continent{net::Continent::None};
    std::size_t miners{0};
    double mean_f_pct{0};
    double gain{0};         //!< mean_f_pct / fair
    std::size_t above_fair{0};
    std::size_t below_fair{0};
};

//! Per-continent means in kContinents order; continents without miners are omitted.
std::vector<ContinentRow> continent_summary(const AggregateReport& report);

std::string reward_csv(const RewardReport& report);
std::string aggregate_csv(const AggregateReport& report);
std::string continent_csv(const std::vector<ContinentRow>& rows);

} // namespace powtopo::metrics
