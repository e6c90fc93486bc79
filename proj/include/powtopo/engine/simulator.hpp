#pragma once

#include <powtopo/chain/block_tree.hpp>
#include <powtopo/net/latency.hpp>
#include <powtopo/net/topology.hpp>
#include <powtopo/rng.hpp>
#include <powtopo/types.hpp>

#include <cstdint>
#include <queue>
#include <span>
#include <unordered_map>
#include <vector>

namespace powtopo::engine {

struct SimConfig {
    std::size_t n{0};
    //! Per-miner exponential mean in ms, used when hash_rates is empty.
    double mean_interblock{15000.0};
    //! Optional per-miner rates (blocks per ms).
    std::vector<double> hash_rates;
    double validation_delay{1.0};
    std::uint32_t target_chain_length{20000};
    std::uint32_t discard_tail{100};
    std::uint64_t seed{1};

    //! @throws ConfigError describing the first violated constraint.
    void validate() const;
    double mean_for(MinerId v) const;
};

enum class EventKind : std::uint8_t { TimerExpiry, BlockMsg, Require, Response };

const char* to_string(EventKind kind);

/**
 * A timeline entry. For BlockMsg and Response `time` is when the receiver has finished
 * validating the block (link latency plus validation delay already added); for Require it is
 * the delivery time.
 */
struct Event {
    Millis time{0};
    std::uint64_t seq{0};
    EventKind kind{EventKind::TimerExpiry};
    MinerId receiver{kNoMiner};
    MinerId sender{kNoMiner};
    BlockId block{kGenesisId};
    std::uint32_t timer_generation{0};
};

struct BlockInfo {
    MinerId miner_id;
    Millis mined_at;
};

struct SimResult {
    std::vector<std::uint64_t> per_miner_mined;
    std::vector<BlockId> final_chain;            //!< observer's longest chain, genesis first
    std::vector<chain::Block> all_blocks;        //!< indexed by id, genesis included
    std::uint64_t fork_count{0};                 //!< mined blocks outside final_chain
    std::uint64_t wall_events{0};
    MinerId observer{kNoMiner};
    std::uint64_t protocol_errors{0};
    Millis end_time{0};
    //! Miners whose replica differs from the observer's on the retained prefix.
    std::uint32_t replica_disagreements{0};
    std::uint64_t messages_block{0};
    std::uint64_t messages_require{0};
    std::uint64_t messages_response{0};
};

/**
 * Discrete-event simulation of mining and block flooding over an overlay.
 *
 * Events are processed strictly in (time, seq) order. Handlers are public so that single
 * protocol steps can be driven by hand; each returns the events it scheduled, valid until the
 * next handler call.
 */
class Simulator {
public:
    Simulator(SimConfig config, const net::Topology& topology, const net::LatencyMatrix& latency);

    //! Draw every miner's first timer. Called by run().
    void start();
    //! Process the next event. Returns false once the queue is exhausted or the drain window is over.
    bool step();
    //! start(), then step() until done, then collect the result.
    SimResult run();
    SimResult result() const;

    std::span<const Event> on_timer_expiry(MinerId miner, Millis now);
    std::span<const Event> on_block_message(MinerId receiver, BlockId block, MinerId sender, Millis now);
    std::span<const Event> on_require(MinerId responder, BlockId block, MinerId requester, Millis now);
    std::span<const Event> on_response(MinerId receiver, BlockId block, MinerId sender, Millis now);

    const chain::BlockTree& tree(MinerId v) const { return miners_[static_cast<std::size_t>(v)].tree; }
    const chain::Block& block(BlockId id) const { return blocks_.at(id); }
    std::size_t block_count() const { return blocks_.size(); }
    std::uint64_t protocol_errors() const { return protocol_errors_; }
    std::size_t pending_events() const { return queue_.size(); }
    bool stopped() const { return stopped_; }
    Millis now() const { return now_; }
    const SimConfig& config() const { return config_; }

private:
    struct Link {
        MinerId peer;
        double latency;
    };
    struct MinerState {
        chain::BlockTree tree;
        std::vector<Link> links;
        std::uint32_t timer_generation{0};
        Millis timer_deadline{-1};
        Rng rng;
        //! Who sent each block currently held as an orphan.
        std::unordered_map<BlockId, MinerId> orphan_sender;
        std::uint64_t mined{0};

        explicit MinerState(std::uint64_t seed) : rng(seed) {}
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const
        {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    void emit(Event e);
    void arm_timer(MinerState& m, MinerId v, Millis from);
    double latency(MinerId u, MinerId v) const;
    void handle_block(MinerId receiver, BlockId block, MinerId sender, Millis now);
    void on_height(std::uint32_t h, Millis now);

    SimConfig config_;
    std::vector<MinerState> miners_;
    std::vector<chain::Block> blocks_;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::vector<Event> scratch_;
    std::uint64_t next_seq_{0};
    std::uint64_t processed_{0};
    std::uint64_t protocol_errors_{0};
    std::uint64_t msg_block_{0}, msg_require_{0}, msg_response_{0};
    Millis now_{0};
    bool started_{false};
    bool stopped_{false};
    Millis drain_until_{0};
    double max_link_latency_{0};
};

/**
 * Convenience wrapper: Simulator(config, topology, latency).run().
 * @throws ConfigError on an invalid config, a disconnected overlay or a linked pair without latency.
 */
SimResult run_simulation(const SimConfig& config, const net::Topology& topology, const net::LatencyMatrix& latency);

} // namespace powtopo::engine
