#pragma once

#include <powtopo/types.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

namespace powtopo::chain {

struct Block {
    BlockId id{kGenesisId};
    BlockId parent_id{kGenesisId};
    MinerId miner_id{kNoMiner};
    Millis mined_at{0.0};

    friend bool operator==(const Block&, const Block&) = default;
};

//! The genesis block shared by every replica.
inline constexpr Block kGenesis{kGenesisId, kGenesisId, kNoMiner, 0.0};

struct BlockEntry {
    Block block;
    std::uint32_t height{0};
    Millis arrival_time{0.0};
    //! Per-replica processing index; breaks exact arrival-time ties.
    std::uint64_t arrival_order{0};
};

enum class InsertKind { ExtendedTip, SideBlock, Orphan, Duplicate };

const char* to_string(InsertKind kind);

struct InsertOutcome {
    InsertKind kind{InsertKind::Duplicate};
    //! Set for Orphan: the nearest ancestor this replica holds neither as entry nor as orphan.
    BlockId missing_parent{kGenesisId};
    //! Orphans attached as a consequence of this insertion, in the order they were attached.
    std::vector<BlockId> promoted;
    bool tip_changed{false};
    BlockId previous_tip{kGenesisId};
};

/**
 * One miner's replica of the block tree.
 *
 * Entries are stored densely by block id, so ids are expected to be small consecutive integers
 * (the simulator allocates them that way). Orphans are kept apart until their parent arrives.
 */
class BlockTree {
public:
    BlockTree();

    /**
     * Insert a block received (or mined) at arrival_time.
     * Arrival times must be non-decreasing across calls. Promoted orphans keep the arrival time
     * and order index they had when they first arrived.
     * @throws MalformedInput on a conflicting duplicate, a self-parented block, a block that
     *         arrives before it was mined, or an arrival time earlier than a previous one.
     */
    InsertOutcome insert(const Block& block, Millis arrival_time);

    //! Block ids from genesis to tip.
    std::vector<BlockId> longest_chain() const;

    //! Id of the tip's ancestor at the given height (height <= tip height).
    BlockId ancestor_at(std::uint32_t height) const;

    bool contains(BlockId id) const;
    bool is_orphan(BlockId id) const;
    //! Entry or orphan with this id, if held at all.
    std::optional<Block> find(BlockId id) const;
    const BlockEntry& entry(BlockId id) const;

    BlockId tip() const { return tip_; }
    std::uint32_t tip_height() const { return slots_[tip_].height; }
    std::size_t entry_count() const { return entry_count_; }
    std::size_t orphan_count() const { return orphans_.size(); }

    //! Entries in id order.
    template <typename F>
    void for_each_entry(F&& f) const
    {
        for (const auto& s : slots_)
            if (s.height != kAbsent) f(s);
    }

private:
    static constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();

    struct OrphanRec {
        Block block;
        Millis arrival_time;
        std::uint64_t arrival_order;
    };

    bool better(const BlockEntry& a, const BlockEntry& b) const;
    void attach(const Block& block, Millis arrival, std::uint64_t order);
    void ensure_slot(BlockId id);

    std::vector<BlockEntry> slots_;
    std::unordered_map<BlockId, OrphanRec> orphans_;
    std::unordered_map<BlockId, std::vector<BlockId>> waiting_;
    BlockId tip_{kGenesisId};
    std::size_t entry_count_{0};
    std::uint64_t next_order_{1};
    Millis last_arrival_{0.0};
};

} // namespace powtopo::chain
