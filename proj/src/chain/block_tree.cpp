#include <powtopo/chain/block_tree.hpp>
#include <powtopo/error.hpp>

#include <algorithm>
#include <string>

namespace powtopo::chain {

const char* to_string(InsertKind kind)
{
    switch (kind) {
    case InsertKind::ExtendedTip: return "ExtendedTip";
    case InsertKind::SideBlock: return "SideBlock";
    case InsertKind::Orphan: return "Orphan";
    case InsertKind::Duplicate: return "Duplicate";
    }
    return "?";
}

BlockTree::BlockTree()
{
    slots_.resize(1);
    slots_[0] = BlockEntry{kGenesis, 0, 0.0, 0};
    entry_count_ = 1;
}

void BlockTree::ensure_slot(BlockId id)
{
    if (id >= slots_.size()) {
        std::size_t cap = std::max<std::size_t>(slots_.size() * 2, std::size_t{id} + 1);
        slots_.resize(cap, BlockEntry{Block{}, kAbsent, 0.0, 0});
    }
}

bool BlockTree::contains(BlockId id) const
{
    return id < slots_.size() && slots_[id].height != kAbsent;
}

bool BlockTree::is_orphan(BlockId id) const { return orphans_.count(id) != 0; }

std::optional<Block> BlockTree::find(BlockId id) const
{
    if (contains(id)) return slots_[id].block;
    if (auto it = orphans_.find(id); it != orphans_.end()) return it->second.block;
    return std::nullopt;
}

const BlockEntry& BlockTree::entry(BlockId id) const
{
    if (!contains(id)) throw Error("block " + std::to_string(id) + " is not in the tree");
    return slots_[id];
}

bool BlockTree::better(const BlockEntry& a, const BlockEntry& b) const
{
    if (a.height != b.height) return a.height > b.height;
    if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
    return a.arrival_order < b.arrival_order;
}

void BlockTree::attach(const Block& block, Millis arrival, std::uint64_t order)
{
    ensure_slot(block.id);
    auto& s = slots_[block.id];
    s = BlockEntry{block, slots_[block.parent_id].height + 1, arrival, order};
    ++entry_count_;
    if (better(s, slots_[tip_])) tip_ = block.id;
}

InsertOutcome BlockTree::insert(const Block& block, Millis arrival_time)
{
    InsertOutcome out;
    out.previous_tip = tip_;

    if (auto held = find(block.id)) {
        if (*held != block)
            throw MalformedInput("block " + std::to_string(block.id) + " conflicts with a held block of the same id");
        out.kind = InsertKind::Duplicate;
        return out;
    }
    if (block.id == kGenesisId || block.parent_id == block.id)
        throw MalformedInput("block " + std::to_string(block.id) + " has an invalid parent reference");
    if (arrival_time < block.mined_at)
        throw MalformedInput("block " + std::to_string(block.id) + " arrives before it was mined");
    if (arrival_time < last_arrival_)
        throw MalformedInput("arrival times must be non-decreasing");
    last_arrival_ = arrival_time;
    const std::uint64_t order = next_order_++;

    if (!contains(block.parent_id)) {
        orphans_.emplace(block.id, OrphanRec{block, arrival_time, order});
        waiting_[block.parent_id].push_back(block.id);
        BlockId missing = block.parent_id;
        for (auto it = orphans_.find(missing); it != orphans_.end(); it = orphans_.find(missing))
            missing = it->second.block.parent_id;
        out.kind = InsertKind::Orphan;
        out.missing_parent = missing;
        return out;
    }

    attach(block, arrival_time, order);
    out.kind = tip_ == block.id ? InsertKind::ExtendedTip : InsertKind::SideBlock;

    // Breadth-first over unblocked orphans; siblings in (arrival, order) order.
    std::vector<BlockId> frontier{block.id};
    for (std::size_t i = 0; i < frontier.size(); ++i) {
        auto w = waiting_.find(frontier[i]);
        if (w == waiting_.end()) continue;
        std::vector<OrphanRec> kids;
        kids.reserve(w->second.size());
        for (BlockId c : w->second) {
            auto o = orphans_.find(c);
            kids.push_back(o->second);
            orphans_.erase(o);
        }
        waiting_.erase(w);
        std::sort(kids.begin(), kids.end(), [](const OrphanRec& a, const OrphanRec& b) {
            if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
            return a.arrival_order < b.arrival_order;
        });
        for (const auto& k : kids) {
            attach(k.block, k.arrival_time, k.arrival_order);
            out.promoted.push_back(k.block.id);
            frontier.push_back(k.block.id);
        }
    }
    out.tip_changed = tip_ != out.previous_tip;
    return out;
}

std::vector<BlockId> BlockTree::longest_chain() const
{
    std::vector<BlockId> chain(tip_height() + 1);
    BlockId cur = tip_;
    for (std::size_t i = chain.size(); i-- > 0;) {
        chain[i] = cur;
        cur = slots_[cur].block.parent_id;
    }
    return chain;
}

BlockId BlockTree::ancestor_at(std::uint32_t height) const
{
    if (height > tip_height()) throw Error("height above tip");
    BlockId cur = tip_;
    while (slots_[cur].height > height) cur = slots_[cur].block.parent_id;
    return cur;
}

} // namespace powtopo::chain
