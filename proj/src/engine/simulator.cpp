#include <powtopo/engine/simulator.hpp>
#include <powtopo/error.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace powtopo::engine {

const char* to_string(EventKind kind)
{
    switch (kind) {
    case EventKind::TimerExpiry: return "timer";
    case EventKind::BlockMsg: return "block";
    case EventKind::Require: return "require";
    case EventKind::Response: return "response";
    }
    return "?";
}

void SimConfig::validate() const
{
    if (n == 0) throw ConfigError("sim.n must be >= 1");
    if (!(mean_interblock > 0) || !std::isfinite(mean_interblock))
        throw ConfigError("sim.mean_interblock_ms must be > 0");
    if (!(validation_delay >= 0) || !std::isfinite(validation_delay))
        throw ConfigError("sim.validation_delay_ms must be >= 0");
    if (target_chain_length <= discard_tail)
        throw ConfigError("sim.target_chain_length must exceed sim.discard_tail");
    if (!hash_rates.empty()) {
        if (hash_rates.size() != n) throw ConfigError("sim.hash_rates must have one entry per miner");
        for (double h : hash_rates)
            if (!(h > 0) || !std::isfinite(h)) throw ConfigError("sim.hash_rates entries must be > 0");
    }
}

double SimConfig::mean_for(MinerId v) const
{
    return hash_rates.empty() ? mean_interblock : 1.0 / hash_rates[static_cast<std::size_t>(v)];
}

Simulator::Simulator(SimConfig config, const net::Topology& topology, const net::LatencyMatrix& latency)
    : config_(std::move(config))
{
    config_.validate();
    const std::size_t n = config_.n;
    if (topology.size() != n) throw ConfigError("topology size does not match sim.n");
    if (latency.size() != n) throw ConfigError("latency matrix size does not match sim.n");
    if (!topology.connected()) {
        const auto comps = topology.components();
        throw ConfigError("overlay is disconnected; component containing miner " +
                          std::to_string(comps.back().front()) + " is isolated");
    }
    miners_.reserve(n);
    for (std::size_t v = 0; v < n; ++v) {
        miners_.emplace_back(derive_seed(config_.seed, StreamTag::Miner, v));
        for (MinerId w : topology.neighbors(static_cast<MinerId>(v))) {
            const double l = latency(v, static_cast<std::size_t>(w));
            if (!std::isfinite(l) || l < 0)
                throw ConfigError("no usable latency for linked pair (" + std::to_string(v) + ", " +
                                  std::to_string(w) + ")");
            miners_[v].links.push_back(Link{w, l});
            max_link_latency_ = std::max(max_link_latency_, l);
        }
    }
    blocks_.push_back(chain::kGenesis);
}

double Simulator::latency(MinerId u, MinerId v) const
{
    for (const auto& l : miners_[static_cast<std::size_t>(u)].links)
        if (l.peer == v) return l.latency;
    throw Error("miners " + std::to_string(u) + " and " + std::to_string(v) + " are not linked");
}

void Simulator::emit(Event e)
{
    e.seq = next_seq_++;
    scratch_.push_back(e);
    queue_.push(e);
}

void Simulator::arm_timer(MinerState& m, MinerId v, Millis from)
{
    ++m.timer_generation;
    if (stopped_) {
        m.timer_deadline = -1;
        return;
    }
    m.timer_deadline = from + m.rng.exponential(config_.mean_for(v));
    Event e;
    e.time = m.timer_deadline;
    e.kind = EventKind::TimerExpiry;
    e.receiver = v;
    e.timer_generation = m.timer_generation;
    emit(e);
}

void Simulator::start()
{
    if (started_) return;
    started_ = true;
    scratch_.clear();
    for (std::size_t v = 0; v < miners_.size(); ++v) arm_timer(miners_[v], static_cast<MinerId>(v), 0.0);
}

void Simulator::on_height(std::uint32_t h, Millis now)
{
    if (!stopped_ && h >= config_.target_chain_length) {
        stopped_ = true;
        drain_until_ = now + max_link_latency_ + 2 * config_.validation_delay;
    }
}

std::span<const Event> Simulator::on_timer_expiry(MinerId miner, Millis now)
{
    scratch_.clear();
    auto& m = miners_[static_cast<std::size_t>(miner)];
    const chain::Block b{static_cast<BlockId>(blocks_.size()), m.tree.tip(), miner, now};
    blocks_.push_back(b);
    ++m.mined;
    m.tree.insert(b, now);
    for (const auto& link : m.links) {
        Event e;
        e.time = now + link.latency + config_.validation_delay;
        e.kind = EventKind::BlockMsg;
        e.receiver = link.peer;
        e.sender = miner;
        e.block = b.id;
        emit(e);
        ++msg_block_;
    }
    on_height(m.tree.tip_height(), now);
    arm_timer(m, miner, now);
    return scratch_;
}

void Simulator::handle_block(MinerId receiver, BlockId id, MinerId sender, Millis now)
{
    auto& m = miners_[static_cast<std::size_t>(receiver)];
    const chain::Block& b = blocks_.at(id);
    const auto out = m.tree.insert(b, now);
    switch (out.kind) {
    case chain::InsertKind::Duplicate: return;
    case chain::InsertKind::Orphan: {
        m.orphan_sender.emplace(id, sender);
        Event e;
        e.time = now + latency(receiver, sender);
        e.kind = EventKind::Require;
        e.receiver = sender;
        e.sender = receiver;
        e.block = out.missing_parent;
        emit(e);
        ++msg_require_;
        return;
    }
    default: break;
    }

    std::vector<std::pair<BlockId, MinerId>> batch;
    batch.reserve(1 + out.promoted.size());
    batch.emplace_back(id, sender);
    for (BlockId p : out.promoted) {
        auto it = m.orphan_sender.find(p);
        batch.emplace_back(p, it == m.orphan_sender.end() ? kNoMiner : it->second);
        if (it != m.orphan_sender.end()) m.orphan_sender.erase(it);
    }
    if (!out.tip_changed) return;

    // Newly attached blocks on the new longest chain, lowest height first.
    std::vector<std::pair<BlockId, MinerId>> relay;
    for (BlockId cur = m.tree.tip();;) {
        auto it = std::find_if(batch.begin(), batch.end(), [cur](const auto& x) { return x.first == cur; });
        if (it == batch.end()) break;
        relay.push_back(*it);
        cur = m.tree.entry(cur).block.parent_id;
    }
    std::reverse(relay.begin(), relay.end());
    for (const auto& [rid, from] : relay) {
        for (const auto& link : m.links) {
            if (link.peer == from) continue;
            Event e;
            e.time = now + link.latency + config_.validation_delay;
            e.kind = EventKind::BlockMsg;
            e.receiver = link.peer;
            e.sender = receiver;
            e.block = rid;
            emit(e);
            ++msg_block_;
        }
    }
    on_height(m.tree.tip_height(), now);
    arm_timer(m, receiver, now);
}

std::span<const Event> Simulator::on_block_message(MinerId receiver, BlockId block, MinerId sender, Millis now)
{
    scratch_.clear();
    handle_block(receiver, block, sender, now);
    return scratch_;
}

std::span<const Event> Simulator::on_response(MinerId receiver, BlockId block, MinerId sender, Millis now)
{
    scratch_.clear();
    handle_block(receiver, block, sender, now);
    return scratch_;
}

std::span<const Event> Simulator::on_require(MinerId responder, BlockId block, MinerId requester, Millis now)
{
    scratch_.clear();
    const auto& m = miners_[static_cast<std::size_t>(responder)];
    if (!m.tree.find(block)) {
        ++protocol_errors_;
        return scratch_;
    }
    Event e;
    e.time = now + config_.validation_delay + latency(responder, requester) + config_.validation_delay;
    e.kind = EventKind::Response;
    e.receiver = requester;
    e.sender = responder;
    e.block = block;
    emit(e);
    ++msg_response_;
    return scratch_;
}

bool Simulator::step()
{
    while (!queue_.empty()) {
        const Event e = queue_.top();
        if (stopped_ && e.time > drain_until_) return false;
        queue_.pop();
        auto& m = miners_[static_cast<std::size_t>(e.receiver)];
        if (e.kind == EventKind::TimerExpiry && (stopped_ || e.timer_generation != m.timer_generation)) continue;
        now_ = e.time;
        ++processed_;
        switch (e.kind) {
        case EventKind::TimerExpiry: on_timer_expiry(e.receiver, e.time); break;
        case EventKind::BlockMsg: on_block_message(e.receiver, e.block, e.sender, e.time); break;
        case EventKind::Require: on_require(e.receiver, e.block, e.sender, e.time); break;
        case EventKind::Response: on_response(e.receiver, e.block, e.sender, e.time); break;
        }
        return true;
    }
    return false;
}

SimResult Simulator::run()
{
    start();
    while (step()) {
    }
    return result();
}

SimResult Simulator::result() const
{
    SimResult r;
    const std::size_t n = miners_.size();
    r.per_miner_mined.resize(n);
    MinerId obs = 0;
    for (std::size_t v = 0; v < n; ++v) {
        r.per_miner_mined[v] = miners_[v].mined;
        if (miners_[v].tree.tip_height() > miners_[static_cast<std::size_t>(obs)].tree.tip_height())
            obs = static_cast<MinerId>(v);
    }
    r.observer = obs;
    const auto& ot = miners_[static_cast<std::size_t>(obs)].tree;
    r.final_chain = ot.longest_chain();
    r.all_blocks = blocks_;
    r.fork_count = (blocks_.size() - 1) - (r.final_chain.size() - 1);
    r.wall_events = processed_;
    r.protocol_errors = protocol_errors_;
    r.end_time = now_;
    r.messages_block = msg_block_;
    r.messages_require = msg_require_;
    r.messages_response = msg_response_;
    if (r.final_chain.size() > config_.discard_tail + 1) {
        const auto h = static_cast<std::uint32_t>(r.final_chain.size() - 1 - config_.discard_tail);
        const BlockId want = r.final_chain[h];
        for (std::size_t v = 0; v < n; ++v) {
            const auto& t = miners_[v].tree;
            if (t.tip_height() < h || t.ancestor_at(h) != want) ++r.replica_disagreements;
        }
    }
    return r;
}

SimResult run_simulation(const SimConfig& config, const net::Topology& topology, const net::LatencyMatrix& latency)
{
    Simulator sim(config, topology, latency);
    return sim.run();
}

} // namespace powtopo::engine
