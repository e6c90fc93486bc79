#include <powtopo/engine/simulator.hpp>
#include <powtopo/error.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace powtopo;
using namespace powtopo::engine;

namespace {

SimConfig config(std::size_t n, double mean = 1000, double c = 0, std::uint32_t target = 200)
{
    SimConfig s;
    s.n = n;
    s.mean_interblock = mean;
    s.validation_delay = c;
    s.target_chain_length = target;
    s.discard_tail = 10;
    s.seed = 1;
    return s;
}

std::vector<Event> of_kind(std::span<const Event> ev, EventKind k)
{
    std::vector<Event> out;
    for (const auto& e : ev)
        if (e.kind == k) out.push_back(e);
    return out;
}

} // namespace

TEST_SUITE("engine") {

TEST_CASE("config validation")
{
    auto s = config(3);
    CHECK_NOTHROW(s.validate());
    s.discard_tail = s.target_chain_length;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = config(3);
    s.hash_rates = {1, 2};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.hash_rates = {1, 2, 0};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = config(3);
    s.mean_interblock = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("timer expiry broadcasts with additive delay and redraws the timer")
{
    net::Topology star(4);
    for (MinerId v = 1; v < 4; ++v) star.add_edge(0, v);
    net::LatencyMatrix l(4, 100);
    l.set(0, 1, 5);
    l.set(0, 2, 7);
    l.set(0, 3, 9);
    Simulator sim(config(4), star, l);
    const auto ev = sim.on_timer_expiry(0, 100);
    auto blocks = of_kind(ev, EventKind::BlockMsg);
    REQUIRE(blocks.size() == 3);
    std::vector<double> times;
    for (const auto& e : blocks) times.push_back(e.time);
    std::sort(times.begin(), times.end());
    CHECK(times == std::vector<double>{105, 107, 109});
    auto timers = of_kind(ev, EventKind::TimerExpiry);
    REQUIRE(timers.size() == 1);
    CHECK(timers[0].time > 100);

    // Mining continues on top of the miner's own block.
    CHECK(sim.tree(0).tip() == 1);
    sim.on_timer_expiry(0, 150);
    CHECK(sim.block(2).parent_id == 1);
    CHECK(sim.tree(0).tip_height() == 2);
}

TEST_CASE("simultaneous blocks fork")
{
    Simulator sim(config(2), net::Topology::complete(2), net::LatencyMatrix::uniform(2, 10));
    sim.on_timer_expiry(0, 50);
    sim.on_timer_expiry(1, 50);
    CHECK(sim.block(1).parent_id == kGenesisId);
    CHECK(sim.block(2).parent_id == kGenesisId);
    // Each keeps its own block: the other arrives later at equal height.
    sim.on_block_message(0, 2, 1, 60);
    sim.on_block_message(1, 1, 0, 60);
    CHECK(sim.tree(0).tip() == 1);
    CHECK(sim.tree(1).tip() == 2);
}

TEST_CASE("tip-extending block resets the timer and relays to all but the sender")
{
    Simulator sim(config(4, 1000, 1), net::Topology::complete(4), net::LatencyMatrix::uniform(4, 10));
    sim.on_timer_expiry(0, 0);
    const auto ev = sim.on_block_message(1, 1, 0, 11);
    auto relays = of_kind(ev, EventKind::BlockMsg);
    CHECK(relays.size() == 2);
    for (const auto& e : relays) {
        CHECK(e.receiver != 0);
        CHECK(e.time == 11 + 10 + 1);
    }
    CHECK(of_kind(ev, EventKind::TimerExpiry).size() == 1);
    CHECK(sim.on_block_message(1, 1, 2, 22).empty());
}

TEST_CASE("orphan triggers one require; a response with an unknown parent triggers another")
{
    Simulator sim(config(2, 1000, 1), net::Topology::complete(2), net::LatencyMatrix::uniform(2, 10));
    for (int i = 0; i < 4; ++i) sim.on_timer_expiry(0, i);
    // B has nothing; block 4 arrives first.
    auto ev = sim.on_block_message(1, 4, 0, 20);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].kind == EventKind::Require);
    CHECK(ev[0].receiver == 0);
    CHECK(ev[0].block == 3);
    CHECK(ev[0].time == 30);

    auto resp = sim.on_require(0, 3, 1, 30);
    REQUIRE(resp.size() == 1);
    CHECK(resp[0].kind == EventKind::Response);
    CHECK(resp[0].time == 30 + 1 + 10 + 1);

    int round_trips = 1;
    BlockId want = 3;
    Millis t = 42;
    for (;;) {
        auto r = sim.on_response(1, want, 0, t);
        auto req = of_kind(r, EventKind::Require);
        if (req.empty()) break;
        REQUIRE(req.size() == 1);
        CHECK(req[0].block == want - 1);
        want = req[0].block;
        ++round_trips;
        t += 22;
    }
    CHECK(round_trips == 3);
    CHECK(sim.tree(1).tip() == 4);
    CHECK(sim.tree(1).tip_height() == 4);
    CHECK(sim.tree(1).orphan_count() == 0);
}

TEST_CASE("require for an unknown block is dropped and counted")
{
    Simulator sim(config(2), net::Topology::complete(2), net::LatencyMatrix::uniform(2, 10));
    sim.on_timer_expiry(0, 1);
    CHECK(sim.on_require(1, 1, 0, 5).empty());
    CHECK(sim.protocol_errors() == 1);
}

TEST_CASE("single miner: no forks")
{
    auto s = config(1, 100, 1, 100);
    const auto r = run_simulation(s, net::Topology(1), net::LatencyMatrix(1));
    CHECK(r.final_chain.size() == 101);
    CHECK(r.fork_count == 0);
    CHECK(r.per_miner_mined[0] == 100);
}

TEST_CASE("two miners, low latency: fair split and about 1% forks")
{
    double forks = 0, mined = 0, f0 = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto s = config(2, 1000, 1, 500);
        s.seed = seed;
        const auto r = run_simulation(s, net::Topology::complete(2), net::LatencyMatrix::uniform(2, 10));
        CHECK(r.final_chain.size() - 1 >= 500);
        CHECK(r.protocol_errors == 0);
        CHECK(r.per_miner_mined[0] + r.per_miner_mined[1] == r.all_blocks.size() - 1);
        forks += static_cast<double>(r.fork_count);
        mined += static_cast<double>(r.all_blocks.size() - 1);
        std::size_t by0 = 0;
        for (BlockId id : r.final_chain) by0 += r.all_blocks[id].miner_id == 0;
        f0 += static_cast<double>(by0) / static_cast<double>(r.final_chain.size() - 1);
    }
    CHECK(forks / mined < 0.03);
    CHECK(forks > 0);
    CHECK(f0 / 6 == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("deterministic replay")
{
    auto s = config(6, 300, 1, 300);
    s.seed = 77;
    net::Topology t(6);
    for (MinerId v = 0; v < 6; ++v) t.add_edge(v, (v + 1) % 6);
    auto l = net::LatencyMatrix::uniform(6, 20);
    const auto a = run_simulation(s, t, l);
    const auto b = run_simulation(s, t, l);
    CHECK(a.final_chain == b.final_chain);
    CHECK(a.all_blocks == b.all_blocks);
    CHECK(a.wall_events == b.wall_events);
    CHECK(a.end_time == b.end_time);
    s.seed = 78;
    const auto c = run_simulation(s, t, l);
    CHECK(c.all_blocks != a.all_blocks);
}

TEST_CASE("low-latency regime: fork fraction below 1%")
{
    // l + c <= m / (100 n)
    auto s = config(10, 10000, 1, 2000);
    const auto r = run_simulation(s, net::Topology::complete(10), net::LatencyMatrix::uniform(10, 9));
    CHECK(static_cast<double>(r.fork_count) / static_cast<double>(r.all_blocks.size() - 1) < 0.01);
}

TEST_CASE("no silent loss: chain blocks reach every replica")
{
    auto s = config(12, 120, 1, 400);
    net::Topology t(12);
    for (MinerId v = 0; v < 12; ++v) {
        t.add_edge(v, (v + 1) % 12);
        t.add_edge(v, (v + 5) % 12);
    }
    Simulator sim(s, t, net::LatencyMatrix::uniform(12, 15));
    const auto r = sim.run();
    CHECK(r.protocol_errors == 0);
    CHECK(r.replica_disagreements == 0);
    // Losing side blocks are not relayed, but every chain block mined before the drain window
    // reached every miner, and nothing older is stuck as an orphan.
    const Millis quiet = r.end_time - 200;
    for (MinerId v = 0; v < 12; ++v) {
        for (BlockId id : r.final_chain)
            if (r.all_blocks[id].mined_at < quiet) CHECK(sim.tree(v).contains(id));
        for (std::size_t id = 1; id < r.all_blocks.size(); ++id)
            if (r.all_blocks[id].mined_at < quiet) CHECK_FALSE(sim.tree(v).is_orphan(static_cast<BlockId>(id)));
    }
}

TEST_CASE("hash rates skew production")
{
    auto s = config(2, 1000, 0, 2000);
    s.hash_rates = {3e-3, 1e-3};
    const auto r = run_simulation(s, net::Topology::complete(2), net::LatencyMatrix::uniform(2, 1));
    const double share = static_cast<double>(r.per_miner_mined[0]) / static_cast<double>(r.all_blocks.size() - 1);
    CHECK(share == doctest::Approx(0.75).epsilon(0.05));
}

TEST_CASE("disconnected overlay is rejected")
{
    net::Topology t(3);
    t.add_edge(0, 1);
    CHECK_THROWS_AS(Simulator(config(3), t, net::LatencyMatrix::uniform(3, 1)), ConfigError);
    net::LatencyMatrix bad(3, 1);
    bad.set(0, 1, std::nan(""));
    CHECK_THROWS_AS(Simulator(config(3), net::Topology::complete(3), bad), ConfigError);
}

}
