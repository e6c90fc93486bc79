#include <powtopo/error.hpp>
#include <powtopo/metrics/rewards.hpp>

#include <doctest.h>

#include <numeric>

using namespace powtopo;
using namespace powtopo::metrics;

namespace {

// Chain of `len` blocks (ids 1..len) mined at t = 10 * height by `owner(h)`.
engine::SimResult chain_result(std::size_t n, std::size_t len, MinerId (*owner)(std::size_t))
{
    engine::SimResult r;
    r.per_miner_mined.assign(n, 0);
    r.all_blocks.push_back(chain::kGenesis);
    r.final_chain.push_back(0);
    for (std::size_t h = 1; h <= len; ++h) {
        const auto id = static_cast<BlockId>(h);
        const MinerId m = owner(h);
        r.all_blocks.push_back({id, id - 1, m, 10.0 * static_cast<double>(h)});
        r.final_chain.push_back(id);
        ++r.per_miner_mined[static_cast<std::size_t>(m)];
    }
    return r;
}

void add_side(engine::SimResult& r, BlockId parent, MinerId m, Millis t)
{
    const auto id = static_cast<BlockId>(r.all_blocks.size());
    r.all_blocks.push_back({id, parent, m, t});
    ++r.per_miner_mined[static_cast<std::size_t>(m)];
    ++r.fork_count;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("single miner keeps everything")
{
    const auto r = chain_result(1, 200, [](std::size_t) { return MinerId{0}; });
    const auto rep = compute_rewards(r, net::anonymous_miners(1), 100);
    CHECK(rep.retained_length == 100);
    CHECK(rep.miners[0].f_pct == 100.0);
    CHECK(rep.miners[0].w_pct == 0.0);
    CHECK(rep.miners[0].blocks_mined == 100);
    CHECK(rep.fair_pct == 100.0);
    CHECK(rep.fork_rate == 0.0);
}

TEST_CASE("hand-built counts")
{
    // Chain of 10 retained blocks plus 2 discarded; A = miner 0 owns heights 1..4.
    auto r = chain_result(2, 12, [](std::size_t h) { return h <= 4 ? MinerId{0} : MinerId{1}; });
    add_side(r, 2, 0, 35.0);  // off-chain, inside the window
    add_side(r, 11, 0, 125.0); // after the last retained block: not counted
    add_side(r, 11, 1, 100.0); // exactly at the cutoff: counted
    const auto rep = compute_rewards(r, net::anonymous_miners(2), 2);
    REQUIRE(rep.retained_length == 10);
    const auto& a = rep.miners[0];
    CHECK(a.blocks_in_chain == 4);
    CHECK(a.blocks_mined == 5);
    CHECK(a.f_pct == doctest::Approx(40.0));
    CHECK(a.w_pct == doctest::Approx(20.0));
    const auto& b = rep.miners[1];
    CHECK(b.blocks_in_chain == 6);
    CHECK(b.blocks_mined == 7);
    CHECK(a.f_pct + b.f_pct == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(rep.fork_rate == doctest::Approx(2.0 / 12.0));
    CHECK(rep.fair_pct == 50.0);
}

TEST_CASE("chain too short or miners mismatched")
{
    const auto r = chain_result(1, 100, [](std::size_t) { return MinerId{0}; });
    CHECK_THROWS_AS(compute_rewards(r, net::anonymous_miners(1), 100), Error);
    CHECK_THROWS_AS(compute_rewards(r, net::anonymous_miners(2), 10), Error);
}

TEST_CASE("tail discard perturbs F by at most tail / retained")
{
    const auto r = chain_result(3, 400, [](std::size_t h) { return static_cast<MinerId>((h * h) % 3); });
    const auto a = compute_rewards(r, net::anonymous_miners(3), 0);
    const auto b = compute_rewards(r, net::anonymous_miners(3), 50);
    for (std::size_t v = 0; v < 3; ++v)
        CHECK(std::abs(a.miners[v].f_pct - b.miners[v].f_pct) <= 100.0 * 50 / 350 + 1e-12);
}

TEST_CASE("aggregate")
{
    RewardReport r1, r2;
    for (auto* r : {&r1, &r2}) {
        r->miners.resize(2);
        r->miners[0].miner_id = 0;
        r->miners[1].miner_id = 1;
        r->fair_pct = 50;
    }
    r1.miners[0].f_pct = 0.4;
    r2.miners[0].f_pct = 0.6;
    r1.fork_rate = 0.1;
    r2.fork_rate = 0.3;

    const auto one = aggregate({r1});
    CHECK(one.runs == 1);
    CHECK(one.miners[0].f_mean == 0.4);
    CHECK(one.miners[0].f_ci95 == 0.0);

    const auto two = aggregate({r1, r2});
    CHECK(two.miners[0].f_mean == doctest::Approx(0.5));
    CHECK(two.miners[0].f_ci95 == doctest::Approx(1.96 * std::sqrt(0.02) / std::sqrt(2.0)));
    CHECK(two.fork_rate_mean == doctest::Approx(0.2));

    RewardReport bad = r1;
    bad.miners[1].miner_id = 7;
    CHECK_THROWS_AS(aggregate({r1, bad}), Error);
    bad.miners.pop_back();
    CHECK_THROWS_AS(aggregate({r1, bad}), Error);
    CHECK_THROWS_AS(aggregate({}), Error);
}

TEST_CASE("continent summary")
{
    AggregateReport agg;
    agg.runs = 1;
    agg.fair_pct = 25;
    const net::Continent cs[] = {net::Continent::EU, net::Continent::EU, net::Continent::AS, net::Continent::NA};
    for (int i = 0; i < 4; ++i) {
        AggregateRow row;
        row.miner_id = i;
        row.continent = cs[i];
        row.f_mean = 25;
        agg.miners.push_back(row);
    }
    auto rows = continent_summary(agg);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].continent == net::Continent::EU);
    CHECK(rows[0].miners == 2);
    for (const auto& c : rows) CHECK(c.gain == doctest::Approx(1.0));

    agg.miners[0].f_mean = 35;
    agg.miners[2].f_mean = 15;
    rows = continent_summary(agg);
    CHECK(rows[0].gain == doctest::Approx(1.2));
    CHECK(rows[0].above_fair == 1);
    CHECK(rows[1].continent == net::Continent::NA);
    CHECK(rows[2].gain == doctest::Approx(0.6));
    CHECK(rows[2].below_fair == 1);
}

TEST_CASE("csv layout")
{
    auto r = chain_result(2, 12, [](std::size_t h) { return static_cast<MinerId>(h % 2); });
    std::vector<net::MinerSpec> miners{{0, "Frankfurt", net::Continent::EU}, {1, "Sao Paulo, SP", net::Continent::SA}};
    const auto rep = compute_rewards(r, miners, 2);
    const auto csv = reward_csv(rep);
    CHECK(csv.rfind("miner_id,city,continent,blocks_mined,blocks_in_chain,f_pct,w_pct\n", 0) == 0);
    CHECK(csv.find("0,Frankfurt,EU,5,5,50.000000,0.000000\n") != std::string::npos);
    CHECK(csv.find("1,\"Sao Paulo, SP\",SA,5,5,50.000000,0.000000\n") != std::string::npos);
    CHECK(compute_rewards(r, miners, 2).miners[0].f_pct == rep.miners[0].f_pct);

    const auto agg = aggregate({rep, rep});
    const auto acsv = aggregate_csv(agg);
    CHECK(acsv.rfind("miner_id,city,continent,blocks_mined,blocks_in_chain,f_pct,w_pct,f_mean,f_ci95,w_mean,w_ci95\n", 0) == 0);
    CHECK(acsv.find("50.000000,0.000000,50.000000,0.000000,0.000000,0.000000") != std::string::npos);
    CHECK(continent_csv(continent_summary(agg)).find("EU") != std::string::npos);
}

}
