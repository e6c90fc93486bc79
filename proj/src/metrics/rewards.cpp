#include <powtopo/error.hpp>
#include <powtopo/metrics/rewards.hpp>
#include <powtopo/util/csv.hpp>

#include <cmath>
#include <sstream>

namespace powtopo::metrics {

RewardReport compute_rewards(const engine::SimResult& result, const std::vector<net::MinerSpec>& miners,
                             std::uint32_t discard_tail)
{
    const std::size_t n = miners.size();
    if (result.per_miner_mined.size() != n) throw Error("miner list does not match the simulation result");
    const std::size_t chain_blocks = result.final_chain.size() - 1;
    if (chain_blocks <= discard_tail)
        throw Error("chain of " + std::to_string(chain_blocks) + " blocks is not longer than discard_tail " +
                    std::to_string(discard_tail));
    const std::size_t retained = chain_blocks - discard_tail;

    std::vector<char> in_chain(result.all_blocks.size(), 0);
    for (std::size_t h = 1; h <= retained; ++h) in_chain[result.final_chain[h]] = 1;
    const Millis cutoff = result.all_blocks[result.final_chain[retained]].mined_at;

    RewardReport rep;
    rep.miners.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        rep.miners[v].miner_id = miners[v].id;
        rep.miners[v].city = miners[v].city;
        rep.miners[v].continent = miners[v].continent;
    }
    std::uint64_t window = 0;
    for (std::size_t id = 1; id < result.all_blocks.size(); ++id) {
        const auto& b = result.all_blocks[id];
        if (b.mined_at > cutoff) continue;
        auto& m = rep.miners.at(static_cast<std::size_t>(b.miner_id));
        ++m.blocks_mined;
        ++window;
        if (in_chain[id]) ++m.blocks_in_chain;
    }
    for (auto& m : rep.miners) {
        m.f_pct = 100.0 * static_cast<double>(m.blocks_in_chain) / static_cast<double>(retained);
        m.w_pct = m.blocks_mined ? 100.0 * static_cast<double>(m.blocks_mined - m.blocks_in_chain) /
                                       static_cast<double>(m.blocks_mined)
                                 : 0.0;
    }
    rep.retained_length = retained;
    rep.fair_pct = 100.0 / static_cast<double>(n);
    rep.fork_rate = window ? static_cast<double>(window - retained) / static_cast<double>(window) : 0.0;
    rep.replica_disagreements = result.replica_disagreements;
    return rep;
}

AggregateReport aggregate(const std::vector<RewardReport>& reports)
{
    if (reports.empty()) throw Error("nothing to aggregate");
    const std::size_t n = reports.front().miners.size();
    for (const auto& r : reports) {
        if (r.miners.size() != n) throw Error("reports cover different miner sets");
        for (std::size_t v = 0; v < n; ++v)
            if (r.miners[v].miner_id != reports.front().miners[v].miner_id)
                throw Error("reports cover different miner sets");
    }
    const double k = static_cast<double>(reports.size());
    AggregateReport agg;
    agg.runs = reports.size();
    agg.fair_pct = reports.front().fair_pct;
    for (const auto& r : reports) agg.fork_rate_mean += r.fork_rate / k;
    const auto mean_ci = [&](auto get, double& mean, double& ci) {
        double s = 0;
        for (const auto& r : reports) s += get(r);
        mean = s / k;
        if (reports.size() < 2) {
            ci = 0;
            return;
        }
        double ss = 0;
        for (const auto& r : reports) ss += (get(r) - mean) * (get(r) - mean);
        ci = 1.96 * std::sqrt(ss / (k - 1)) / std::sqrt(k);
    };
    agg.miners.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        auto& row = agg.miners[v];
        const auto& m0 = reports.front().miners[v];
        row.miner_id = m0.miner_id;
        row.city = m0.city;
        row.continent = m0.continent;
        double unused;
        mean_ci([v](const RewardReport& r) { return static_cast<double>(r.miners[v].blocks_mined); }, row.blocks_mined, unused);
        mean_ci([v](const RewardReport& r) { return static_cast<double>(r.miners[v].blocks_in_chain); }, row.blocks_in_chain, unused);
        mean_ci([v](const RewardReport& r) { return r.miners[v].f_pct; }, row.f_mean, row.f_ci95);
        mean_ci([v](const RewardReport& r) { return r.miners[v].w_pct; }, row.w_mean, row.w_ci95);
    }
    return agg;
}

std::vector<ContinentRow> continent_summary(const AggregateReport& report)
{
    std::vector<ContinentRow> out;
    auto consider = [&](net::Continent c) {
        ContinentRow row;
        row.continent = c;
        for (const auto& m : report.miners) {
            if (m.continent != c) continue;
            ++row.miners;
            row.mean_f_pct += m.f_mean;
            if (m.f_mean > report.fair_pct) ++row.above_fair;
            else if (m.f_mean < report.fair_pct) ++row.below_fair;
        }
        if (row.miners == 0) return;
        row.mean_f_pct /= static_cast<double>(row.miners);
        row.gain = row.mean_f_pct / report.fair_pct;
        out.push_back(row);
    };
    for (net::Continent c : net::kContinents) consider(c);
    consider(net::Continent::None);
    return out;
}

std::string reward_csv(const RewardReport& report)
{
    std::ostringstream os;
    os << "miner_id,city,continent,blocks_mined,blocks_in_chain,f_pct,w_pct\n";
    for (const auto& m : report.miners)
        os << m.miner_id << ',' << util::csv_field(m.city) << ',' << net::to_string(m.continent) << ','
           << m.blocks_mined << ',' << m.blocks_in_chain << ',' << util::fixed6(m.f_pct) << ','
           << util::fixed6(m.w_pct) << '\n';
    return os.str();
}

std::string aggregate_csv(const AggregateReport& report)
{
    std::ostringstream os;
    os << "miner_id,city,continent,blocks_mined,blocks_in_chain,f_pct,w_pct,f_mean,f_ci95,w_mean,w_ci95\n";
    for (const auto& m : report.miners)
        os << m.miner_id << ',' << util::csv_field(m.city) << ',' << net::to_string(m.continent) << ','
           << util::fixed6(m.blocks_mined) << ',' << util::fixed6(m.blocks_in_chain) << ',' << util::fixed6(m.f_mean)
           << ',' << util::fixed6(m.w_mean) << ',' << util::fixed6(m.f_mean) << ',' << util::fixed6(m.f_ci95) << ','
           << util::fixed6(m.w_mean) << ',' << util::fixed6(m.w_ci95) << '\n';
    return os.str();
}

std::string continent_csv(const std::vector<ContinentRow>& rows)
{
    std::ostringstream os;
    os << "continent,miners,mean_f_pct,gain,above_fair,below_fair\n";
    for (const auto& r : rows)
        os << net::to_string(r.continent) << ',' << r.miners << ',' << util::fixed6(r.mean_f_pct) << ','
           << util::fixed6(r.gain) << ',' << r.above_fair << ',' << r.below_fair << '\n';
    return os.str();
}

} // namespace powtopo::metrics
