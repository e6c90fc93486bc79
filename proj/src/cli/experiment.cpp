#include <powtopo/cli/experiment.hpp>
#include <powtopo/error.hpp>
#include <powtopo/kernels/minplus.hpp>
#include <powtopo/rng.hpp>
#include <powtopo/util/csv.hpp>

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace powtopo::cli {

namespace fs = std::filesystem;

Network build_network(const NetworkSpec& spec)
{
    Network net_;
    switch (spec.kind) {
    case NetworkSpec::Kind::Dataset: {
        net_.miners = net::load_placement_csv(spec.placement_path);
        const auto table = net::CityLatencyTable::load_csv(spec.latency_path);
        net_.latency = table.for_miners(net_.miners, spec.same_city_floor_ms);
        break;
    }
    case NetworkSpec::Kind::Uniform:
        net_.miners = net::anonymous_miners(spec.n);
        net_.latency = net::LatencyMatrix::uniform(spec.n, spec.latency_ms);
        break;
    case NetworkSpec::Kind::Clusters: {
        net_.miners = net::anonymous_miners(spec.n);
        const auto k = static_cast<std::size_t>(std::llround(spec.fraction * static_cast<double>(spec.n)));
        std::vector<int> label(spec.n, 2);
        for (std::size_t v = 0; v < k; ++v) label[v] = 1;
        for (std::size_t v = 0; v < spec.n; ++v) net_.miners[v].city = label[v] == 1 ? "cluster1" : "cluster2";
        net_.latency = net::LatencyMatrix::clusters(label, spec.intra_ms, spec.inter_ms);
        break;
    }
    }
    return net_;
}

std::vector<std::uint64_t> run_seeds(std::uint64_t root, std::size_t runs)
{
    std::vector<std::uint64_t> out(runs);
    for (std::size_t i = 0; i < runs; ++i) out[i] = derive_seed(root, StreamTag::Run, i);
    return out;
}

RunOutput run_once(const ExperimentConfig& cfg, const Network& network, std::uint64_t run_seed)
{
    RunOutput out;
    const std::uint64_t topo_seed = derive_seed(run_seed, StreamTag::Topology);
    out.topology = net::build_topology(cfg.policy, network.miners, topo_seed);
    engine::SimConfig sim = cfg.sim;
    sim.n = network.miners.size();
    sim.seed = run_seed;
    out.result = engine::run_simulation(sim, out.topology, network.latency);
    out.report = metrics::compute_rewards(out.result, network.miners, sim.discard_tail);
    return out;
}

std::vector<Cell> sweep_cells(const ExperimentConfig& cfg)
{
    std::vector<Cell> cells;
    if (cfg.sweep.empty()) {
        cells.push_back(Cell{{}, ""});
        return cells;
    }
    std::vector<std::size_t> idx(cfg.sweep.size(), 0);
    for (;;) {
        Cell c;
        for (std::size_t a = 0; a < cfg.sweep.size(); ++a) {
            const double v = cfg.sweep[a].values[idx[a]];
            c.values.push_back(v);
            if (!c.label.empty()) c.label += ",";
            std::ostringstream os;
            os << cfg.sweep[a].name() << "=" << v;
            c.label += os.str();
        }
        cells.push_back(std::move(c));
        std::size_t a = cfg.sweep.size();
        while (a-- > 0) {
            if (++idx[a] < cfg.sweep[a].values.size()) break;
            idx[a] = 0;
        }
        if (a == static_cast<std::size_t>(-1)) break;
    }
    return cells;
}

ExperimentConfig apply_cell(const ExperimentConfig& cfg, const Cell& cell)
{
    ExperimentConfig c = cfg;
    for (std::size_t a = 0; a < cfg.sweep.size(); ++a) {
        const auto& ax = cfg.sweep[a];
        const double v = cell.values.at(a);
        switch (ax.kind) {
        case SweepAxis::Kind::OverrideDegree: c.policy.overrides.at(ax.target).degree = static_cast<int>(v); break;
        case SweepAxis::Kind::InterLinkValue: c.policy.inter_links.at(ax.target).value = static_cast<int>(v); break;
        case SweepAxis::Kind::ClusterFraction: c.network.fraction = v; break;
        case SweepAxis::Kind::InterLatency: c.network.inter_ms = v; break;
        }
    }
    return c;
}

void write_file_atomic(const std::string& path, const std::string& content)
{
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

namespace {

std::string utc_now()
{
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string run_name(std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%03zu.csv", i);
    return buf;
}

std::string cell_name(std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "cell_%03zu", i);
    return buf;
}

struct CellState {
    ExperimentConfig cfg;
    Network network;
    std::vector<metrics::RewardReport> reports;
    std::vector<std::vector<double>> group_means; //!< per run, per column
    std::string error;
    std::mutex mu;
};

} // namespace

std::size_t run_experiment(const ExperimentConfig& cfg, std::ostream& log)
{
    const std::string started = utc_now();
    const auto cells = sweep_cells(cfg);
    const auto seeds = run_seeds(cfg.seed, cfg.runs);
    const bool sweeping = !cfg.sweep.empty();

    // Summary columns: topology groups, plus the two clusters of a cluster network.
    std::vector<std::string> columns;
    for (const auto& g : cfg.policy.groups) columns.push_back(g.name);
    const bool clusters = cfg.network.kind == NetworkSpec::Kind::Clusters;
    if (clusters) {
        columns.push_back("cluster1");
        columns.push_back("cluster2");
    }

    std::vector<std::unique_ptr<CellState>> state;
    for (const auto& cell : cells) {
        auto s = std::make_unique<CellState>();
        s->cfg = apply_cell(cfg, cell);
        try {
            s->network = build_network(s->cfg.network);
            if (!s->cfg.sim.hash_rates.empty() && s->cfg.sim.hash_rates.size() != s->network.miners.size())
                throw ConfigError("sim.hash_rates must have one entry per miner");
        } catch (const std::exception& e) {
            if (!sweeping) throw;
            s->error = e.what();
        }
        s->reports.resize(cfg.runs);
        s->group_means.resize(cfg.runs);
        state.push_back(std::move(s));
    }

    std::atomic<std::size_t> next{0};
    std::mutex log_mu;
    const std::size_t tasks = cells.size() * cfg.runs;
    auto worker = [&] {
        for (;;) {
            const std::size_t t = next++;
            if (t >= tasks) return;
            auto& s = *state[t / cfg.runs];
            const std::size_t run = t % cfg.runs;
            {
                std::lock_guard lk(s.mu);
                if (!s.error.empty()) continue;
            }
            try {
                auto out = run_once(s.cfg, s.network, seeds[run]);
                const auto groups = net::resolve_groups(s.cfg.policy, s.network.miners,
                                                        derive_seed(seeds[run], StreamTag::Topology));
                std::vector<double> means;
                const auto mean_over = [&](auto pred) {
                    double sum = 0;
                    std::size_t k = 0;
                    for (const auto& m : out.report.miners)
                        if (pred(m)) {
                            sum += m.f_pct;
                            ++k;
                        }
                    return k ? sum / static_cast<double>(k) : 0.0;
                };
                for (const auto& members : groups.members) {
                    std::vector<char> in(s.network.miners.size(), 0);
                    for (MinerId v : members) in[static_cast<std::size_t>(v)] = 1;
                    means.push_back(mean_over([&](const metrics::MinerReward& m) { return in[static_cast<std::size_t>(m.miner_id)] != 0; }));
                }
                if (clusters) {
                    means.push_back(mean_over([](const metrics::MinerReward& m) { return m.city == "cluster1"; }));
                    means.push_back(mean_over([](const metrics::MinerReward& m) { return m.city == "cluster2"; }));
                }
                std::lock_guard lk(s.mu);
                s.reports[run] = std::move(out.report);
                s.group_means[run] = std::move(means);
                std::lock_guard lk2(log_mu);
                log << (sweeping ? cells[t / cfg.runs].label + " " : "") << "run " << run << " done: "
                    << out.result.final_chain.size() - 1 << " chain blocks, " << out.result.fork_count
                    << " off-chain, " << out.result.wall_events << " events\n";
            } catch (const std::exception& e) {
                std::lock_guard lk(s.mu);
                if (s.error.empty()) s.error = "run " + std::to_string(run) + ": " + e.what();
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, tasks));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::size_t failed = 0;
    std::ostringstream sweep_csv;
    sweep_csv << "cell";
    for (const auto& ax : cfg.sweep) sweep_csv << ',' << util::csv_field(ax.name());
    sweep_csv << ",status,runs,fork_rate";
    for (const auto& c : columns) sweep_csv << ',' << util::csv_field("f_mean:" + c);
    sweep_csv << '\n';
    nlohmann::json cell_list = nlohmann::json::array();

    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        auto& s = *state[ci];
        const std::string dir = sweeping ? (fs::path(cfg.output_dir) / cell_name(ci)).string() : cfg.output_dir;
        fs::create_directories(dir);
        sweep_csv << ci;
        for (double v : cells[ci].values) sweep_csv << ',' << util::fixed6(v);
        if (!s.error.empty()) {
            if (!sweeping) throw Error(s.error);
            ++failed;
            write_file_atomic((fs::path(dir) / "error.txt").string(), s.error + "\n");
            log << cells[ci].label << " failed: " << s.error << "\n";
            sweep_csv << ",error,0,";
            for (std::size_t k = 0; k < columns.size(); ++k) sweep_csv << ',';
            sweep_csv << '\n';
            cell_list.push_back({{"cell", cell_name(ci)}, {"label", cells[ci].label}, {"status", "error"}, {"error", s.error}});
            continue;
        }
        for (std::size_t r = 0; r < cfg.runs; ++r)
            write_file_atomic((fs::path(dir) / run_name(r)).string(), metrics::reward_csv(s.reports[r]));
        const auto agg = metrics::aggregate(s.reports);
        write_file_atomic((fs::path(dir) / "aggregate.csv").string(), metrics::aggregate_csv(agg));
        write_file_atomic((fs::path(dir) / "continents.csv").string(),
                          metrics::continent_csv(metrics::continent_summary(agg)));
        sweep_csv << ",ok," << cfg.runs << ',' << util::fixed6(agg.fork_rate_mean);
        for (std::size_t k = 0; k < columns.size(); ++k) {
            double m = 0;
            for (const auto& g : s.group_means) m += g[k];
            sweep_csv << ',' << util::fixed6(m / static_cast<double>(cfg.runs));
        }
        sweep_csv << '\n';
        cell_list.push_back({{"cell", sweeping ? cell_name(ci) : "."}, {"label", cells[ci].label}, {"status", "ok"}});
    }
    if (sweeping) write_file_atomic((fs::path(cfg.output_dir) / "sweep.csv").string(), sweep_csv.str());

    nlohmann::json manifest;
    manifest["artifact_version"] = POWTOPO_VERSION;
    manifest["seed_scheme"] = kSeedSchemeVersion;
    manifest["config_hash"] = fnv1a_hex(cfg.canonical);
    manifest["root_seed"] = cfg.seed;
    manifest["runs"] = cfg.runs;
    manifest["run_seeds"] = seeds;
    manifest["cells"] = cell_list;
    manifest["kernel"] = std::string(kernels::relax_row_name());
    manifest["started_at"] = started;
    manifest["finished_at"] = utc_now();
    write_file_atomic((fs::path(cfg.output_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    return failed;
}

} // namespace powtopo::cli
