// Command-line front end: simulations, sweeps, formulas and the round oracle.

#include <powtopo/cli/config.hpp>
#include <powtopo/cli/experiment.hpp>
#include <powtopo/cli/theory_command.hpp>
#include <powtopo/error.hpp>
#include <powtopo/net/topology.hpp>
#include <powtopo/rng.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "experiment JSON file")->required();
    cmd->add_option("--seed", o.seed, "root seed (overrides the config)");
    cmd->add_option("--out", o.out, "output directory (overrides the config)");
    cmd->add_option("--runs", o.runs, "number of seeded runs (overrides the config)")->check(CLI::PositiveNumber);
    cmd->add_option("--jobs", o.jobs, "parallel runs (overrides the config)")->check(CLI::PositiveNumber);
}

powtopo::cli::ExperimentConfig load(const Overrides& o)
{
    auto cfg = powtopo::cli::parse_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.output_dir = *o.out;
    if (o.runs) cfg.runs = *o.runs;
    if (o.jobs) cfg.jobs = *o.jobs;
    return cfg;
}

void add_theory_options(CLI::App* cmd, powtopo::cli::TheoryArgs& a)
{
    cmd->add_option("--p", a.p, "dominant cluster fraction");
    cmd->add_option("--p1", a.p1);
    cmd->add_option("--p2", a.p2);
    cmd->add_option("--p3", a.p3);
    cmd->add_option("--p-each", a.p_each, "size of each of the two equal clusters");
    cmd->add_option("--n", a.n, "number of miners");
    cmd->add_option("--eps", a.eps, "intra-cluster latency in rounds");
    cmd->add_option("--delta", a.delta, "inter-cluster latency in rounds");
    cmd->add_option("--from", a.from, "grid start");
    cmd->add_option("--to", a.to, "grid end");
    cmd->add_option("--step", a.step, "grid step");
    cmd->add_option("--rounds", a.rounds, "oracle rounds");
    cmd->add_option("--tail", a.tail, "oracle rounds ignored at the horizon");
    cmd->add_option("--seed", a.seed, "oracle root seed");
    cmd->add_option("--runs", a.runs, "oracle runs");
    cmd->add_option("--csv", a.csv_path, "also write the table here");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Proof-of-work mining simulator and reward analysis"};
    app.set_version_flag("--version", POWTOPO_VERSION);
    app.require_subcommand(1);

    Overrides sim_o, sweep_o;
    auto* simulate = app.add_subcommand("simulate", "run seeded simulations of one configuration");
    add_common(simulate, sim_o);
    auto* sweep = app.add_subcommand("sweep", "run every cell of the config's sweep grid");
    add_common(sweep, sweep_o);

    powtopo::cli::TheoryArgs theory_args, oracle_args, optimum_args;
    auto* theory = app.add_subcommand("theory", "evaluate closed-form rewards");
    theory->add_option("kind", theory_args.kind, "single | two | three | two-equal | oracle | optimum")->required();
    theory->add_option("model", theory_args.model, "model for oracle / optimum");
    add_theory_options(theory, theory_args);

    auto* oracle = app.add_subcommand("oracle", "round-model Monte Carlo against the formulas");
    oracle->add_option("model", oracle_args.model, "single | two")->required();
    add_theory_options(oracle, oracle_args);

    auto* optimum = app.add_subcommand("optimum", "grid search for the best cluster fraction");
    optimum->add_option("model", optimum_args.model, "two | three | two-equal")->required();
    add_theory_options(optimum, optimum_args);

    std::string v_config, v_placement, v_latency;
    int v_degree = 6;
    std::uint64_t v_seed = 1;
    auto* validate = app.add_subcommand("validate-data", "check placement and latency files");
    validate->add_option("--config", v_config, "take the data files from this config");
    validate->add_option("--placement", v_placement, "placement CSV");
    validate->add_option("--latency", v_latency, "latency CSV");
    validate->add_option("--degree", v_degree, "random out-degree for the median-link report");
    validate->add_option("--seed", v_seed, "seed for the median-link report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        if (*simulate || *sweep) {
            const bool is_sweep = static_cast<bool>(*sweep);
            auto cfg = load(is_sweep ? sweep_o : sim_o);
            if (is_sweep && cfg.sweep.empty()) throw powtopo::ConfigError("sweep: config has no sweep section");
            if (!is_sweep && !cfg.sweep.empty())
                throw powtopo::ConfigError("simulate: config has a sweep section; use the sweep command");
            const auto failed = powtopo::cli::run_experiment(cfg, std::cerr);
            std::cout << "wrote " << cfg.output_dir << "\n";
            if (failed) {
                std::cerr << failed << " sweep cell(s) failed; see error.txt in their directories\n";
                return kRuntime;
            }
        } else if (*theory) {
            powtopo::cli::theory_command(theory_args, std::cout);
        } else if (*oracle) {
            oracle_args.kind = "oracle";
            powtopo::cli::theory_command(oracle_args, std::cout);
        } else if (*optimum) {
            optimum_args.kind = "optimum";
            powtopo::cli::theory_command(optimum_args, std::cout);
        } else if (*validate) {
            if (!v_config.empty()) {
                const auto cfg = powtopo::cli::parse_config(v_config);
                if (cfg.network.kind != powtopo::cli::NetworkSpec::Kind::Dataset)
                    throw powtopo::ConfigError("validate-data: config does not use data files");
                v_placement = cfg.network.placement_path;
                v_latency = cfg.network.latency_path;
            }
            if (v_placement.empty() || v_latency.empty())
                throw powtopo::ConfigError("validate-data: give --config or both --placement and --latency");
            powtopo::cli::NetworkSpec spec;
            spec.placement_path = v_placement;
            spec.latency_path = v_latency;
            const auto network = powtopo::cli::build_network(spec);
            std::map<std::string, int> per_continent;
            for (const auto& m : network.miners) ++per_continent[std::string(powtopo::net::to_string(m.continent))];
            std::cout << "miners: " << network.miners.size() << "\n";
            for (const auto& [c, k] : per_continent) std::cout << "  " << c << ": " << k << "\n";
            const auto topo = powtopo::net::build_topology(
                powtopo::net::TopologyPolicy::random_out_degree(v_degree), network.miners,
                powtopo::derive_seed(v_seed, powtopo::StreamTag::Topology));
            std::cout << "all miner pairs have latency data\n"
                      << "random out-degree " << v_degree << ": " << topo.edge_count() << " edges, median link latency "
                      << powtopo::net::median_edge_latency(topo, network.latency) << " ms, max pair latency "
                      << network.latency.max_off_diagonal() << " ms\n";
        }
    } catch (const powtopo::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const powtopo::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const powtopo::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kOk;
}
