#pragma once

#include <powtopo/cli/config.hpp>
#include <powtopo/metrics/rewards.hpp>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace powtopo::cli {

struct Network {
    std::vector<net::MinerSpec> miners;
    net::LatencyMatrix latency;
};

//! Load or synthesize the miners and their pairwise latencies.
Network build_network(const NetworkSpec& spec);

//! Per-run seeds derived from the root seed; run i's seed does not depend on the run count.
std::vector<std::uint64_t> run_seeds(std::uint64_t root, std::size_t runs);

struct RunOutput {
    metrics::RewardReport report;
    engine::SimResult result;
    net::Topology topology;
};

//! One simulation: topology from the run seed's topology stream, then the event simulation.
RunOutput run_once(const ExperimentConfig& cfg, const Network& network, std::uint64_t run_seed);

//! One point of a sweep grid.
struct Cell {
    std::vector<double> values; //!< one per axis
    std::string label;
};

std::vector<Cell> sweep_cells(const ExperimentConfig& cfg);
//! Copy of cfg with the cell's axis values applied.
ExperimentConfig apply_cell(const ExperimentConfig& cfg, const Cell& cell);

/**
 * Run every (cell, seed) pair, `jobs` at a time, and write the outputs under cfg.output_dir:
 * run_NNN.csv, aggregate.csv, continents.csv per cell (in cell_NNN/ when sweeping), plus
 * manifest.json and, when sweeping, sweep.csv. A failing cell writes error.txt and the others
 * continue. Returns the number of failed cells.
 */
std::size_t run_experiment(const ExperimentConfig& cfg, std::ostream& log);

//! Write `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace powtopo::cli
