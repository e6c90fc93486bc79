#pragma once

#include <powtopo/engine/simulator.hpp>
#include <powtopo/net/latency.hpp>
#include <powtopo/net/topology.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace powtopo::cli {

struct NetworkSpec {
    enum class Kind { Dataset, Uniform, Clusters };
    Kind kind{Kind::Dataset};
    std::string placement_path;
    std::string latency_path;
    double same_city_floor_ms{0.5};
    std::size_t n{0};
    double latency_ms{10.0};  //!< uniform
    double fraction{0.5};     //!< clusters: share of miners in cluster 1
    double intra_ms{1.0};
    double inter_ms{100.0};
};

struct SweepAxis {
    enum class Kind { OverrideDegree, InterLinkValue, ClusterFraction, InterLatency };
    Kind kind{Kind::OverrideDegree};
    std::size_t target{0};  //!< override or inter-link index
    std::vector<double> values;

    std::string name() const;
};

struct ExperimentConfig {
    engine::SimConfig sim;  //!< n and seed are filled in per run
    NetworkSpec network;
    net::TopologyPolicy policy;
    std::size_t runs{1};
    std::uint64_t seed{1};
    std::size_t jobs{1};
    std::string output_dir{"out"};
    std::vector<SweepAxis> sweep;
    //! Canonical JSON of the parsed input (keys sorted), used for hashing.
    std::string canonical;
};

/**
 * Parse and validate a JSON experiment file. Relative data paths are resolved against the
 * file's directory.
 * @throws ConfigError with the offending key path.
 */
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");

//! FNV-1a 64-bit hash, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

} // namespace powtopo::cli
