#pragma once

#include <powtopo/net/latency.hpp>
#include <powtopo/types.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace powtopo::net {

/** Undirected simple graph on miners 0..n-1. */
class Topology {
public:
    Topology() = default;
    explicit Topology(std::size_t n) : adj_(n) {}

    static Topology complete(std::size_t n);

    std::size_t size() const { return adj_.size(); }
    //! Adds {u,v}; self-loops are rejected, repeated edges ignored. Returns true if new.
    bool add_edge(MinerId u, MinerId v);
    bool has_edge(MinerId u, MinerId v) const;
    //! Sorted neighbor list.
    const std::vector<MinerId>& neighbors(MinerId v) const { return adj_[static_cast<std::size_t>(v)]; }
    std::size_t degree(MinerId v) const { return neighbors(v).size(); }
    std::size_t edge_count() const;
    //! Edges as (u, v) with u < v, lexicographic.
    std::vector<std::pair<MinerId, MinerId>> edges() const;

    bool connected() const;
    //! Connected components, each sorted, ordered by smallest member.
    std::vector<std::vector<MinerId>> components() const;

    friend bool operator==(const Topology&, const Topology&) = default;

private:
    std::vector<std::vector<MinerId>> adj_;
};

/** Which miners a rule applies to. */
struct Selector {
    enum class Kind { All, Rest, Continents, Cities, Ids, RandomFraction, Group };
    Kind kind{Kind::All};
    std::vector<Continent> continents;
    std::vector<std::string> cities;
    std::vector<MinerId> ids;
    double fraction{0.0};
    std::string group;
};

struct IntraRule {
    enum class Kind { None, Complete, RandomOutDegree };
    Kind kind{Kind::None};
    int degree{0};
};

struct GroupSpec {
    std::string name;
    Selector members;
    IntraRule intra;
};

//! Links between two groups. `to` may be "*" for every miner outside `from`.
struct InterLink {
    enum class Kind { Count, RandomOutDegree };
    std::string from;
    std::string to;
    Kind kind{Kind::Count};
    int value{0};
};

//! Out-degree replacing the degree of every RandomOutDegree rule the selected miners draw from.
struct DegreeOverride {
    Selector members;
    int degree{0};
};

/**
 * Topology construction policy. Groups are resolved in order and must partition the miners;
 * a Group selector is only meaningful inside overrides.
 */
struct TopologyPolicy {
    std::vector<GroupSpec> groups;
    std::vector<InterLink> inter_links;
    std::vector<DegreeOverride> overrides;

    //! Every miner draws `degree` random targets among all others.
    static TopologyPolicy random_out_degree(int degree);
    static TopologyPolicy complete();
};

/** Group membership after resolving a policy's selectors. */
struct ResolvedGroups {
    std::vector<std::string> names;
    std::vector<std::vector<MinerId>> members;
    std::vector<int> group_of; //!< per miner
};

ResolvedGroups resolve_groups(const TopologyPolicy& policy, const std::vector<MinerSpec>& miners,
                              std::uint64_t topology_seed);

/**
 * Build the overlay. Every (rule, miner) pair draws from its own random stream derived from
 * topology_seed, and picks are prefixes of a Fisher-Yates shuffle of the ascending candidate
 * list, so a degree override leaves every other miner's draws untouched and a smaller degree
 * picks a subset of a larger one.
 * @throws ConfigError on unknown groups, non-partitioning selectors, a degree not smaller than
 *         its target set, or a bridge count above the number of available pairs.
 */
Topology build_topology(const TopologyPolicy& policy, const std::vector<MinerSpec>& miners,
                        std::uint64_t topology_seed);

/**
 * All-pairs minimum delivery time where every hop costs link latency plus validation_delay.
 * @throws ConfigError if the overlay is disconnected (naming a component) or a linked pair has
 *         no usable latency.
 */
DeltaMatrix delta_matrix(const Topology& topology, const LatencyMatrix& latency, double validation_delay);

//! Median of l(u,v) over the overlay's edges.
double median_edge_latency(const Topology& topology, const LatencyMatrix& latency);

} // namespace powtopo::net
