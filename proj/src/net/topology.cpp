#include <powtopo/net/topology.hpp>
#include <powtopo/error.hpp>
#include <powtopo/kernels/minplus.hpp>
#include <powtopo/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace powtopo::net {

Topology Topology::complete(std::size_t n)
{
    Topology t(n);
    for (std::size_t u = 0; u < n; ++u) {
        t.adj_[u].reserve(n - 1);
        for (std::size_t v = 0; v < n; ++v)
            if (u != v) t.adj_[u].push_back(static_cast<MinerId>(v));
    }
    return t;
}

bool Topology::add_edge(MinerId u, MinerId v)
{
    if (u == v) throw ConfigError("self-loop on miner " + std::to_string(u));
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= size() || static_cast<std::size_t>(v) >= size())
        throw ConfigError("edge endpoint out of range");
    auto& a = adj_[static_cast<std::size_t>(u)];
    auto it = std::lower_bound(a.begin(), a.end(), v);
    if (it != a.end() && *it == v) return false;
    a.insert(it, v);
    auto& b = adj_[static_cast<std::size_t>(v)];
    b.insert(std::lower_bound(b.begin(), b.end(), u), u);
    return true;
}

bool Topology::has_edge(MinerId u, MinerId v) const
{
    const auto& a = neighbors(u);
    return std::binary_search(a.begin(), a.end(), v);
}

std::size_t Topology::edge_count() const
{
    std::size_t s = 0;
    for (const auto& a : adj_) s += a.size();
    return s / 2;
}

std::vector<std::pair<MinerId, MinerId>> Topology::edges() const
{
    std::vector<std::pair<MinerId, MinerId>> out;
    for (std::size_t u = 0; u < adj_.size(); ++u)
        for (MinerId v : adj_[u])
            if (static_cast<std::size_t>(v) > u) out.emplace_back(static_cast<MinerId>(u), v);
    return out;
}

std::vector<std::vector<MinerId>> Topology::components() const
{
    std::vector<int> comp(size(), -1);
    std::vector<std::vector<MinerId>> out;
    for (std::size_t s = 0; s < size(); ++s) {
        if (comp[s] >= 0) continue;
        const int c = static_cast<int>(out.size());
        out.emplace_back();
        std::vector<MinerId> stack{static_cast<MinerId>(s)};
        comp[s] = c;
        while (!stack.empty()) {
            MinerId u = stack.back();
            stack.pop_back();
            out[c].push_back(u);
            for (MinerId v : neighbors(u)) {
                if (comp[static_cast<std::size_t>(v)] < 0) {
                    comp[static_cast<std::size_t>(v)] = c;
                    stack.push_back(v);
                }
            }
        }
        std::sort(out[c].begin(), out[c].end());
    }
    return out;
}

bool Topology::connected() const { return size() <= 1 || components().size() == 1; }

TopologyPolicy TopologyPolicy::random_out_degree(int degree)
{
    TopologyPolicy p;
    p.groups.push_back(GroupSpec{"all", Selector{}, IntraRule{IntraRule::Kind::RandomOutDegree, degree}});
    return p;
}

TopologyPolicy TopologyPolicy::complete()
{
    TopologyPolicy p;
    p.groups.push_back(GroupSpec{"all", Selector{}, IntraRule{IntraRule::Kind::Complete, 0}});
    return p;
}

namespace {

// Stream layout under the topology seed: (Selection, group) for random-fraction selectors,
// (Topology, rule, miner) for per-miner picks, (Topology, rule, kBridgeStream) for bridge counts.
constexpr std::uint64_t kInterRuleBase = 1u << 20;
constexpr std::uint64_t kBridgeStream = 0xffffffffULL;

bool selector_matches(const Selector& s, const MinerSpec& m)
{
    switch (s.kind) {
    case Selector::Kind::All:
    case Selector::Kind::Rest: return true;
    case Selector::Kind::Continents:
        return std::find(s.continents.begin(), s.continents.end(), m.continent) != s.continents.end();
    case Selector::Kind::Cities: return std::find(s.cities.begin(), s.cities.end(), m.city) != s.cities.end();
    case Selector::Kind::Ids: return std::find(s.ids.begin(), s.ids.end(), m.id) != s.ids.end();
    default: return false;
    }
}

int group_index(const ResolvedGroups& g, const std::string& name)
{
    for (std::size_t i = 0; i < g.names.size(); ++i)
        if (g.names[i] == name) return static_cast<int>(i);
    throw ConfigError("unknown group '" + name + "'");
}

void check_ids(const Selector& s, std::size_t n)
{
    for (MinerId id : s.ids)
        if (id < 0 || static_cast<std::size_t>(id) >= n)
            throw ConfigError("selector id " + std::to_string(id) + " outside 0.." + std::to_string(n - 1));
}

//! Draw `d` distinct targets for `self` from `pool` (ascending, may contain self).
std::vector<MinerId> draw_targets(const std::vector<MinerId>& pool, MinerId self, int d, std::uint64_t seed,
                                  const std::string& rule)
{
    std::vector<MinerId> cand;
    cand.reserve(pool.size());
    for (MinerId v : pool)
        if (v != self) cand.push_back(v);
    if (d < 0) throw ConfigError(rule + ": negative degree");
    if (static_cast<std::size_t>(d) >= cand.size() && d > 0)
        throw ConfigError(rule + ": out-degree " + std::to_string(d) + " must be smaller than the " +
                          std::to_string(cand.size()) + " available targets of miner " + std::to_string(self));
    Rng rng(seed);
    rng.partial_shuffle(std::span<MinerId>(cand), static_cast<std::size_t>(d));
    cand.resize(static_cast<std::size_t>(d));
    return cand;
}

} // namespace

ResolvedGroups resolve_groups(const TopologyPolicy& policy, const std::vector<MinerSpec>& miners,
                              std::uint64_t topology_seed)
{
    const std::size_t n = miners.size();
    if (policy.groups.empty()) throw ConfigError("topology policy has no groups");
    ResolvedGroups g;
    g.group_of.assign(n, -1);
    for (std::size_t gi = 0; gi < policy.groups.size(); ++gi) {
        const auto& spec = policy.groups[gi];
        if (spec.name.empty() || spec.name == "*") throw ConfigError("invalid group name '" + spec.name + "'");
        if (std::find(g.names.begin(), g.names.end(), spec.name) != g.names.end())
            throw ConfigError("duplicate group '" + spec.name + "'");
        const auto& sel = spec.members;
        std::vector<MinerId> members;
        if (sel.kind == Selector::Kind::Group) throw ConfigError("group '" + spec.name + "': group selector only allowed in overrides");
        check_ids(sel, n);
        if (sel.kind == Selector::Kind::RandomFraction) {
            if (!(sel.fraction >= 0.0 && sel.fraction <= 1.0))
                throw ConfigError("group '" + spec.name + "': fraction must be in [0, 1]");
            std::vector<MinerId> avail;
            for (std::size_t v = 0; v < n; ++v)
                if (g.group_of[v] < 0) avail.push_back(static_cast<MinerId>(v));
            const auto k = static_cast<std::size_t>(std::llround(sel.fraction * static_cast<double>(n)));
            if (k > avail.size())
                throw ConfigError("group '" + spec.name + "': fraction needs " + std::to_string(k) +
                                  " miners, only " + std::to_string(avail.size()) + " unassigned");
            Rng rng(derive_seed(topology_seed, StreamTag::Selection, gi));
            rng.partial_shuffle(std::span<MinerId>(avail), k);
            members.assign(avail.begin(), avail.begin() + static_cast<std::ptrdiff_t>(k));
            std::sort(members.begin(), members.end());
        } else {
            for (const auto& m : miners) {
                if (!selector_matches(sel, m)) continue;
                const auto v = static_cast<std::size_t>(m.id);
                if (g.group_of[v] >= 0) {
                    if (sel.kind == Selector::Kind::All || sel.kind == Selector::Kind::Rest) continue;
                    throw ConfigError("miner " + std::to_string(m.id) + " selected by both '" +
                                      g.names[static_cast<std::size_t>(g.group_of[v])] + "' and '" + spec.name + "'");
                }
                members.push_back(m.id);
            }
        }
        for (MinerId v : members) g.group_of[static_cast<std::size_t>(v)] = static_cast<int>(gi);
        g.names.push_back(spec.name);
        g.members.push_back(std::move(members));
    }
    for (std::size_t v = 0; v < n; ++v)
        if (g.group_of[v] < 0)
            throw ConfigError("miner " + std::to_string(v) + " belongs to no group (selectors must partition the miners)");
    return g;
}

Topology build_topology(const TopologyPolicy& policy, const std::vector<MinerSpec>& miners,
                        std::uint64_t topology_seed)
{
    const std::size_t n = miners.size();
    for (std::size_t i = 0; i < n; ++i)
        if (miners[i].id != static_cast<MinerId>(i)) throw ConfigError("miner ids must be 0..n-1 in order");
    const ResolvedGroups g = resolve_groups(policy, miners, topology_seed);

    // Per-miner degree override, -1 when none.
    std::vector<int> override_degree(n, -1);
    for (const auto& o : policy.overrides) {
        if (o.degree < 0) throw ConfigError("override degree must be >= 0");
        check_ids(o.members, n);
        if (o.members.kind == Selector::Kind::Group) {
            for (MinerId v : g.members[static_cast<std::size_t>(group_index(g, o.members.group))])
                override_degree[static_cast<std::size_t>(v)] = o.degree;
        } else if (o.members.kind == Selector::Kind::RandomFraction) {
            throw ConfigError("random-fraction selectors are not supported in overrides");
        } else {
            for (const auto& m : miners)
                if (selector_matches(o.members, m)) override_degree[static_cast<std::size_t>(m.id)] = o.degree;
        }
    }
    auto degree_for = [&](MinerId v, int base) {
        int d = override_degree[static_cast<std::size_t>(v)];
        return d >= 0 ? d : base;
    };

    Topology t(n);
    for (std::size_t gi = 0; gi < policy.groups.size(); ++gi) {
        const auto& rule = policy.groups[gi].intra;
        const auto& members = g.members[gi];
        const std::string what = "group '" + g.names[gi] + "'";
        switch (rule.kind) {
        case IntraRule::Kind::None: break;
        case IntraRule::Kind::Complete:
            for (std::size_t a = 0; a < members.size(); ++a)
                for (std::size_t b = a + 1; b < members.size(); ++b) t.add_edge(members[a], members[b]);
            break;
        case IntraRule::Kind::RandomOutDegree:
            if (rule.degree < 0) throw ConfigError(what + ": negative degree");
            for (MinerId v : members) {
                auto picks = draw_targets(members, v, degree_for(v, rule.degree),
                                          derive_seed(topology_seed, StreamTag::Topology, gi,
                                                      static_cast<std::uint64_t>(v)),
                                          what);
                for (MinerId w : picks) t.add_edge(v, w);
            }
            break;
        }
    }

    for (std::size_t li = 0; li < policy.inter_links.size(); ++li) {
        const auto& link = policy.inter_links[li];
        const int a = group_index(g, link.from);
        std::vector<MinerId> targets;
        if (link.to == "*") {
            for (std::size_t v = 0; v < n; ++v)
                if (g.group_of[v] != a) targets.push_back(static_cast<MinerId>(v));
        } else {
            const int b = group_index(g, link.to);
            if (a == b) throw ConfigError("inter link '" + link.from + "' -> '" + link.to + "' joins a group to itself");
            targets = g.members[static_cast<std::size_t>(b)];
        }
        const auto& sources = g.members[static_cast<std::size_t>(a)];
        const std::string what = "inter link '" + link.from + "' -> '" + link.to + "'";
        const std::uint64_t rule_id = kInterRuleBase + li;
        if (link.value < 0) throw ConfigError(what + ": negative value");
        if (link.kind == InterLink::Kind::Count) {
            const std::size_t pairs = sources.size() * targets.size();
            if (static_cast<std::size_t>(link.value) > pairs)
                throw ConfigError(what + ": " + std::to_string(link.value) + " links requested but only " +
                                  std::to_string(pairs) + " pairs exist");
            std::vector<std::uint32_t> idx(pairs);
            std::iota(idx.begin(), idx.end(), 0u);
            Rng rng(derive_seed(topology_seed, StreamTag::Topology, rule_id, kBridgeStream));
            rng.partial_shuffle(std::span<std::uint32_t>(idx), static_cast<std::size_t>(link.value));
            for (int k = 0; k < link.value; ++k) {
                const std::uint32_t p = idx[static_cast<std::size_t>(k)];
                t.add_edge(sources[p / targets.size()], targets[p % targets.size()]);
            }
        } else {
            for (MinerId v : sources) {
                auto picks = draw_targets(targets, v, degree_for(v, link.value),
                                          derive_seed(topology_seed, StreamTag::Topology, rule_id,
                                                      static_cast<std::uint64_t>(v)),
                                          what);
                for (MinerId w : picks) t.add_edge(v, w);
            }
        }
    }
    return t;
}

DeltaMatrix delta_matrix(const Topology& topology, const LatencyMatrix& latency, double validation_delay)
{
    const std::size_t n = topology.size();
    if (latency.size() != n) throw ConfigError("latency matrix size does not match the topology");
    if (!(validation_delay >= 0) || !std::isfinite(validation_delay))
        throw ConfigError("validation delay must be finite and >= 0");
    const auto comps = topology.components();
    if (comps.size() > 1) {
        const auto& c = comps.back();
        std::string ids;
        for (std::size_t i = 0; i < c.size() && i < 16; ++i) ids += (i ? "," : "") + std::to_string(c[i]);
        if (c.size() > 16) ids += ",...";
        throw ConfigError("overlay is disconnected (" + std::to_string(comps.size()) +
                          " components); isolated component: {" + ids + "}");
    }
    const double inf = std::numeric_limits<double>::infinity();
    DeltaMatrix d(n, inf);
    for (auto [u, v] : topology.edges()) {
        const double l = latency(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
        if (!std::isfinite(l) || l < 0)
            throw ConfigError("no usable latency for linked pair (" + std::to_string(u) + ", " + std::to_string(v) + ")");
        d.set(static_cast<std::size_t>(u), static_cast<std::size_t>(v), l + validation_delay);
    }
    const auto relax = kernels::relax_row();
    for (std::size_t k = 0; k < n; ++k) {
        const double* pivot = d.row(k);
        for (std::size_t i = 0; i < n; ++i) {
            const double via = d(i, k);
            if (i == k || via == inf) continue;
            relax(d.row(i), pivot, via, n);
        }
    }
    return d;
}

double median_edge_latency(const Topology& topology, const LatencyMatrix& latency)
{
    std::vector<double> vals;
    for (auto [u, v] : topology.edges()) vals.push_back(latency(static_cast<std::size_t>(u), static_cast<std::size_t>(v)));
    if (vals.empty()) throw ConfigError("topology has no edges");
    std::sort(vals.begin(), vals.end());
    const std::size_t m = vals.size();
    return m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
}

} // namespace powtopo::net
