#include <powtopo/cli/config.hpp>
#include <powtopo/error.hpp>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace powtopo::cli {

using nlohmann::json;

std::string SweepAxis::name() const
{
    switch (kind) {
    case Kind::OverrideDegree: return "override_degree[" + std::to_string(target) + "]";
    case Kind::InterLinkValue: return "inter_link_value[" + std::to_string(target) + "]";
    case Kind::ClusterFraction: return "cluster_fraction";
    case Kind::InterLatency: return "inter_latency_ms";
    }
    return "?";
}

std::string fnv1a_hex(const std::string& data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys)
{
    if (!j.is_object()) bad(path, "expected an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, _] : j.items())
        if (!ok.count(k)) bad(path.empty() ? k : path + "." + k, "unknown key");
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double get_number(const json& j, const std::string& path)
{
    if (!j.is_number()) bad(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) bad(path, "must be finite");
    return v;
}

std::int64_t get_int(const json& j, const std::string& path)
{
    if (!j.is_number_integer()) bad(path, "expected an integer");
    return j.get<std::int64_t>();
}

std::uint64_t get_uint(const json& j, const std::string& path)
{
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    const auto v = get_int(j, path);
    if (v < 0) bad(path, "must be >= 0");
    return static_cast<std::uint64_t>(v);
}

std::string get_string(const json& j, const std::string& path)
{
    if (!j.is_string()) bad(path, "expected a string");
    return j.get<std::string>();
}

template <typename F>
void maybe(const json& obj, const std::string& path, const char* key, F&& f)
{
    if (auto it = obj.find(key); it != obj.end()) f(*it, join(path, key));
}

net::Selector parse_selector(const json& j, const std::string& path)
{
    net::Selector s;
    if (j.is_string()) {
        const auto v = j.get<std::string>();
        if (v == "all") s.kind = net::Selector::Kind::All;
        else if (v == "rest") s.kind = net::Selector::Kind::Rest;
        else bad(path, "expected \"all\", \"rest\" or an object");
        return s;
    }
    allow_keys(j, path, {"continents", "cities", "ids", "fraction", "group"});
    if (j.size() != 1) bad(path, "selector needs exactly one of continents, cities, ids, fraction, group");
    const auto& [key, val] = *j.items().begin();
    const std::string p = join(path, key);
    if (key == "continents") {
        s.kind = net::Selector::Kind::Continents;
        if (!val.is_array()) bad(p, "expected an array");
        for (std::size_t i = 0; i < val.size(); ++i) {
            try {
                s.continents.push_back(net::parse_continent(get_string(val[i], p + "[" + std::to_string(i) + "]")));
            } catch (const DataError& e) {
                bad(p + "[" + std::to_string(i) + "]", e.what());
            }
        }
    } else if (key == "cities") {
        s.kind = net::Selector::Kind::Cities;
        if (!val.is_array()) bad(p, "expected an array");
        for (std::size_t i = 0; i < val.size(); ++i) s.cities.push_back(get_string(val[i], p + "[" + std::to_string(i) + "]"));
    } else if (key == "ids") {
        s.kind = net::Selector::Kind::Ids;
        if (!val.is_array()) bad(p, "expected an array");
        for (std::size_t i = 0; i < val.size(); ++i)
            s.ids.push_back(static_cast<MinerId>(get_uint(val[i], p + "[" + std::to_string(i) + "]")));
    } else if (key == "fraction") {
        s.kind = net::Selector::Kind::RandomFraction;
        s.fraction = get_number(val, p);
        if (s.fraction < 0 || s.fraction > 1) bad(p, "must be in [0, 1]");
    } else {
        s.kind = net::Selector::Kind::Group;
        s.group = get_string(val, p);
    }
    return s;
}

net::IntraRule parse_intra(const json& j, const std::string& path)
{
    net::IntraRule r;
    if (j.is_string()) {
        const auto v = j.get<std::string>();
        if (v == "none") r.kind = net::IntraRule::Kind::None;
        else if (v == "complete") r.kind = net::IntraRule::Kind::Complete;
        else bad(path, "expected \"none\", \"complete\" or {\"random_out_degree\": d}");
        return r;
    }
    allow_keys(j, path, {"random_out_degree"});
    if (!j.contains("random_out_degree")) bad(path, "missing random_out_degree");
    r.kind = net::IntraRule::Kind::RandomOutDegree;
    r.degree = static_cast<int>(get_uint(j["random_out_degree"], join(path, "random_out_degree")));
    return r;
}

net::TopologyPolicy parse_policy(const json& j, const std::string& path)
{
    allow_keys(j, path, {"groups", "inter_links", "overrides", "random_out_degree", "complete"});
    net::TopologyPolicy p;
    const bool shorthand = j.contains("random_out_degree") || j.contains("complete");
    if (shorthand) {
        if (j.contains("groups")) bad(path, "use either groups or a shorthand (random_out_degree / complete)");
        if (j.contains("random_out_degree") && j.contains("complete")) bad(path, "conflicting shorthands");
        if (j.contains("random_out_degree"))
            p = net::TopologyPolicy::random_out_degree(
                static_cast<int>(get_uint(j["random_out_degree"], join(path, "random_out_degree"))));
        else {
            if (!j["complete"].is_boolean() || !j["complete"].get<bool>()) bad(join(path, "complete"), "expected true");
            p = net::TopologyPolicy::complete();
        }
    }
    maybe(j, path, "groups", [&](const json& g, const std::string& gp) {
        if (!g.is_array() || g.empty()) bad(gp, "expected a non-empty array");
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::string ip = gp + "[" + std::to_string(i) + "]";
            allow_keys(g[i], ip, {"name", "members", "intra"});
            net::GroupSpec spec;
            if (!g[i].contains("name")) bad(ip, "missing name");
            spec.name = get_string(g[i]["name"], join(ip, "name"));
            if (g[i].contains("members")) spec.members = parse_selector(g[i]["members"], join(ip, "members"));
            if (g[i].contains("intra")) spec.intra = parse_intra(g[i]["intra"], join(ip, "intra"));
            p.groups.push_back(std::move(spec));
        }
    });
    maybe(j, path, "inter_links", [&](const json& l, const std::string& lp) {
        if (!l.is_array()) bad(lp, "expected an array");
        for (std::size_t i = 0; i < l.size(); ++i) {
            const std::string ip = lp + "[" + std::to_string(i) + "]";
            allow_keys(l[i], ip, {"from", "to", "count", "random_out_degree"});
            net::InterLink link;
            if (!l[i].contains("from") || !l[i].contains("to")) bad(ip, "needs from and to");
            link.from = get_string(l[i]["from"], join(ip, "from"));
            link.to = get_string(l[i]["to"], join(ip, "to"));
            const bool c = l[i].contains("count"), d = l[i].contains("random_out_degree");
            if (c == d) bad(ip, "needs exactly one of count, random_out_degree");
            link.kind = c ? net::InterLink::Kind::Count : net::InterLink::Kind::RandomOutDegree;
            const char* key = c ? "count" : "random_out_degree";
            link.value = static_cast<int>(get_uint(l[i][key], join(ip, key)));
            p.inter_links.push_back(std::move(link));
        }
    });
    maybe(j, path, "overrides", [&](const json& o, const std::string& op) {
        if (!o.is_array()) bad(op, "expected an array");
        for (std::size_t i = 0; i < o.size(); ++i) {
            const std::string ip = op + "[" + std::to_string(i) + "]";
            allow_keys(o[i], ip, {"members", "degree"});
            if (!o[i].contains("members") || !o[i].contains("degree")) bad(ip, "needs members and degree");
            net::DegreeOverride ov;
            ov.members = parse_selector(o[i]["members"], join(ip, "members"));
            ov.degree = static_cast<int>(get_uint(o[i]["degree"], join(ip, "degree")));
            p.overrides.push_back(std::move(ov));
        }
    });
    if (p.groups.empty()) bad(path, "no groups (give groups, random_out_degree or complete)");
    return p;
}

std::string resolve(const std::string& base, const std::string& p)
{
    namespace fs = std::filesystem;
    fs::path path(p);
    if (path.is_absolute()) return p;
    return (fs::path(base) / path).lexically_normal().string();
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir)
{
    json root;
    try {
        root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    allow_keys(root, "", {"sim", "network", "topology", "runs", "seed", "jobs", "output_dir", "sweep"});
    ExperimentConfig cfg;
    cfg.canonical = root.dump();

    maybe(root, "", "sim", [&](const json& s, const std::string& sp) {
        allow_keys(s, sp, {"mean_interblock_ms", "validation_delay_ms", "target_chain_length", "discard_tail", "hash_rates"});
        maybe(s, sp, "mean_interblock_ms", [&](const json& v, const std::string& p) { cfg.sim.mean_interblock = get_number(v, p); });
        maybe(s, sp, "validation_delay_ms", [&](const json& v, const std::string& p) { cfg.sim.validation_delay = get_number(v, p); });
        maybe(s, sp, "target_chain_length", [&](const json& v, const std::string& p) {
            cfg.sim.target_chain_length = static_cast<std::uint32_t>(get_uint(v, p));
        });
        maybe(s, sp, "discard_tail", [&](const json& v, const std::string& p) {
            cfg.sim.discard_tail = static_cast<std::uint32_t>(get_uint(v, p));
        });
        maybe(s, sp, "hash_rates", [&](const json& v, const std::string& p) {
            if (!v.is_array()) bad(p, "expected an array");
            for (std::size_t i = 0; i < v.size(); ++i) cfg.sim.hash_rates.push_back(get_number(v[i], p + "[" + std::to_string(i) + "]"));
        });
    });

    if (!root.contains("network")) bad("network", "missing (need placement and latency files, or a synthetic network)");
    {
        const json& nw = root["network"];
        const std::string np = "network";
        allow_keys(nw, np, {"kind", "placement", "latency", "same_city_floor_ms", "n", "latency_ms", "fraction", "intra_ms", "inter_ms"});
        auto& N = cfg.network;
        std::string kind = "dataset";
        maybe(nw, np, "kind", [&](const json& v, const std::string& p) { kind = get_string(v, p); });
        const auto forbid = [&](std::initializer_list<const char*> keys) {
            for (const char* k : keys)
                if (nw.contains(k)) bad(join(np, k), "not used by network kind '" + kind + "'");
        };
        const auto need = [&](const char* k) -> const json& {
            if (!nw.contains(k)) bad(join(np, k), "missing");
            return nw[k];
        };
        if (kind == "dataset") {
            N.kind = NetworkSpec::Kind::Dataset;
            forbid({"n", "latency_ms", "fraction", "intra_ms", "inter_ms"});
            N.placement_path = resolve(base_dir, get_string(need("placement"), "network.placement"));
            N.latency_path = resolve(base_dir, get_string(need("latency"), "network.latency"));
            maybe(nw, np, "same_city_floor_ms", [&](const json& v, const std::string& p) {
                N.same_city_floor_ms = get_number(v, p);
                if (N.same_city_floor_ms < 0) bad(p, "must be >= 0");
            });
            for (const auto* f : {&N.placement_path, &N.latency_path})
                if (!std::filesystem::exists(*f)) bad(f == &N.placement_path ? "network.placement" : "network.latency", "file not found: " + *f);
        } else if (kind == "uniform") {
            N.kind = NetworkSpec::Kind::Uniform;
            forbid({"placement", "latency", "same_city_floor_ms", "fraction", "intra_ms", "inter_ms"});
            N.n = get_uint(need("n"), "network.n");
            N.latency_ms = get_number(need("latency_ms"), "network.latency_ms");
            if (N.latency_ms < 0) bad("network.latency_ms", "must be >= 0");
        } else if (kind == "clusters") {
            N.kind = NetworkSpec::Kind::Clusters;
            forbid({"placement", "latency", "same_city_floor_ms", "latency_ms"});
            N.n = get_uint(need("n"), "network.n");
            N.fraction = get_number(need("fraction"), "network.fraction");
            N.intra_ms = get_number(need("intra_ms"), "network.intra_ms");
            N.inter_ms = get_number(need("inter_ms"), "network.inter_ms");
            if (N.fraction <= 0 || N.fraction >= 1) bad("network.fraction", "must be in (0, 1)");
            if (N.intra_ms < 0 || N.inter_ms < 0) bad("network", "latencies must be >= 0");
        } else {
            bad("network.kind", "expected dataset, uniform or clusters");
        }
        if (N.kind != NetworkSpec::Kind::Dataset && N.n < 1) bad("network.n", "must be >= 1");
    }

    if (root.contains("topology")) {
        cfg.policy = parse_policy(root["topology"], "topology");
    } else if (cfg.network.kind == NetworkSpec::Kind::Dataset) {
        cfg.policy = net::TopologyPolicy::random_out_degree(6);
    } else {
        cfg.policy = net::TopologyPolicy::complete();
    }

    maybe(root, "", "runs", [&](const json& v, const std::string& p) {
        cfg.runs = get_uint(v, p);
        if (cfg.runs < 1) bad(p, "must be >= 1");
    });
    maybe(root, "", "seed", [&](const json& v, const std::string& p) { cfg.seed = get_uint(v, p); });
    maybe(root, "", "jobs", [&](const json& v, const std::string& p) {
        cfg.jobs = get_uint(v, p);
        if (cfg.jobs < 1) bad(p, "must be >= 1");
    });
    maybe(root, "", "output_dir", [&](const json& v, const std::string& p) { cfg.output_dir = get_string(v, p); });

    maybe(root, "", "sweep", [&](const json& s, const std::string& sp) {
        if (!s.is_array() || s.empty()) bad(sp, "expected a non-empty array of axes");
        for (std::size_t i = 0; i < s.size(); ++i) {
            const std::string ip = sp + "[" + std::to_string(i) + "]";
            allow_keys(s[i], ip, {"axis", "index", "values"});
            SweepAxis ax;
            if (!s[i].contains("axis")) bad(ip, "missing axis");
            const auto name = get_string(s[i]["axis"], join(ip, "axis"));
            if (name == "override_degree") ax.kind = SweepAxis::Kind::OverrideDegree;
            else if (name == "inter_link_value") ax.kind = SweepAxis::Kind::InterLinkValue;
            else if (name == "cluster_fraction") ax.kind = SweepAxis::Kind::ClusterFraction;
            else if (name == "inter_latency_ms") ax.kind = SweepAxis::Kind::InterLatency;
            else bad(join(ip, "axis"), "expected override_degree, inter_link_value, cluster_fraction or inter_latency_ms");
            maybe(s[i], ip, "index", [&](const json& v, const std::string& p) { ax.target = get_uint(v, p); });
            if (!s[i].contains("values") || !s[i]["values"].is_array() || s[i]["values"].empty())
                bad(join(ip, "values"), "expected a non-empty array");
            for (std::size_t k = 0; k < s[i]["values"].size(); ++k)
                ax.values.push_back(get_number(s[i]["values"][k], join(ip, "values") + "[" + std::to_string(k) + "]"));
            const bool integral = ax.kind == SweepAxis::Kind::OverrideDegree || ax.kind == SweepAxis::Kind::InterLinkValue;
            for (double v : ax.values) {
                if (v < 0) bad(join(ip, "values"), "values must be >= 0");
                if (integral && v != std::floor(v)) bad(join(ip, "values"), "values must be integers");
            }
            if (ax.kind == SweepAxis::Kind::OverrideDegree && ax.target >= cfg.policy.overrides.size())
                bad(join(ip, "index"), "no topology override with this index");
            if (ax.kind == SweepAxis::Kind::InterLinkValue && ax.target >= cfg.policy.inter_links.size())
                bad(join(ip, "index"), "no inter link with this index");
            if ((ax.kind == SweepAxis::Kind::ClusterFraction || ax.kind == SweepAxis::Kind::InterLatency) &&
                cfg.network.kind != NetworkSpec::Kind::Clusters)
                bad(join(ip, "axis"), "only valid for network kind 'clusters'");
            if (ax.kind == SweepAxis::Kind::ClusterFraction)
                for (double v : ax.values)
                    if (v <= 0 || v >= 1) bad(join(ip, "values"), "fractions must be in (0, 1)");
            cfg.sweep.push_back(std::move(ax));
        }
    });

    // n is known for synthetic networks; dataset configs are checked again once loaded.
    engine::SimConfig probe = cfg.sim;
    probe.n = cfg.network.kind == NetworkSpec::Kind::Dataset ? (cfg.sim.hash_rates.empty() ? 1 : cfg.sim.hash_rates.size())
                                                             : cfg.network.n;
    probe.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto base = std::filesystem::path(path).parent_path().string();
    if (base.empty()) base = ".";
    return parse_config_text(ss.str(), base);
}

} // namespace powtopo::cli
