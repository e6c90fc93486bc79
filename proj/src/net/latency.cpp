#include <powtopo/net/latency.hpp>
#include <powtopo/error.hpp>
#include <powtopo/util/csv.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace powtopo::net {

std::string_view to_string(Continent c)
{
    switch (c) {
    case Continent::EU: return "EU";
    case Continent::NA: return "NA";
    case Continent::AS: return "AS";
    case Continent::SA: return "SA";
    case Continent::AF: return "AF";
    case Continent::AU: return "AU";
    case Continent::None: return "";
    }
    return "";
}

Continent parse_continent(std::string_view code)
{
    for (Continent c : kContinents)
        if (to_string(c) == code) return c;
    throw DataError("unknown continent code '" + std::string(code) + "'");
}

std::vector<MinerSpec> anonymous_miners(std::size_t n)
{
    std::vector<MinerSpec> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i].id = static_cast<MinerId>(i);
    return out;
}

SymmetricMatrix::SymmetricMatrix(std::size_t n, double fill) : n_(n), data_(n * n, fill)
{
    for (std::size_t i = 0; i < n; ++i) data_[i * n + i] = 0.0;
}

void SymmetricMatrix::set(std::size_t u, std::size_t v, double x)
{
    data_[u * n_ + v] = x;
    data_[v * n_ + u] = x;
}

double SymmetricMatrix::max_off_diagonal() const
{
    double m = 0;
    for (std::size_t u = 0; u < n_; ++u)
        for (std::size_t v = 0; v < n_; ++v)
            if (u != v) m = std::max(m, data_[u * n_ + v]);
    return m;
}

LatencyMatrix LatencyMatrix::uniform(std::size_t n, double latency)
{
    return LatencyMatrix(n, latency);
}

LatencyMatrix LatencyMatrix::clusters(const std::vector<int>& cluster_of, double intra, double inter)
{
    LatencyMatrix m(cluster_of.size());
    for (std::size_t u = 0; u < cluster_of.size(); ++u)
        for (std::size_t v = u + 1; v < cluster_of.size(); ++v)
            m.set(u, v, cluster_of[u] == cluster_of[v] ? intra : inter);
    return m;
}

DeltaMatrix DeltaMatrix::scaled(double unit) const
{
    DeltaMatrix out(*this);
    for (double& x : out.data_) x /= unit;
    return out;
}

CityLatencyTable CityLatencyTable::load_csv(const std::string& path)
{
    auto t = util::read_csv(path, {"source", "destination", "avg_rtt_ms"});
    CityLatencyTable table;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::string where = path + ":" + std::to_string(t.line_numbers[i]);
        double rtt = util::parse_double(r[2], where);
        if (rtt < 0) throw DataError(where + ": negative RTT " + r[2]);
        if (r[0].empty() || r[1].empty()) throw DataError(where + ": empty city name");
        table.add(r[0], r[1], rtt);
    }
    return table;
}

void CityLatencyTable::add(const std::string& source, const std::string& destination, double rtt_ms)
{
    if (rtt_ms < 0 || !std::isfinite(rtt_ms)) throw DataError("invalid RTT for " + source + "," + destination);
    auto& a = rtt_[{source, destination}];
    a.sum += rtt_ms;
    a.count += 1;
}

bool CityLatencyTable::delay(const std::string& a, const std::string& b, double& out) const
{
    if (a == b) {
        out = 0.0;
        return true;
    }
    double sum = 0;
    int dirs = 0;
    for (const auto& key : {std::pair{a, b}, std::pair{b, a}}) {
        auto it = rtt_.find(key);
        if (it != rtt_.end()) {
            sum += it->second.sum / it->second.count;
            ++dirs;
        }
    }
    if (dirs == 0) return false;
    out = sum / dirs / 2.0;
    return true;
}

std::vector<std::string> CityLatencyTable::cities() const
{
    std::set<std::string> s;
    for (const auto& [k, _] : rtt_) {
        s.insert(k.first);
        s.insert(k.second);
    }
    return {s.begin(), s.end()};
}

LatencyMatrix CityLatencyTable::for_miners(const std::vector<MinerSpec>& miners, double same_city_floor) const
{
    const std::size_t n = miners.size();
    LatencyMatrix m(n);
    std::set<std::pair<std::string, std::string>> missing;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            const auto& a = miners[u].city;
            const auto& b = miners[v].city;
            if (a == b) {
                m.set(u, v, same_city_floor);
                continue;
            }
            double d = 0;
            if (!delay(a, b, d)) {
                missing.insert(a < b ? std::pair{a, b} : std::pair{b, a});
                continue;
            }
            m.set(u, v, std::max(d, 0.0));
        }
    }
    if (!missing.empty()) {
        std::string msg = "latency data missing for " + std::to_string(missing.size()) + " city pair(s):";
        std::size_t shown = 0;
        for (const auto& [a, b] : missing) {
            if (shown++ == 20) {
                msg += " ...";
                break;
            }
            msg += " (" + a + ", " + b + ")";
        }
        throw DataError(msg);
    }
    return m;
}

std::vector<MinerSpec> load_placement_csv(const std::string& path)
{
    auto t = util::read_csv(path, {"miner_id", "city", "continent"});
    std::vector<MinerSpec> out;
    std::vector<bool> seen(t.rows.size(), false);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::string where = path + ":" + std::to_string(t.line_numbers[i]);
        long long id = util::parse_int(r[0], where);
        if (id < 0 || id >= static_cast<long long>(t.rows.size()))
            throw DataError(where + ": miner_id " + r[0] + " outside 0.." + std::to_string(t.rows.size() - 1));
        if (seen[static_cast<std::size_t>(id)]) throw DataError(where + ": duplicate miner_id " + r[0]);
        seen[static_cast<std::size_t>(id)] = true;
        if (r[1].empty()) throw DataError(where + ": empty city");
        Continent c;
        try {
            c = parse_continent(r[2]);
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        out.push_back(MinerSpec{static_cast<MinerId>(id), r[1], c});
    }
    if (out.empty()) throw DataError(path + ": no miners");
    std::sort(out.begin(), out.end(), [](const MinerSpec& a, const MinerSpec& b) { return a.id < b.id; });
    return out;
}

} // namespace powtopo::net
