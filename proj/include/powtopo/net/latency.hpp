#pragma once

#include <powtopo/types.hpp>

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace powtopo::net {

enum class Continent { EU, NA, AS, SA, AF, AU, None };

inline constexpr Continent kContinents[] = {Continent::EU, Continent::NA, Continent::AS,
                                            Continent::SA, Continent::AF, Continent::AU};

std::string_view to_string(Continent c);
//! Two-letter code to Continent; throws DataError on anything else.
Continent parse_continent(std::string_view code);

struct MinerSpec {
    MinerId id{0};
    std::string city;
    Continent continent{Continent::None};
};

//! Miners numbered 0..n-1 with no placement (synthetic networks).
std::vector<MinerSpec> anonymous_miners(std::size_t n);

/** Dense symmetric n x n matrix with zero diagonal, row-major. */
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(std::size_t n, double fill = 0.0);

    std::size_t size() const { return n_; }
    double operator()(std::size_t u, std::size_t v) const { return data_[u * n_ + v]; }
    //! Sets both (u,v) and (v,u).
    void set(std::size_t u, std::size_t v, double x);
    const double* row(std::size_t u) const { return data_.data() + u * n_; }
    double* row(std::size_t u) { return data_.data() + u * n_; }
    const std::vector<double>& data() const { return data_; }

    double max_off_diagonal() const;

    friend bool operator==(const SymmetricMatrix&, const SymmetricMatrix&) = default;

protected:
    std::size_t n_{0};
    std::vector<double> data_;
};

//! Link propagation delay l(u,v) in milliseconds.
class LatencyMatrix : public SymmetricMatrix {
public:
    using SymmetricMatrix::SymmetricMatrix;

    static LatencyMatrix uniform(std::size_t n, double latency);
    //! Latency `intra` within a cluster and `inter` across clusters; cluster_of[v] labels v.
    static LatencyMatrix clusters(const std::vector<int>& cluster_of, double intra, double inter);
};

//! Minimum block-delivery time delta(u,v) over the overlay, validation included.
class DeltaMatrix : public SymmetricMatrix {
public:
    using SymmetricMatrix::SymmetricMatrix;

    //! Same matrix with every entry divided by `unit` (e.g. the round length).
    DeltaMatrix scaled(double unit) const;
};

/** Ping table keyed by city name. One-way delay is half the average RTT. */
class CityLatencyTable {
public:
    /**
     * Load a CSV with header source,destination,avg_rtt_ms.
     * @throws DataError on I/O or parse problems and on negative RTT values.
     */
    static CityLatencyTable load_csv(const std::string& path);

    void add(const std::string& source, const std::string& destination, double rtt_ms);

    //! One-way delay in ms averaged over both directions when both exist; 0 on the diagonal.
    bool delay(const std::string& a, const std::string& b, double& out) const;

    std::vector<std::string> cities() const;

    /**
     * Latency between the given miners. Distinct miners in the same city get `same_city_floor`.
     * @throws DataError listing every missing city pair.
     */
    LatencyMatrix for_miners(const std::vector<MinerSpec>& miners, double same_city_floor = 0.5) const;

private:
    struct Acc {
        double sum{0};
        int count{0};
    };
    std::map<std::pair<std::string, std::string>, Acc> rtt_;
};

/**
 * Load a placement CSV with header miner_id,city,continent. Ids must be exactly 0..n-1
 * (any order in the file); result is sorted by id.
 */
std::vector<MinerSpec> load_placement_csv(const std::string& path);

} // namespace powtopo::net
