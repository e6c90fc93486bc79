#include <powtopo/cli/experiment.hpp>
#include <powtopo/cli/theory_command.hpp>
#include <powtopo/error.hpp>
#include <powtopo/rng.hpp>
#include <powtopo/theory/closed_form.hpp>
#include <powtopo/theory/round_oracle.hpp>
#include <powtopo/util/csv.hpp>

#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <vector>

namespace powtopo::cli {

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> r) { rows.push_back(std::move(r)); }

    void print(std::ostream& out) const
    {
        std::vector<std::size_t> w(header.size());
        for (std::size_t c = 0; c < header.size(); ++c) {
            w[c] = header[c].size();
            for (const auto& r : rows) w[c] = std::max(w[c], r[c].size());
        }
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "  " : "") << std::setw(static_cast<int>(w[c])) << r[c];
            out << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
    }

    std::string csv() const
    {
        std::ostringstream os;
        for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
        os << '\n';
        for (const auto& r : rows) {
            for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
            os << '\n';
        }
        return os.str();
    }
};

std::string f6(double x) { return util::fixed6(x); }

std::vector<double> grid(const TheoryArgs& a, double fallback)
{
    if (!a.from && !a.to) return {fallback};
    const double lo = a.from.value_or(fallback), hi = a.to.value_or(lo);
    if (!(a.step > 0)) throw DomainError("step must be > 0");
    if (hi < lo) throw DomainError("--to must not be below --from");
    std::vector<double> out;
    const auto count = static_cast<long long>(std::floor((hi - lo) / a.step + 1e-9));
    for (long long i = 0; i <= count; ++i) out.push_back(lo + static_cast<double>(i) * a.step);
    return out;
}

theory::TwoClusterParams two_params(const TheoryArgs& a, double p) { return {p, a.n, a.eps, a.delta}; }

double three_gain_symmetric(const TheoryArgs& a, double p1)
{
    theory::ThreeClusterParams tp;
    tp.p1 = p1;
    tp.p2 = tp.p3 = (1 - p1) / 2;
    tp.n = a.n;
    tp.eps = a.eps;
    tp.delta = a.delta;
    return theory::three_cluster_F(tp).gain;
}

void oracle(const TheoryArgs& a, Table& t, std::ostream& out)
{
    if (a.runs < 1) throw ConfigError("--runs must be >= 1");
    const auto seeds = run_seeds(a.seed, a.runs);
    if (a.model == "single") {
        const auto expect = theory::single_cluster(a.n, a.eps);
        net::DeltaMatrix d(a.n, a.eps);
        t.header = {"run", "seed", "mean_F", "F_expected", "W_min", "W_max", "W_expected", "off_chain"};
        for (std::size_t r = 0; r < a.runs; ++r) {
            const auto tr = theory::round_oracle(d, {}, a.rounds, seeds[r], a.tail);
            double wmin = 1, wmax = 0, fsum = 0;
            for (std::size_t v = 0; v < a.n; ++v) {
                const double w = tr.W(static_cast<MinerId>(v)).value;
                wmin = std::min(wmin, w);
                wmax = std::max(wmax, w);
                fsum += tr.F(static_cast<MinerId>(v)).value;
            }
            t.add({std::to_string(r), std::to_string(seeds[r]), f6(fsum / static_cast<double>(a.n)), f6(expect.F), f6(wmin),
                   f6(wmax), f6(expect.W), std::to_string(tr.off_chain_blocks())});
        }
        return;
    }
    if (a.model != "two") throw ConfigError("oracle model must be single or two");
    const auto params = two_params(a, a.p);
    const double F = theory::two_cluster_F(params);
    const double W = theory::two_cluster_W(params);
    const auto d = theory::two_cluster_delta(a.n, a.p, a.eps, a.delta);
    const auto labels = theory::two_cluster_labels(a.n, a.p);
    std::vector<MinerId> dom;
    for (std::size_t v = 0; v < a.n; ++v)
        if (labels[v] == 1) dom.push_back(static_cast<MinerId>(v));
    if (std::abs(static_cast<double>(dom.size()) - a.p * static_cast<double>(a.n)) > 1e-9)
        out << "note: p*n = " << a.p * static_cast<double>(a.n) << " is not an integer; cluster 1 has " << dom.size()
            << " miners\n";
    t.header = {"run", "seed", "F_hat", "F_se", "F_formula", "F_z", "W_hat", "W_se", "W_formula", "W_z"};
    for (std::size_t r = 0; r < a.runs; ++r) {
        const auto tr = theory::round_oracle(d, {}, a.rounds, seeds[r], a.tail);
        const auto fe = tr.group_F(dom);
        const auto we = tr.group_W(dom);
        t.add({std::to_string(r), std::to_string(seeds[r]), f6(fe.value), f6(fe.se), f6(F),
               f6(fe.se > 0 ? (fe.value - F) / fe.se : 0.0), f6(we.value), f6(we.se), f6(W),
               f6(we.se > 0 ? (we.value - W) / we.se : 0.0)});
    }
}

} // namespace

void theory_command(const TheoryArgs& a, std::ostream& out)
{
    Table t;
    const auto& k = a.kind;
    if (k == "single") {
        const auto r = theory::single_cluster(a.n, a.eps);
        t.header = {"n", "eps", "F", "W"};
        t.add({std::to_string(a.n), f6(a.eps), f6(r.F), f6(r.W)});
    } else if (k == "two") {
        t.header = {"p", "n", "F", "gain", "W"};
        for (double p : grid(a, a.p)) {
            const auto params = two_params(a, p);
            t.add({f6(p), std::to_string(a.n), f6(theory::two_cluster_F(params)), f6(theory::two_cluster_gain(params)),
                   f6(theory::two_cluster_W(params))});
        }
    } else if (k == "three") {
        theory::ThreeClusterParams tp{a.p1, a.p2, a.p3, a.n, a.eps, a.delta};
        const auto r = theory::three_cluster_F(tp);
        t.header = {"p1", "p2", "p3", "n", "F", "gain", "EM1", "EM2", "EM3", "residual", "reduced"};
        t.add({f6(a.p1), f6(a.p2), f6(a.p3), std::to_string(a.n), f6(r.F), f6(r.gain), f6(r.EM[0]), f6(r.EM[1]),
               f6(r.EM[2]), [&] {
                   std::ostringstream os;
                   os << std::scientific << std::setprecision(2) << r.residual;
                   return os.str();
               }(),
               r.reduced ? "yes" : "no"});
    } else if (k == "two-equal") {
        t.header = {"p_each", "n", "gain"};
        for (double p : grid(a, a.p_each)) t.add({f6(p), std::to_string(a.n), f6(theory::two_equal_dominant_gain(p, a.n))});
    } else if (k == "oracle") {
        oracle(a, t, out);
    } else if (k == "optimum") {
        theory::Optimum o;
        if (a.model == "two") {
            o = theory::optimal_cluster_fraction([&](double p) { return theory::two_cluster_gain(two_params(a, p)); },
                                                 a.from.value_or(0.5 + a.step), a.to.value_or(1.0 - a.step), a.step);
        } else if (a.model == "three") {
            o = theory::optimal_cluster_fraction([&](double p) { return three_gain_symmetric(a, p); },
                                                 a.from.value_or(0.34), a.to.value_or(0.95), a.step);
        } else if (a.model == "two-equal") {
            o = theory::optimal_cluster_fraction([&](double p) { return theory::two_equal_dominant_gain(p, a.n); },
                                                 a.from.value_or(a.step), a.to.value_or(0.5 - a.step), a.step);
        } else {
            throw ConfigError("optimum model must be two, three or two-equal");
        }
        t.header = {"model", "step", "p_star", "max_gain"};
        t.add({a.model, f6(a.step), f6(o.p), f6(o.gain)});
    } else {
        throw ConfigError("unknown theory kind '" + k + "' (single, two, three, two-equal, oracle, optimum)");
    }
    t.print(out);
    if (!a.csv_path.empty()) write_file_atomic(a.csv_path, t.csv());
}

} // namespace powtopo::cli
