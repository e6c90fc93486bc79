// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is the number of
// failures. `--only 3,5` runs a subset.

#include <powtopo/cli/config.hpp>
#include <powtopo/cli/experiment.hpp>
#include <powtopo/error.hpp>
#include <powtopo/theory/closed_form.hpp>
#include <powtopo/theory/round_oracle.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

using namespace powtopo;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = POWTOPO_CONFIG_DIR;
const std::string kData = POWTOPO_DATA_DIR;
const std::string kCli = POWTOPO_CLI_PATH;

struct Outcome {
    bool pass{true};
    std::ostringstream detail;
    std::string failures;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            failures += " [fail: " + what + "]";
        }
    }
};

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_{std::chrono::steady_clock::now()};
};

std::string fmt(double x, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::vector<MinerId> first_ids(std::size_t k)
{
    std::vector<MinerId> v(k);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

const std::vector<double> kTwoClusterPoints{0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};

theory::TwoClusterParams two(double p) { return theory::TwoClusterParams{p, 20, 0.3, 1.5}; }

// 1. Single-cluster regimes of the round model.
void ac1(Outcome& o)
{
    constexpr std::size_t n = 20;
    const auto all = first_ids(n);
    std::vector<std::uint64_t> mined(n, 0), kept(n, 0);
    double worst_seed = 0, worst_z = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Stopwatch sw;
        const auto t = theory::round_oracle(net::DeltaMatrix(n, 1.5), {}, 100000, seed);
        worst_seed = std::max(worst_seed, sw.seconds());
        const auto m = t.mined(), c = t.mined_in_chain();
        for (std::size_t v = 0; v < n; ++v) {
            mined[v] += m[v];
            kept[v] += c[v];
        }
        // The group mean is 1/n by construction; the per-miner z is reported alongside.
        for (MinerId v = 0; v < static_cast<MinerId>(n); ++v) {
            const auto f = t.F(v);
            worst_z = std::max(worst_z, std::abs(f.value - 1.0 / n) / f.se);
        }
        const auto mean_f = t.group_F(all);
        o.require(std::abs(mean_f.value - 1.0 / n) <= 3 * mean_f.se + 1e-12, "mean F seed " + std::to_string(seed));

        const auto low = theory::round_oracle(net::DeltaMatrix(n, 0.5), {}, 100000, seed);
        o.require(low.off_chain_blocks() == 0, "eps=0.5 off-chain blocks seed " + std::to_string(seed));
    }
    double wmin = 1, wmax = 0;
    for (std::size_t v = 0; v < n; ++v) {
        const double w = static_cast<double>(mined[v] - kept[v]) / static_cast<double>(mined[v]);
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
    }
    o.require(wmin >= 0.48 && wmax <= 0.52, "per-miner W outside [0.48, 0.52]");
    o.require(worst_seed < 10, "runtime per seed");
    o.detail << "W per miner (5 seeds pooled) in [" << fmt(wmin) << ", " << fmt(wmax) << "], max |z| of F_v vs 1/20 "
             << fmt(worst_z, 2) << ", eps=0.5 off-chain 0, max " << fmt(worst_seed, 2) << " s/seed";
}

// 2. Two-cluster formula against the round model, and the optimum of the formula.
void ac2(Outcome& o)
{
    Stopwatch sw;
    double worst = 0;
    std::ostringstream zs;
    for (std::size_t i = 0; i < kTwoClusterPoints.size(); ++i) {
        const double p = kTwoClusterPoints[i];
        const auto t = theory::round_oracle(theory::two_cluster_delta(20, p, 0.3, 1.5), {}, 500000, 100 + i);
        const auto f = t.group_F(first_ids(static_cast<std::size_t>(std::llround(p * 20))));
        const double z = (f.value - theory::two_cluster_F(two(p))) / f.se;
        worst = std::max(worst, std::abs(z));
        zs << (i ? " " : "") << fmt(p, 2) << ":" << fmt(z, 1);
        o.require(std::abs(z) <= 3, "p=" + fmt(p, 2) + " z=" + fmt(z, 1));
    }
    const auto opt = theory::optimal_cluster_fraction([](double p) { return theory::two_cluster_gain(two(p)); },
                                                      0.505, 0.995, 0.005);
    o.require(std::abs(opt.gain - 1.29) <= 0.01, "max gain");
    o.require(opt.p >= 0.67 && opt.p <= 0.71, "argmax");
    o.require(sw.seconds() < 120, "runtime");
    o.detail << "z of (F_hat - F) per p {" << zs.str() << "}, max |z| " << fmt(worst, 1) << "; scan max gain "
             << fmt(opt.gain) << " at p=" << fmt(opt.p, 3) << ", " << fmt(sw.seconds(), 1) << " s";
}

// 3. Wastage of the dominant cluster.
void ac3(Outcome& o)
{
    const double w07 = theory::two_cluster_W(two(0.7));
    o.require(w07 < 0.05, "W(0.7) >= 0.05");
    bool decreasing = true;
    double prev = theory::two_cluster_W(two(0.505));
    for (int k = 102; k < 200; ++k) {
        const double w = theory::two_cluster_W(two(0.005 * k));
        decreasing = decreasing && w < prev;
        prev = w;
    }
    o.require(decreasing, "W not strictly decreasing");
    double worst = 0, worst_p = 0;
    for (std::size_t i = 0; i < kTwoClusterPoints.size(); ++i) {
        const double p = kTwoClusterPoints[i];
        const auto t = theory::round_oracle(theory::two_cluster_delta(20, p, 0.3, 1.5), {}, 500000, 100 + i);
        const auto w = t.group_W(first_ids(static_cast<std::size_t>(std::llround(p * 20))));
        const double d = std::abs(w.value - theory::two_cluster_W(two(p)));
        if (d > worst) {
            worst = d;
            worst_p = p;
        }
        o.require(d <= 0.01, "p=" + fmt(p, 2) + " |W_hat - W|=" + fmt(d));
    }
    o.detail << "W(0.7)=" << fmt(w07, 6) << ", strictly decreasing on the grid: " << (decreasing ? "yes" : "no")
             << ", max |W_hat - W| " << fmt(worst) << " at p=" << fmt(worst_p, 2);
}

// 4. Three-cluster solver.
void ac4(Outcome& o)
{
    Stopwatch sw;
    theory::ThreeClusterParams s;
    s.p1 = s.p2 = 1.0 / 3;
    s.p3 = 1 - 2.0 / 3;
    s.n = 30;
    const auto sym = theory::three_cluster_F(s);
    o.require(std::abs(sym.F - 1.0 / 30) < 1e-12 && sym.residual < 1e-9, "symmetric case");

    double worst_red = 0;
    for (double p : {0.55, 0.6, 0.7, 0.8, 0.9}) {
        theory::ThreeClusterParams t;
        t.p1 = p;
        t.p2 = 1 - p;
        t.p3 = 0;
        t.n = 20;
        worst_red = std::max(worst_red, std::abs(theory::three_cluster_F(t).F - theory::two_cluster_F(two(p))));
    }
    o.require(worst_red < 1e-6, "p3=0 reduction");

    const auto opt = theory::optimal_cluster_fraction(
        [](double p1) {
            theory::ThreeClusterParams t;
            t.p1 = p1;
            t.p2 = t.p3 = (1 - p1) / 2;
            return theory::three_cluster_F(t).gain;
        },
        0.34, 0.995, 0.005);
    o.require(opt.p >= 0.55 && opt.p <= 0.65, "p2=p3 argmax");

    const double g_low = theory::two_equal_dominant_gain(1.0 / 3 + 1e-9, 20);
    const double g_high = theory::two_equal_dominant_gain(0.40, 20);
    double cross = 0;
    for (int k = 0; k <= 200; ++k) {
        const double pe = 1.0 / 3 + 1e-9 + (0.40 - 1.0 / 3) * k / 200;
        if (theory::two_equal_dominant_gain(pe, 20) > 1) {
            cross = pe;
            break;
        }
    }
    o.require(g_low <= 1 + 1e-6 && g_high > 1 && cross > 1.0 / 3 && cross <= 0.40, "two-equal crossing");
    o.require(sw.seconds() < 5, "runtime");
    o.detail << "symmetric F*n=" << fmt(sym.F * 30, 12) << " residual " << sym.residual << ", p3=0 max diff "
             << worst_red << ", p2=p3 argmax p1=" << fmt(opt.p, 3) << " gain " << fmt(opt.gain)
             << ", two-equal gain " << fmt(g_low) << " at 1/3 -> " << fmt(g_high) << " at 0.40 (crosses 1 near "
             << fmt(cross, 3) << "), " << fmt(sw.seconds(), 2) << " s";
}

// 5. Phase classification on long traces, checked independently against the final chain.
void ac5(Outcome& o)
{
    std::size_t phases = 0;
    for (std::size_t i = 0; i < kTwoClusterPoints.size(); ++i) {
        const double p = kTwoClusterPoints[i];
        const auto t = theory::round_oracle(theory::two_cluster_delta(20, p, 0.3, 1.5), {}, 100000, 500 + i);
        const auto labels = theory::two_cluster_labels(20, p);
        std::vector<theory::Phase> ph;
        try {
            ph = theory::classify_phases(t, labels);
        } catch (const ModelError& e) {
            o.require(false, "p=" + fmt(p, 2) + ": " + e.what());
            continue;
        }
        phases += ph.size();
        std::uint32_t next = 1;
        for (const auto& x : ph) {
            o.require(x.first == next && x.last >= x.first, "partition gap at round " + std::to_string(next));
            next = x.last + 1;
        }
        o.require(next == t.round_count() + 1, "partition does not cover all rounds");

        std::vector<std::uint32_t> winners;
        bool open = false;
        for (const auto& x : ph) {
            if (!x.closed) {
                open = true;
                break;
            }
            for (std::uint32_t r = x.first; r <= x.last; ++r)
                if (x.kind != theory::PhaseKind::Fork || labels[static_cast<std::size_t>(t.rounds[r].miner)] == x.winner)
                    winners.push_back(r);
        }
        bool equal = winners.size() + 1 <= t.chain.size();
        for (std::size_t k = 0; equal && k < winners.size(); ++k) equal = t.chain[k + 1] == winners[k];
        // Without an open phase at the horizon the chain has no further blocks.
        if (!open) equal = equal && winners.size() + 1 == t.chain.size();
        o.require(equal, "winner blocks differ from the final chain at p=" + fmt(p, 2));
    }
    o.detail << "8 traces of 1e5 rounds, " << phases << " phases, all rounds covered, winners equal the chain";
}

cli::ExperimentConfig load(const std::string& name)
{
    return cli::parse_config(kConfigs + "/" + name);
}

// 6. Near-fairness at low latency. Per-miner values are means over the seeds.
void ac6(Outcome& o)
{
    auto cfg = load("uniform_fair.json");
    cfg.runs = 5;
    const auto nw = cli::build_network(cfg.network);
    std::vector<metrics::RewardReport> reports;
    double worst_seed = 0, run_max_w = 0;
    for (auto seed : cli::run_seeds(cfg.seed, cfg.runs)) {
        Stopwatch sw;
        reports.push_back(cli::run_once(cfg, nw, seed).report);
        worst_seed = std::max(worst_seed, sw.seconds());
        for (const auto& m : reports.back().miners) run_max_w = std::max(run_max_w, m.w_pct);
    }
    const auto agg = metrics::aggregate(reports);
    double max_w = 0, lo = 1e9, hi = 0;
    for (const auto& m : agg.miners) {
        max_w = std::max(max_w, m.w_mean);
        lo = std::min(lo, m.f_mean / agg.fair_pct);
        hi = std::max(hi, m.f_mean / agg.fair_pct);
    }
    o.require(max_w < 1, "w_pct >= 1%");
    o.require(lo >= 0.7 && hi <= 1.3, "f_pct outside [0.7, 1.3] x fair");
    o.require(worst_seed < 120, "runtime per seed");
    o.detail << "max mean w_pct " << fmt(max_w) << "% (largest single run " << fmt(run_max_w) << "%), mean f_pct/fair in ["
             << fmt(lo, 3) << ", " << fmt(hi, 3) << "], max " << fmt(worst_seed, 1) << " s/seed";
}

// 7. Reward of one miner against its degree in the toy network.
void ac7(Outcome& o)
{
    const auto cfg = load("toy_focal_degree.json");
    const auto nw = cli::build_network(cfg.network);
    const auto cells = cli::sweep_cells(cfg);
    const MinerId focal = 99;
    std::vector<double> degree, mean_f;
    for (const auto& cell : cells) {
        const auto c = cli::apply_cell(cfg, cell);
        double s = 0;
        for (auto seed : cli::run_seeds(c.seed, c.runs)) s += cli::run_once(c, nw, seed).report.miners[focal].f_pct;
        degree.push_back(cell.values[0]);
        mean_f.push_back(s / static_cast<double>(c.runs));
    }
    std::size_t best = 1;
    for (std::size_t i = 2; i + 1 < mean_f.size(); ++i)
        if (mean_f[i] > mean_f[best]) best = i;
    o.require(degree.front() == 1 && degree.back() == 80, "unexpected degree grid");
    o.require(mean_f[best] > mean_f.front() && mean_f[best] > mean_f.back(), "no interior peak");
    o.detail << "focal f_pct by degree {";
    for (std::size_t i = 0; i < degree.size(); ++i) o.detail << (i ? " " : "") << degree[i] << ":" << fmt(mean_f[i], 3);
    o.detail << "}, best mid-range degree " << degree[best];
}

// 8. Geography bias in the world network.
void ac8(Outcome& o)
{
    auto cfg = load("world_random6.json");
    cfg.runs = 10;
    const auto nw = cli::build_network(cfg.network);
    const double threshold = 0.4067;
    int good = 0;
    double worst_seed = 0;
    std::ostringstream per;
    for (auto seed : cli::run_seeds(cfg.seed, cfg.runs)) {
        Stopwatch sw;
        const auto out = cli::run_once(cfg, nw, seed);
        worst_seed = std::max(worst_seed, sw.seconds());
        double core = 0, other = 0;
        std::size_t nc = 0, no = 0;
        for (const auto& m : out.report.miners) {
            if (m.continent == net::Continent::EU || m.continent == net::Continent::NA) {
                core += m.f_pct;
                ++nc;
            } else {
                other += m.f_pct;
                ++no;
            }
        }
        core /= static_cast<double>(nc);
        other /= static_cast<double>(no);
        good += core > threshold && other < threshold;
        per << " " << fmt(core, 3) << "/" << fmt(other, 3);
    }
    o.require(good >= 9, "only " + std::to_string(good) + " of 10");
    o.require(worst_seed < 900, "runtime per seed");
    o.detail << good << "/10 runs with EU+NA mean > " << threshold << " > rest mean (EU+NA/rest:" << per.str()
             << "), max " << fmt(worst_seed, 1) << " s/seed";
}

// 9. Best cluster size against inter-cluster latency.
void ac9(Outcome& o)
{
    auto cfg = load("two_cluster_delta_sweep.json");
    cfg.sim.target_chain_length = 5000;
    cfg.runs = 3;
    const auto cells = cli::sweep_cells(cfg);
    std::vector<double> deltas, best_p, best_gain;
    for (const auto& cell : cells) {
        const auto c = cli::apply_cell(cfg, cell);
        const auto nw = cli::build_network(c.network);
        double s = 0;
        std::size_t cnt = 0;
        double fair = 0;
        for (auto seed : cli::run_seeds(c.seed, c.runs)) {
            const auto out = cli::run_once(c, nw, seed);
            fair = out.report.fair_pct;
            for (const auto& m : out.report.miners)
                if (m.city == "cluster1") {
                    s += m.f_pct;
                    ++cnt;
                }
        }
        const double gain = s / static_cast<double>(cnt) / fair;
        const double p = c.network.fraction, d = c.network.inter_ms;
        std::size_t k = 0;
        while (k < deltas.size() && deltas[k] != d) ++k;
        if (k == deltas.size()) {
            deltas.push_back(d);
            best_p.push_back(p);
            best_gain.push_back(gain);
        } else if (gain > best_gain[k]) {
            best_p[k] = p;
            best_gain[k] = gain;
        }
    }
    bool nonincreasing = true;
    for (std::size_t k = 1; k < deltas.size(); ++k) nonincreasing = nonincreasing && best_p[k] <= best_p[k - 1] + 1e-12;
    o.require(deltas.size() == 3, "expected three latencies");
    o.require(nonincreasing, "best cluster size increases with delta");
    o.detail << "best cluster fraction (gain) by delta {";
    for (std::size_t k = 0; k < deltas.size(); ++k)
        o.detail << (k ? " " : "") << deltas[k] << ":" << fmt(best_p[k], 2) << " (" << fmt(best_gain[k], 3) << ")";
    o.detail << "}";
}

int run_cli(const std::string& args)
{
    const int rc = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 10. Byte-identical reruns of the simulate command.
void ac10(Outcome& o)
{
    const auto dir = fs::temp_directory_path() / ("powtopo_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream(dir / "world.json") << R"({ "network": { "placement": ")" << kData
                                          << R"(/world_placement.csv", "latency": ")" << kData
                                          << R"(/world_latency.csv" }, "sim": { "target_chain_length": 1500 }, "runs": 2 })";
    }
    struct Case {
        std::string config, extra_a, extra_b;
    };
    const std::vector<Case> cases{
        {kConfigs + "/uniform_fair.json", "--runs 3 --jobs 1", "--runs 3 --jobs 3"},
        {(dir / "world.json").string(), "--seed 42", "--seed 42"},
    };
    std::size_t files = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto a = dir / ("a" + std::to_string(i)), b = dir / ("b" + std::to_string(i));
        const int ra = run_cli("simulate --config " + cases[i].config + " " + cases[i].extra_a + " --out " + a.string());
        const int rb = run_cli("simulate --config " + cases[i].config + " " + cases[i].extra_b + " --out " + b.string());
        o.require(ra == 0 && rb == 0, "simulate exit status");
        for (const auto& e : fs::directory_iterator(a)) {
            if (e.path().extension() != ".csv") continue;
            ++files;
            o.require(fs::exists(b / e.path().filename()) && slurp(e.path()) == slurp(b / e.path().filename()),
                      e.path().filename().string() + " differs");
        }
    }
    o.require(files >= 6, "too few CSVs");
    fs::remove_all(dir);
    o.detail << files << " CSVs compared across repeated simulate runs (including different --jobs), all identical";
}

struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
};

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all{
        {1, "single-cluster regimes (round model)", ac1},
        {2, "two-cluster F vs round model; optimum 1.29 near p=0.69", ac2},
        {3, "two-cluster wastage", ac3},
        {4, "three-cluster solver", ac4},
        {5, "phase classification", ac5},
        {6, "low-latency fairness (event simulation)", ac6},
        {7, "reward vs degree in the toy network", ac7},
        {8, "world geography bias", ac8},
        {9, "best cluster size vs inter-cluster latency", ac9},
        {10, "determinism of simulate", ac10},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
        } else {
            std::cerr << "usage: acceptance [--only 1,2,...]\n";
            return 64;
        }
    }
    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome o;
        Stopwatch sw;
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.failures += std::string(" [exception: ") + e.what() + "]";
        }
        failed += !o.pass;
        std::cout << "AC" << c.id << (c.id < 10 ? "  " : " ") << (o.pass ? "PASS" : "FAIL") << "  " << c.name
                  << " | " << o.detail.str() << o.failures << " (" << fmt(sw.seconds(), 1) << " s)" << std::endl;
    }
    return failed;
}
