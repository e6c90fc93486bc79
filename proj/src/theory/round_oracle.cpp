#include <powtopo/error.hpp>
#include <powtopo/rng.hpp>
#include <powtopo/theory/round_oracle.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace powtopo::theory {

std::size_t RoundTrace::retained_rounds() const
{
    const std::size_t r = round_count();
    return r > tail ? r - tail : 0;
}

std::vector<std::uint64_t> RoundTrace::mined() const
{
    std::vector<std::uint64_t> out(n, 0);
    for (std::size_t r = 1; r <= retained_rounds(); ++r) ++out[static_cast<std::size_t>(rounds[r].miner)];
    return out;
}

std::vector<std::uint64_t> RoundTrace::mined_in_chain() const
{
    std::vector<std::uint64_t> out(n, 0);
    for (std::size_t r = 1; r <= retained_rounds(); ++r)
        if (rounds[r].in_chain) ++out[static_cast<std::size_t>(rounds[r].miner)];
    return out;
}

std::uint64_t RoundTrace::retained_chain_length() const
{
    std::uint64_t s = 0;
    for (std::size_t r = 1; r <= retained_rounds(); ++r) s += rounds[r].in_chain;
    return s;
}

std::uint64_t RoundTrace::off_chain_blocks() const
{
    return retained_rounds() - retained_chain_length();
}

namespace {

//! Ratio estimator sum(X)/sum(Y) over contiguous round batches, with a batch-means SE.
template <typename XF, typename YF>
Estimate batch_ratio(const RoundTrace& t, std::size_t batches, double scale, XF x_of, YF y_of)
{
    const std::size_t R = t.retained_rounds();
    if (batches < 2) batches = 2;
    if (batches > R) batches = std::max<std::size_t>(R, 1);
    std::vector<double> X(batches, 0), Y(batches, 0);
    for (std::size_t r = 1; r <= R; ++r) {
        const std::size_t b = (r - 1) * batches / R;
        X[b] += x_of(t.rounds[r]);
        Y[b] += y_of(t.rounds[r]);
    }
    const double sx = std::accumulate(X.begin(), X.end(), 0.0);
    const double sy = std::accumulate(Y.begin(), Y.end(), 0.0);
    Estimate e;
    if (sy == 0) return e;
    const double ratio = sx / sy;
    e.value = ratio / scale;
    if (batches >= 2) {
        double ss = 0;
        for (std::size_t b = 0; b < batches; ++b) {
            const double d = X[b] - ratio * Y[b];
            ss += d * d;
        }
        const double B = static_cast<double>(batches);
        const double ybar = sy / B;
        e.se = std::sqrt(ss / (B * (B - 1))) / ybar / scale;
    }
    return e;
}

std::vector<char> membership(const RoundTrace& t, const std::vector<MinerId>& group)
{
    std::vector<char> in(t.n, 0);
    for (MinerId v : group) {
        if (v < 0 || static_cast<std::size_t>(v) >= t.n) throw ConfigError("miner id outside the trace");
        in[static_cast<std::size_t>(v)] = 1;
    }
    return in;
}

} // namespace

Estimate RoundTrace::group_F(const std::vector<MinerId>& group, std::size_t batches) const
{
    const auto in = membership(*this, group);
    const double k = static_cast<double>(std::count(in.begin(), in.end(), 1));
    return batch_ratio(
        *this, batches, k,
        [&](const RoundRecord& r) { return r.in_chain && in[static_cast<std::size_t>(r.miner)] ? 1.0 : 0.0; },
        [](const RoundRecord& r) { return r.in_chain ? 1.0 : 0.0; });
}

Estimate RoundTrace::group_W(const std::vector<MinerId>& group, std::size_t batches) const
{
    const auto in = membership(*this, group);
    return batch_ratio(
        *this, batches, 1.0,
        [&](const RoundRecord& r) { return !r.in_chain && in[static_cast<std::size_t>(r.miner)] ? 1.0 : 0.0; },
        [&](const RoundRecord& r) { return in[static_cast<std::size_t>(r.miner)] ? 1.0 : 0.0; });
}

RoundTrace round_oracle(const net::DeltaMatrix& delta, const std::vector<double>& hash_rates, std::uint32_t rounds,
                        std::uint64_t seed, std::uint32_t tail)
{
    const std::size_t n = delta.size();
    if (n == 0) throw ConfigError("oracle needs at least one miner");
    if (rounds == 0) throw ConfigError("oracle needs at least one round");
    if (tail >= rounds) throw ConfigError("oracle tail must be smaller than the round count");
    if (!hash_rates.empty() && hash_rates.size() != n) throw ConfigError("hash_rates must have one entry per miner");
    double dmax = 0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) {
            const double d = delta(u, v);
            if (!std::isfinite(d) || d < 0) throw ConfigError("delta entries must be finite and >= 0");
            dmax = std::max(dmax, d);
        }
    std::vector<double> cum;
    if (!hash_rates.empty()) {
        double acc = 0;
        for (double h : hash_rates) {
            if (!(h > 0) || !std::isfinite(h)) throw ConfigError("hash rates must be > 0");
            acc += h;
            cum.push_back(acc);
        }
    }

    RoundTrace t;
    t.n = n;
    t.tail = tail;
    t.rounds.resize(std::size_t{rounds} + 1);
    std::vector<std::vector<std::uint32_t>> by_height(1, std::vector<std::uint32_t>{0});
    Rng rng(derive_seed(seed, StreamTag::Oracle));

    // Blocks from rounds <= settled are visible to every miner.
    std::uint32_t settled = 0;
    std::uint32_t settled_height = 0;
    for (std::uint32_t r = 1; r <= rounds; ++r) {
        MinerId m;
        if (cum.empty()) {
            m = static_cast<MinerId>(rng.below(n));
        } else {
            const double u = rng.uniform01() * cum.back();
            m = static_cast<MinerId>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
            if (static_cast<std::size_t>(m) >= n) m = static_cast<MinerId>(n - 1);
        }
        while (settled + 1 < r && static_cast<double>(settled + 1) + dmax <= static_cast<double>(r)) {
            ++settled;
            settled_height = std::max(settled_height, t.rounds[settled].height);
        }
        const auto arrival = [&](std::uint32_t b) {
            if (b == 0) return 0.0;
            return static_cast<double>(b) + delta(static_cast<std::size_t>(t.rounds[b].miner), static_cast<std::size_t>(m));
        };
        std::uint32_t H = settled_height;
        for (std::uint32_t b = settled + 1; b < r; ++b)
            if (arrival(b) <= static_cast<double>(r)) H = std::max(H, t.rounds[b].height);
        std::uint32_t parent = 0;
        double best_arrival = 0;
        bool found = false;
        for (std::uint32_t b : by_height[H]) {
            const double a = arrival(b);
            if (a > static_cast<double>(r)) continue;
            if (!found || a < best_arrival || (a == best_arrival && b < parent)) {
                parent = b;
                best_arrival = a;
                found = true;
            }
        }
        auto& rec = t.rounds[r];
        rec.miner = m;
        rec.parent = parent;
        rec.height = H + 1;
        if (by_height.size() <= rec.height) by_height.resize(rec.height + 1);
        by_height[rec.height].push_back(r);
    }

    const std::uint32_t top = static_cast<std::uint32_t>(by_height.size() - 1);
    std::uint32_t cur = *std::min_element(by_height[top].begin(), by_height[top].end());
    t.chain.resize(top + 1);
    for (std::uint32_t h = top + 1; h-- > 0;) {
        t.chain[h] = cur;
        t.rounds[cur].in_chain = true;
        cur = t.rounds[cur].parent;
    }
    return t;
}

net::DeltaMatrix two_cluster_delta(std::size_t n, double p, double eps, double delta)
{
    const auto labels = two_cluster_labels(n, p);
    net::DeltaMatrix d(n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) d.set(u, v, labels[u] == labels[v] ? eps : delta);
    return d;
}

std::vector<int> two_cluster_labels(std::size_t n, double p)
{
    if (!(p >= 0 && p <= 1)) throw ConfigError("cluster fraction must be in [0, 1]");
    const auto k = static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
    std::vector<int> labels(n, 2);
    for (std::size_t v = 0; v < k; ++v) labels[v] = 1;
    return labels;
}

const char* to_string(PhaseKind kind)
{
    switch (kind) {
    case PhaseKind::OneRun: return "1-run";
    case PhaseKind::TwoRun: return "2-run";
    case PhaseKind::Fork: return "fork";
    }
    return "?";
}

std::vector<Phase> phase_partition(const std::vector<int>& seq)
{
    std::vector<Phase> out;
    const auto N = static_cast<std::uint32_t>(seq.size());
    const auto at = [&](std::uint32_t pos) { return seq[pos - 1]; };
    std::uint32_t i = 1;
    while (i <= N) {
        const int c = at(i);
        const PhaseKind run_kind = c == 1 ? PhaseKind::OneRun : PhaseKind::TwoRun;
        std::uint32_t j = i;
        while (j + 1 <= N && at(j + 1) == c) ++j;
        if (j == N) {
            out.push_back(Phase{run_kind, i, N, c, true});
            break;
        }
        if (j > i) out.push_back(Phase{run_kind, i, j - 1, c, true});
        const std::uint32_t f = j;
        std::uint32_t s = f;
        for (;;) {
            if (s + 1 > N) {
                out.push_back(Phase{PhaseKind::Fork, f, N, 0, false});
                return out;
            }
            if (at(s) == at(s + 1)) break;
            s += 2;
        }
        out.push_back(Phase{PhaseKind::Fork, f, s - 1, at(s), true});
        i = s;
    }
    return out;
}

std::vector<Phase> classify_phases(const RoundTrace& trace, const std::vector<int>& cluster_of)
{
    if (cluster_of.size() != trace.n) throw ConfigError("cluster labels must cover every miner");
    for (int c : cluster_of)
        if (c != 1 && c != 2) throw ConfigError("cluster labels must be 1 or 2");
    const std::size_t R = trace.round_count();
    std::vector<int> seq(R);
    for (std::size_t r = 1; r <= R; ++r) seq[r - 1] = cluster_of[static_cast<std::size_t>(trace.rounds[r].miner)];
    const auto phases = phase_partition(seq);
    const auto cl = [&](std::uint32_t r) { return seq[r - 1]; };
    const auto parent = [&](std::uint32_t r) { return trace.rounds[r].parent; };
    const auto fail = [](std::uint32_t r, const std::string& what) {
        throw ModelError("round " + std::to_string(r) + ": " + what);
    };

    // Expected parent of the first block of the next run.
    std::uint32_t next_run_parent = 0;
    std::vector<std::uint32_t> winners;
    std::uint32_t closed_end = 0;
    std::uint32_t covered = 0;
    for (const Phase& ph : phases) {
        if (ph.first != covered + 1) fail(ph.first, "phase partition has a gap");
        covered = ph.last;
        if (ph.kind != PhaseKind::Fork) {
            for (std::uint32_t r = ph.first; r <= ph.last; ++r) {
                const std::uint32_t want = r == ph.first ? next_run_parent : r - 1;
                if (parent(r) != want) fail(r, "run block does not extend the previous block");
                winners.push_back(r);
            }
            next_run_parent = ph.last;
            closed_end = ph.last;
            continue;
        }
        // Fork: the opening block extends the previous run (or genesis); the opposing cluster
        // branches from that block's parent.
        const std::uint32_t f = ph.first;
        const std::uint32_t root = parent(f);
        if (parent(f) != next_run_parent) fail(f, "fork does not start from the preceding run");
        std::uint32_t tip[3] = {0, root, root};
        tip[cl(f)] = f;
        const std::uint32_t stop = ph.closed ? ph.last + 1 : ph.last;
        for (std::uint32_t r = f + 1; r <= stop; ++r) {
            if (parent(r) != tip[cl(r)])
                fail(r, "block extends neither of the two competing forks (more than two concurrent forks)");
            tip[cl(r)] = r;
        }
        if (!ph.closed) break;
        for (std::uint32_t r = f; r <= ph.last; ++r)
            if (cl(r) == ph.winner) winners.push_back(r);
        // The closing pair's first block was checked above against the winner's fork.
        next_run_parent = parent(ph.last + 1);
        closed_end = ph.last;
    }

    std::vector<std::uint32_t> chain_prefix;
    for (std::size_t h = 1; h < trace.chain.size(); ++h)
        if (trace.chain[h] <= closed_end) chain_prefix.push_back(trace.chain[h]);
    if (chain_prefix != winners) {
        std::size_t k = 0;
        while (k < winners.size() && k < chain_prefix.size() && winners[k] == chain_prefix[k]) ++k;
        const std::uint32_t r = k < winners.size() ? winners[k] : (k < chain_prefix.size() ? chain_prefix[k] : closed_end);
        fail(r, "winner blocks of the phases do not reproduce the final chain");
    }
    return phases;
}

} // namespace powtopo::theory
