#include <powtopo/error.hpp>
#include <powtopo/theory/closed_form.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace powtopo::theory {

SingleClusterResult single_cluster(std::size_t n, double eps)
{
    if (n == 0) throw DomainError("n must be >= 1");
    if (!(eps > 0)) throw DomainError("eps must be > 0");
    if (!(eps < 2)) throw DomainError("eps = " + std::to_string(eps) + " is outside the model (needs eps < 2)");
    const double F = 1.0 / static_cast<double>(n);
    return {F, eps <= 1.0 ? 0.0 : 0.5};
}

void TwoClusterParams::validate() const
{
    if (!(p >= 0.5 && p < 1.0)) throw DomainError("p = " + std::to_string(p) + " outside [0.5, 1)");
    if (n == 0) throw DomainError("n must be >= 1");
    if (!(eps > 0 && eps < 1)) throw DomainError("eps must be in (0, 1)");
    if (!(delta > 1 && delta < 2)) throw DomainError("delta must be in (1, 2)");
    if (!(delta - 1 > eps)) throw DomainError("needs delta - 1 > eps");
}

namespace {

struct TwoTerms {
    double dominant, minority, waste;
};

TwoTerms two_terms(double p)
{
    const double q = 1 - p;
    const double D = 1 - 2 * p * q;
    const double D2 = D * D;
    return {p / q + 2 * p * p * q / D2, q / p + 2 * q * q * p / D2, 2 * q * q * q / D2};
}

} // namespace

double two_cluster_F(const TwoClusterParams& params)
{
    params.validate();
    const double p = params.p, q = 1 - p;
    const auto t = two_terms(p);
    // Cluster totals: p * (per-miner dominant term) and q * (per-miner minority term).
    return t.dominant / (p * t.dominant + q * t.minority) / static_cast<double>(params.n);
}

double two_cluster_gain(const TwoClusterParams& params)
{
    return two_cluster_F(params) * static_cast<double>(params.n);
}

double two_cluster_W(const TwoClusterParams& params)
{
    params.validate();
    const auto t = two_terms(params.p);
    return t.waste / (t.dominant + t.waste);
}

void ThreeClusterParams::validate() const
{
    for (double p : {p1, p2, p3})
        if (!(p >= 0 && p <= 1)) throw DomainError("cluster fractions must be in [0, 1]");
    if (std::abs(p1 + p2 + p3 - 1.0) > 1e-12) throw DomainError("cluster fractions must sum to 1");
    if (n == 0) throw DomainError("n must be >= 1");
    if (!(eps > 0 && eps < 1)) throw DomainError("eps must be in (0, 1)");
    if (!(delta > 1 + eps && delta < 2)) throw DomainError("needs 1 + eps < delta < 2");
}

std::size_t AlphaSystem::index(int i, int j, int w)
{
    // Ordered pairs (1,2) (1,3) (2,1) (2,3) (3,1) (3,2); two winners each.
    static constexpr int pair_slot[4][4] = {{-1, -1, -1, -1}, {-1, -1, 0, 1}, {-1, 2, -1, 3}, {-1, 4, 5, -1}};
    if (i < 1 || i > 3 || j < 1 || j > 3 || i == j || (w != i && w != j))
        throw Error("invalid alpha index");
    return static_cast<std::size_t>(pair_slot[i][j] * 2 + (w == i ? 0 : 1));
}

namespace {

struct Term {
    int i, j, w;
};

// Six continuation terms for a subtree whose current fork is led by cluster `w`: after a pair of
// opposing blocks (i then j) the winner of that pair's subtree is listed here.
std::array<Term, 6> continuation(int w)
{
    switch (w) {
    case 1: return {{{1, 2, 1}, {2, 1, 1}, {1, 3, 1}, {3, 1, 1}, {2, 3, 2}, {3, 2, 3}}};
    case 2: return {{{1, 2, 2}, {2, 1, 2}, {1, 3, 1}, {3, 1, 3}, {2, 3, 2}, {3, 2, 2}}};
    default: return {{{1, 2, 1}, {2, 1, 2}, {1, 3, 3}, {3, 1, 3}, {2, 3, 3}, {3, 2, 3}}};
    }
}

double pair_weight(const std::array<double, 4>& p, const Term& t) { return p[static_cast<std::size_t>(t.i)] * p[static_cast<std::size_t>(t.j)]; }

} // namespace

AlphaSystem AlphaSystem::build(double p1, double p2, double p3)
{
    const std::array<double, 4> p{0, p1, p2, p3};
    AlphaSystem s;
    for (int i = 1; i <= 3; ++i) {
        for (int j = 1; j <= 3; ++j) {
            if (i == j) continue;
            for (int w : {i, j}) {
                const std::size_t row = index(i, j, w);
                s.A[row][row] += 1.0;
                s.b[row] = w == 1 ? 1.0 : 0.0;
                for (const Term& t : continuation(w)) s.A[row][index(t.i, t.j, t.w)] -= pair_weight(p, t);
            }
        }
    }
    return s;
}

double AlphaSystem::max_residual(const Vector& x) const
{
    double worst = 0;
    for (std::size_t r = 0; r < kSize; ++r) {
        double ax = 0;
        for (std::size_t c = 0; c < kSize; ++c) ax += A[r][c] * x[c];
        worst = std::max(worst, std::abs(ax - b[r]));
    }
    return worst;
}

LinearSolve solve_dense(const AlphaSystem::Matrix& A0, const AlphaSystem::Vector& b0)
{
    constexpr std::size_t N = AlphaSystem::kSize;
    AlphaSystem::Matrix A = A0;
    // Augment with the identity to get the inverse for the condition number.
    std::array<std::array<double, N + 1>, N> R{};
    for (std::size_t r = 0; r < N; ++r) {
        for (std::size_t c = 0; c < N; ++c) R[r][c] = r == c ? 1.0 : 0.0;
        R[r][N] = b0[r];
    }
    double norm_a = 0;
    for (std::size_t c = 0; c < N; ++c) {
        double s = 0;
        for (std::size_t r = 0; r < N; ++r) s += std::abs(A[r][c]);
        norm_a = std::max(norm_a, s);
    }
    for (std::size_t k = 0; k < N; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < N; ++r)
            if (std::abs(A[r][k]) > std::abs(A[piv][k])) piv = r;
        if (std::abs(A[piv][k]) < 1e-14 * std::max(norm_a, 1.0))
            throw NumericalError("singular system: pivot " + std::to_string(k) + " vanishes");
        std::swap(A[k], A[piv]);
        std::swap(R[k], R[piv]);
        for (std::size_t r = k + 1; r < N; ++r) {
            const double f = A[r][k] / A[k][k];
            if (f == 0) continue;
            for (std::size_t c = k; c < N; ++c) A[r][c] -= f * A[k][c];
            for (std::size_t c = 0; c <= N; ++c) R[r][c] -= f * R[k][c];
        }
    }
    for (std::size_t k = N; k-- > 0;) {
        for (std::size_t c = 0; c <= N; ++c) {
            double s = R[k][c];
            for (std::size_t j = k + 1; j < N; ++j) s -= A[k][j] * R[j][c];
            R[k][c] = s / A[k][k];
        }
    }
    LinearSolve out;
    double norm_inv = 0;
    for (std::size_t c = 0; c < N; ++c) {
        double s = 0;
        for (std::size_t r = 0; r < N; ++r) s += std::abs(R[r][c]);
        norm_inv = std::max(norm_inv, s);
    }
    for (std::size_t r = 0; r < N; ++r) out.x[r] = R[r][N];
    out.condition = norm_a * norm_inv;
    if (!(out.condition < 1e12))
        throw NumericalError("ill-conditioned alpha system (condition number " + std::to_string(out.condition) + ")");
    return out;
}

namespace {

//! Expected chain blocks of cluster 1 per cycle, given cluster fractions in the order (1, 2, 3).
double expected_m1(double p1, double p2, double p3, double* residual, double* condition)
{
    const std::array<double, 4> p{0, p1, p2, p3};
    const auto sys = AlphaSystem::build(p1, p2, p3);
    const auto sol = solve_dense(sys.A, sys.b);
    if (residual) *residual = std::max(*residual, sys.max_residual(sol.x));
    if (condition) *condition = std::max(*condition, sol.condition);
    double em = p1 * p1 / (1 - p1);
    for (int w = 1; w <= 3; ++w) {
        double s = 0;
        for (const Term& t : continuation(w)) s += pair_weight(p, t) * sol.x[AlphaSystem::index(t.i, t.j, t.w)];
        em += p[static_cast<std::size_t>(w)] * p[static_cast<std::size_t>(w)] * s;
    }
    return em;
}

} // namespace

ThreeClusterResult three_cluster_F(const ThreeClusterParams& params)
{
    params.validate();
    ThreeClusterResult r;
    const std::array<double, 3> p{params.p1, params.p2, params.p3};
    const double n = static_cast<double>(params.n);
    const int zeros = static_cast<int>(std::count(p.begin(), p.end(), 0.0));
    if (zeros > 0) {
        r.reduced = true;
        if (p[0] == 0) throw DomainError("cluster 1 is empty");
        if (zeros == 2) {
            r.F = 1.0 / n;
            r.gain = 1.0;
            return r;
        }
        const double mine = p[0];
        const double other = p[1] == 0 ? p[2] : p[1];
        const double eps = params.eps, delta = params.delta;
        const auto F_of = [&](double big) {
            return two_cluster_F(TwoClusterParams{big, params.n, eps, delta});
        };
        if (mine >= 0.5) {
            r.F = F_of(mine);
        } else {
            // Minority miner: the dominant cluster's total share is big * n * F(big).
            const double dom_share = other * n * F_of(other);
            r.F = (1 - dom_share) / (mine * n);
        }
        r.gain = r.F * n;
        return r;
    }
    r.EM[0] = expected_m1(p[0], p[1], p[2], &r.residual, &r.condition);
    r.EM[1] = expected_m1(p[1], p[0], p[2], &r.residual, &r.condition);
    r.EM[2] = expected_m1(p[2], p[1], p[0], &r.residual, &r.condition);
    const double total = r.EM[0] + r.EM[1] + r.EM[2];
    r.F = r.EM[0] / (p[0] * n * total);
    r.gain = r.F * n;
    return r;
}

double two_equal_dominant_gain(double p_each, std::size_t n)
{
    if (!(p_each > 0 && p_each < 0.5)) throw DomainError("p_each must be in (0, 0.5)");
    ThreeClusterParams params;
    params.p1 = p_each;
    params.p2 = p_each;
    params.p3 = 1 - 2 * p_each;
    params.n = n;
    return three_cluster_F(params).gain;
}

Optimum optimal_cluster_fraction(const std::function<double(double)>& gain, double lo, double hi, double step)
{
    if (!(step > 0)) throw DomainError("step must be > 0");
    if (!(hi >= lo)) throw DomainError("empty scan range");
    const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    Optimum best{lo, -1};
    bool any = false;
    for (long long i = 0; i <= count; ++i) {
        const double p = lo + static_cast<double>(i) * step;
        double g;
        try {
            g = gain(p);
        } catch (const DomainError&) {
            continue;
        }
        if (!any || g > best.gain) {
            best = {p, g};
            any = true;
        }
    }
    if (!any) throw DomainError("no grid point inside the formula's domain");
    return best;
}

} // namespace powtopo::theory
