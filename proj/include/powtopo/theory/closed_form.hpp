#pragma once

#include <array>
#include <cstddef>
#include <functional>

namespace powtopo::theory {

struct SingleClusterResult {
    double F;
    double W;
};

/**
 * Per-miner expectations for one cluster with pairwise latency eps (in rounds).
 * @throws DomainError unless 0 < eps < 2 and n >= 1.
 */
SingleClusterResult single_cluster(std::size_t n, double eps);

struct TwoClusterParams {
    double p{0.7};      //!< fraction of miners in the dominant cluster
    std::size_t n{20};
    double eps{0.3};    //!< intra-cluster latency, rounds
    double delta{1.5};  //!< inter-cluster latency, rounds

    //! @throws DomainError outside 0.5 <= p < 1, 0 < eps < 1, 1 < delta < 2, delta - 1 > eps.
    void validate() const;
};

//! Expected per-miner fraction of chain blocks for a dominant-cluster miner.
double two_cluster_F(const TwoClusterParams& params);
//! n * two_cluster_F.
double two_cluster_gain(const TwoClusterParams& params);
//! Expected fraction of a dominant-cluster miner's blocks left off the chain.
double two_cluster_W(const TwoClusterParams& params);

struct ThreeClusterParams {
    double p1{1.0 / 3}, p2{1.0 / 3}, p3{1.0 / 3};
    std::size_t n{30};
    double eps{0.3};
    double delta{1.5};

    //! @throws DomainError unless p_i >= 0 sum to 1 (1e-12), 0 < eps < 1, 1 + eps < delta < 2.
    void validate() const;
};

/**
 * The 12 fork-tree unknowns alpha^w_ij for ordered cluster pairs (i, j), i != j, with winner
 * w in {i, j}, written as A x = b.
 */
struct AlphaSystem {
    static constexpr std::size_t kSize = 12;
    using Matrix = std::array<std::array<double, kSize>, kSize>;
    using Vector = std::array<double, kSize>;

    Matrix A{};
    Vector b{};

    //! Unknown index of alpha^w_ij; clusters are 1-based.
    static std::size_t index(int i, int j, int w);

    static AlphaSystem build(double p1, double p2, double p3);
    //! Max over equations of |x_k - (constant + sum of recurrence terms)|.
    double max_residual(const Vector& x) const;
};

struct LinearSolve {
    AlphaSystem::Vector x{};
    double condition{0};  //!< 1-norm condition number estimate
};

/**
 * Dense Gaussian elimination with partial pivoting.
 * @throws NumericalError when a pivot vanishes or the condition number exceeds 1e12.
 */
LinearSolve solve_dense(const AlphaSystem::Matrix& A, const AlphaSystem::Vector& b);

struct ThreeClusterResult {
    double F{0};                 //!< per-miner fraction for a cluster-1 miner
    double gain{0};              //!< n * F
    std::array<double, 3> EM{};  //!< expected chain blocks per cluster per phase cycle
    double residual{0};
    double condition{0};
    bool reduced{false};         //!< true when a zero cluster sent us to the two-cluster formula
};

/**
 * Three-cluster expectation for a cluster-1 miner. If any p_i is zero the surviving pair is
 * evaluated with the two-cluster formula instead of solving a singular system.
 */
ThreeClusterResult three_cluster_F(const ThreeClusterParams& params);

//! Gain of a cluster-1 miner when p1 = p2 = p_each and p3 = 1 - 2 p_each. Needs 0 < p_each < 0.5.
double two_equal_dominant_gain(double p_each, std::size_t n);

struct Optimum {
    double p{0};
    double gain{0};
};

/**
 * Grid scan of gain(p) over lo, lo+step, ..., up to hi; ties go to the smaller p.
 * Grid points whose evaluation throws DomainError are skipped.
 */
Optimum optimal_cluster_fraction(const std::function<double(double)>& gain, double lo, double hi, double step);

} // namespace powtopo::theory
