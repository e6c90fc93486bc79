#include <powtopo/kernels/minplus.hpp>

#include <immintrin.h>

namespace powtopo::kernels {

void relax_row_avx2(double* row, const double* pivot, double via, std::size_t n)
{
    const __m256d v = _mm256_set1_pd(via);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d cand = _mm256_add_pd(v, _mm256_loadu_pd(pivot + j));
        const __m256d cur = _mm256_loadu_pd(row + j);
        // min_pd(a, b) returns b unless a < b, which matches the scalar keep-on-tie rule.
        _mm256_storeu_pd(row + j, _mm256_min_pd(cand, cur));
    }
    for (; j < n; ++j) {
        const double cand = via + pivot[j];
        if (cand < row[j]) row[j] = cand;
    }
}

} // namespace powtopo::kernels
