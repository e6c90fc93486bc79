#include <powtopo/kernels/minplus.hpp>

#include <cstdlib>
#include <cstring>

namespace powtopo::kernels {

void relax_row_scalar(double* row, const double* pivot, double via, std::size_t n)
{
    for (std::size_t j = 0; j < n; ++j) {
        const double cand = via + pivot[j];
        if (cand < row[j]) row[j] = cand;
    }
}

namespace {

struct Choice {
    RelaxRowFn fn;
    std::string_view name;
};

Choice choose()
{
    const char* forced = std::getenv("POWTOPO_KERNEL");
    if (forced && std::strcmp(forced, "scalar") == 0) return {relax_row_scalar, "scalar"};
#if defined(POWTOPO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    if (__builtin_cpu_supports("avx2")) return {relax_row_avx2, "avx2"};
#endif
    return {relax_row_scalar, "scalar"};
}

const Choice& choice()
{
    static const Choice c = choose();
    return c;
}

} // namespace

RelaxRowFn relax_row() { return choice().fn; }
std::string_view relax_row_name() { return choice().name; }

} // namespace powtopo::kernels
