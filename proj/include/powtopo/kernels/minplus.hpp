#pragma once

#include <cstddef>
#include <string_view>

namespace powtopo::kernels {

//! row[j] = min(row[j], via + pivot[j]) for j in [0, n).
using RelaxRowFn = void (*)(double* row, const double* pivot, double via, std::size_t n);

void relax_row_scalar(double* row, const double* pivot, double via, std::size_t n);
#if defined(POWTOPO_HAVE_AVX2)
void relax_row_avx2(double* row, const double* pivot, double via, std::size_t n);
#endif

/**
 * Best variant for the running CPU. The choice is made once; setting the environment variable
 * POWTOPO_KERNEL=scalar forces the reference implementation.
 */
RelaxRowFn relax_row();

//! Name of the variant relax_row() returns ("scalar" or "avx2").
std::string_view relax_row_name();

} // namespace powtopo::kernels
