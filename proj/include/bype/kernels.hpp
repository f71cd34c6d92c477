#pragma once

#include <cstddef>

namespace bype::kernels {

// Data-parallel inner loops behind the tensor layer. Every entry has a
// scalar reference implementation and, on x86-64, an AVX2+FMA variant
// selected once at startup. The two backends are equivalence-tested:
// elementwise kernels match the scalar reference bit for bit; reductions
// and matmul reassociate and are compared within tight tolerances.
struct Table {
    const char* name;

    // C[m x n] (+)= op(A) * op(B); op(A) is m x k (physical k x m when ta),
    // op(B) is k x n (physical n x k when tb). Row-major, contiguous.
    void (*matmul)(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t n, std::size_t k, bool ta, bool tb, bool acc);

    void (*add)(const double* a, const double* b, double* c, std::size_t n);
    void (*sub)(const double* a, const double* b, double* c, std::size_t n);
    void (*mul)(const double* a, const double* b, double* c, std::size_t n);
    void (*scale)(const double* a, double s, double* c, std::size_t n);
    void (*axpy)(double s, const double* x, double* y, std::size_t n); // y += s*x
    void (*square)(const double* a, double* c, std::size_t n);
    void (*relu)(const double* a, double* c, std::size_t n);

    double (*sum)(const double* a, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sqdiff)(const double* a, const double* b, std::size_t n); // sum (a-b)^2
    double (*maxv)(const double* a, std::size_t n);                    // n >= 1
};

const Table& scalar_table();

// nullptr when the build or the CPU lacks AVX2+FMA.
const Table* avx2_table();

// Backend chosen at startup: AVX2 when supported, else scalar. The
// BYPE_KERNELS environment variable ("scalar" | "avx2" | "auto") overrides.
const Table& active();

} // namespace bype::kernels
