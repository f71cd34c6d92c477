#include "bype/kernels.hpp"

// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma on
// x86-64 and callers only reach it after a runtime cpuid check; on other
// targets it compiles to a null table.

#if defined(__AVX2__) && defined(__FMA__)

#include <cstring>
#include <immintrin.h>

namespace bype::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void matmul_avx2(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t n, std::size_t k, bool ta, bool tb, bool acc) {
    if (!acc) std::memset(c, 0, m * n * sizeof(double));
    if (!ta && !tb) {
        for (std::size_t i = 0; i < m; ++i) {
            double* ci = c + i * n;
            const double* ai = a + i * k;
            for (std::size_t l = 0; l < k; ++l) {
                const double av = ai[l];
                const __m256d va = _mm256_set1_pd(av);
                const double* bl = b + l * n;
                std::size_t j = 0;
                for (; j + 4 <= n; j += 4) {
                    __m256d vc = _mm256_loadu_pd(ci + j);
                    vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(bl + j), vc);
                    _mm256_storeu_pd(ci + j, vc);
                }
                for (; j < n; ++j) ci[j] += av * bl[j];
            }
        }
    } else if (!ta && tb) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* ai = a + i * k;
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double* bj = b + j * k;
                __m256d vs = _mm256_setzero_pd();
                std::size_t l = 0;
                for (; l + 4 <= k; l += 4)
                    vs = _mm256_fmadd_pd(_mm256_loadu_pd(ai + l),
                                         _mm256_loadu_pd(bj + l), vs);
                double s = hsum(vs);
                for (; l < k; ++l) s += ai[l] * bj[l];
                ci[j] += s;
            }
        }
    } else if (ta && !tb) {
        for (std::size_t l = 0; l < k; ++l) {
            const double* al = a + l * m;
            const double* bl = b + l * n;
            for (std::size_t i = 0; i < m; ++i) {
                const double av = al[i];
                const __m256d va = _mm256_set1_pd(av);
                double* ci = c + i * n;
                std::size_t j = 0;
                for (; j + 4 <= n; j += 4) {
                    __m256d vc = _mm256_loadu_pd(ci + j);
                    vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(bl + j), vc);
                    _mm256_storeu_pd(ci + j, vc);
                }
                for (; j < n; ++j) ci[j] += av * bl[j];
            }
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double* bj = b + j * k;
                double s = 0.0;
                for (std::size_t l = 0; l < k; ++l) s += a[l * m + i] * bj[l];
                ci[j] += s;
            }
        }
    }
}

void add_avx2(const double* a, const double* b, double* c, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(c + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                              _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) c[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* c, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(c + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                              _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) c[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* c, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(c + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                              _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) c[i] = a[i] * b[i];
}

void scale_avx2(const double* a, double s, double* c, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(c + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
    for (; i < n; ++i) c[i] = a[i] * s;
}

void axpy_avx2(double s, const double* x, double* y, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(vs, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += s * x[i];
}

void square_avx2(const double* a, double* c, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        _mm256_storeu_pd(c + i, _mm256_mul_pd(va, va));
    }
    for (; i < n; ++i) c[i] = a[i] * a[i];
}

void relu_avx2(const double* a, double* c, std::size_t n) {
    const __m256d z = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(c + i, _mm256_max_pd(_mm256_loadu_pd(a + i), z));
    for (; i < n; ++i) c[i] = a[i] > 0.0 ? a[i] : 0.0;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d vs = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vs = _mm256_add_pd(vs, _mm256_loadu_pd(a + i));
    double s = hsum(vs);
    for (; i < n; ++i) s += a[i];
    return s;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d vs = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        vs = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), vs);
    double s = hsum(vs);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sqdiff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d vs = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                        _mm256_loadu_pd(b + i));
        vs = _mm256_fmadd_pd(d, d, vs);
    }
    double s = hsum(vs);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double maxv_avx2(const double* a, std::size_t n) {
    double m = a[0];
    std::size_t i = 0;
    if (n >= 4) {
        __m256d vm = _mm256_loadu_pd(a);
        for (i = 4; i + 4 <= n; i += 4)
            vm = _mm256_max_pd(vm, _mm256_loadu_pd(a + i));
        __m128d lo = _mm256_castpd256_pd128(vm);
        __m128d hi = _mm256_extractf128_pd(vm, 1);
        lo = _mm_max_pd(lo, hi);
        __m128d sh = _mm_unpackhi_pd(lo, lo);
        m = _mm_cvtsd_f64(_mm_max_sd(lo, sh));
    }
    for (; i < n; ++i)
        if (a[i] > m) m = a[i];
    return m;
}

} // namespace

const Table* avx2_table() {
    static const Table t = {
        "avx2",     matmul_avx2, add_avx2,    sub_avx2,  mul_avx2,
        scale_avx2, axpy_avx2,   square_avx2, relu_avx2, sum_avx2,
        dot_avx2,   sqdiff_avx2, maxv_avx2,
    };
    return &t;
}

} // namespace bype::kernels

#else

namespace bype::kernels {
const Table* avx2_table() { return nullptr; }
} // namespace bype::kernels

#endif
