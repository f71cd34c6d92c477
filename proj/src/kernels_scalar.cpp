#include "bype/kernels.hpp"

#include <cstring>

// Scalar reference kernels. Loop order mirrors the vector variants
// (saxpy-style matmul, sequential reductions) so the two backends differ
// only in rounding introduced by FMA and reassociation.

namespace bype::kernels {
namespace {

void matmul_scalar(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t n, std::size_t k, bool ta, bool tb, bool acc) {
    if (!acc) std::memset(c, 0, m * n * sizeof(double));
    if (!ta && !tb) {
        for (std::size_t i = 0; i < m; ++i) {
            double* ci = c + i * n;
            const double* ai = a + i * k;
            for (std::size_t l = 0; l < k; ++l) {
                const double av = ai[l];
                const double* bl = b + l * n;
                for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
            }
        }
    } else if (!ta && tb) {
        // b physically n x k: C[i,j] = dot(a_row_i, b_row_j)
        for (std::size_t i = 0; i < m; ++i) {
            const double* ai = a + i * k;
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double* bj = b + j * k;
                double s = 0.0;
                for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
                ci[j] += s;
            }
        }
    } else if (ta && !tb) {
        // a physically k x m: C[i,j] = sum_l a[l,i] * b[l,j]
        for (std::size_t l = 0; l < k; ++l) {
            const double* al = a + l * m;
            const double* bl = b + l * n;
            for (std::size_t i = 0; i < m; ++i) {
                const double av = al[i];
                double* ci = c + i * n;
                for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
            }
        }
    } else {
        // a physically k x m, b physically n x k
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

void add_scalar(const double* a, const double* b, double* c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) c[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

void scale_scalar(const double* a, double s, double* c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) c[i] = a[i] * s;
}

void axpy_scalar(double s, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

void square_scalar(const double* a, double* c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) c[i] = a[i] * a[i];
}

void relu_scalar(const double* a, double* c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) c[i] = a[i] > 0.0 ? a[i] : 0.0;
}

double sum_scalar(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sqdiff_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double maxv_scalar(const double* a, std::size_t n) {
    double m = a[0];
    for (std::size_t i = 1; i < n; ++i)
        if (a[i] > m) m = a[i];
    return m;
}

} // namespace

const Table& scalar_table() {
    static const Table t = {
        "scalar",     matmul_scalar, add_scalar,  sub_scalar,    mul_scalar,
        scale_scalar, axpy_scalar,   square_scalar, relu_scalar, sum_scalar,
        dot_scalar,   sqdiff_scalar, maxv_scalar,
    };
    return t;
}

} // namespace bype::kernels
