// Built with -mavx2 -mfma; only entered after a runtime CPU check.
#include "sicl/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace sicl::kernels {

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd(), s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
        s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), s2);
        s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), s3);
    }
    for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

// 4 x 8 register block.
void block_4x8(int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc) {
    __m256d c00 = _mm256_loadu_pd(c), c01 = _mm256_loadu_pd(c + 4);
    __m256d c10 = _mm256_loadu_pd(c + ldc), c11 = _mm256_loadu_pd(c + ldc + 4);
    __m256d c20 = _mm256_loadu_pd(c + 2 * ldc), c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
    __m256d c30 = _mm256_loadu_pd(c + 3 * ldc), c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
    const double* a0 = a;
    const double* a1 = a + lda;
    const double* a2 = a + 2 * static_cast<std::size_t>(lda);
    const double* a3 = a + 3 * static_cast<std::size_t>(lda);
    for (int p = 0; p < k; ++p) {
        const double* bp = b + static_cast<std::size_t>(p) * ldb;
        const __m256d b0 = _mm256_loadu_pd(bp), b1 = _mm256_loadu_pd(bp + 4);
        __m256d av = _mm256_broadcast_sd(a0 + p);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_broadcast_sd(a1 + p);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_broadcast_sd(a2 + p);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_broadcast_sd(a3 + p);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
    }
    _mm256_storeu_pd(c, c00);
    _mm256_storeu_pd(c + 4, c01);
    _mm256_storeu_pd(c + ldc, c10);
    _mm256_storeu_pd(c + ldc + 4, c11);
    _mm256_storeu_pd(c + 2 * ldc, c20);
    _mm256_storeu_pd(c + 2 * ldc + 4, c21);
    _mm256_storeu_pd(c + 3 * ldc, c30);
    _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

void block_1x8(int k, const double* a, const double* b, int ldb, double* c) {
    __m256d c0 = _mm256_loadu_pd(c), c1 = _mm256_loadu_pd(c + 4);
    for (int p = 0; p < k; ++p) {
        const double* bp = b + static_cast<std::size_t>(p) * ldb;
        const __m256d av = _mm256_broadcast_sd(a + p);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), c1);
    }
    _mm256_storeu_pd(c, c0);
    _mm256_storeu_pd(c + 4, c1);
}

void block_4x4(int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc) {
    __m256d c0 = _mm256_loadu_pd(c), c1 = _mm256_loadu_pd(c + ldc);
    __m256d c2 = _mm256_loadu_pd(c + 2 * ldc), c3 = _mm256_loadu_pd(c + 3 * ldc);
    const double* a1 = a + lda;
    const double* a2 = a + 2 * static_cast<std::size_t>(lda);
    const double* a3 = a + 3 * static_cast<std::size_t>(lda);
    for (int p = 0; p < k; ++p) {
        const __m256d bv = _mm256_loadu_pd(b + static_cast<std::size_t>(p) * ldb);
        c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p), bv, c0);
        c1 = _mm256_fmadd_pd(_mm256_broadcast_sd(a1 + p), bv, c1);
        c2 = _mm256_fmadd_pd(_mm256_broadcast_sd(a2 + p), bv, c2);
        c3 = _mm256_fmadd_pd(_mm256_broadcast_sd(a3 + p), bv, c3);
    }
    _mm256_storeu_pd(c, c0);
    _mm256_storeu_pd(c + ldc, c1);
    _mm256_storeu_pd(c + 2 * ldc, c2);
    _mm256_storeu_pd(c + 3 * ldc, c3);
}

void block_1x4(int k, const double* a, const double* b, int ldb, double* c) {
    __m256d c0 = _mm256_loadu_pd(c);
    for (int p = 0; p < k; ++p)
        c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p), _mm256_loadu_pd(b + static_cast<std::size_t>(p) * ldb), c0);
    _mm256_storeu_pd(c, c0);
}

void gemm_avx2(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc,
               bool accumulate) {
    if (!accumulate)
        for (int i = 0; i < m; ++i) std::fill(c + static_cast<std::size_t>(i) * ldc, c + static_cast<std::size_t>(i) * ldc + n, 0.0);
    int j = 0;
    for (; j + 8 <= n; j += 8) {
        int i = 0;
        for (; i + 4 <= m; i += 4)
            block_4x8(k, a + static_cast<std::size_t>(i) * lda, lda, b + j, ldb, c + static_cast<std::size_t>(i) * ldc + j, ldc);
        for (; i < m; ++i) block_1x8(k, a + static_cast<std::size_t>(i) * lda, b + j, ldb, c + static_cast<std::size_t>(i) * ldc + j);
    }
    for (; j + 4 <= n; j += 4) {
        int i = 0;
        for (; i + 4 <= m; i += 4)
            block_4x4(k, a + static_cast<std::size_t>(i) * lda, lda, b + j, ldb, c + static_cast<std::size_t>(i) * ldc + j, ldc);
        for (; i < m; ++i) block_1x4(k, a + static_cast<std::size_t>(i) * lda, b + j, ldb, c + static_cast<std::size_t>(i) * ldc + j);
    }
    for (; j < n; ++j)
        for (int i = 0; i < m; ++i) {
            double s = c[static_cast<std::size_t>(i) * ldc + j];
            for (int p = 0; p < k; ++p) s += a[static_cast<std::size_t>(i) * lda + p] * b[static_cast<std::size_t>(p) * ldb + j];
            c[static_cast<std::size_t>(i) * ldc + j] = s;
        }
}

// exp(x) = 2^k exp(r), |r| <= ln2/2, degree-11 Taylor in r (rel. error < 1e-14).
inline __m256d exp4(__m256d x) {
    x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
    x = _mm256_min_pd(x, _mm256_set1_pd(709.0));
    const __m256d kf = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                       _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(kf, _mm256_set1_pd(6.93147180369123816490e-01), x);
    r = _mm256_fnmadd_pd(kf, _mm256_set1_pd(1.90821492927058770002e-10), r);
    __m256d p = _mm256_set1_pd(1.0 / 39916800.0);
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    const __m128i ki = _mm256_cvtpd_epi32(kf);
    __m256i bits = _mm256_cvtepi32_epi64(ki);
    bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

void exp_avx2(double* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, exp4(_mm256_loadu_pd(x + i)));
    if (i < n) {
        alignas(32) double tail[4] = {0.0, 0.0, 0.0, 0.0};
        std::copy(x + i, x + n, tail);
        _mm256_store_pd(tail, exp4(_mm256_load_pd(tail)));
        std::copy(tail, tail + (n - i), x + i);
    }
}

double exp_sum_avx2(double* x, std::size_t n, double scale, double shift) {
    const __m256d vs = _mm256_set1_pd(scale), vh = _mm256_set1_pd(shift);
    __m256d acc = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d e0 = exp4(_mm256_fmsub_pd(_mm256_loadu_pd(x + i), vs, vh));
        const __m256d e1 = exp4(_mm256_fmsub_pd(_mm256_loadu_pd(x + i + 4), vs, vh));
        _mm256_storeu_pd(x + i, e0);
        _mm256_storeu_pd(x + i + 4, e1);
        acc = _mm256_add_pd(acc, e0);
        acc1 = _mm256_add_pd(acc1, e1);
    }
    acc = _mm256_add_pd(acc, acc1);
    for (; i + 4 <= n; i += 4) {
        const __m256d e = exp4(_mm256_fmsub_pd(_mm256_loadu_pd(x + i), vs, vh));
        _mm256_storeu_pd(x + i, e);
        acc = _mm256_add_pd(acc, e);
    }
    double s = hsum(acc);
    if (i < n) {
        alignas(32) double tail[4] = {0.0, 0.0, 0.0, 0.0};
        std::copy(x + i, x + n, tail);
        _mm256_store_pd(tail, exp4(_mm256_fmsub_pd(_mm256_load_pd(tail), vs, vh)));
        for (std::size_t t = 0; t < n - i; ++t) {
            x[i + t] = tail[t];
            s += tail[t];
        }
    }
    return s;
}

double max_avx2(const double* x, std::size_t n) {
    __m256d m = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, m);
    double out = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    for (; i < n; ++i) out = std::max(out, x[i]);
    return out;
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 = _mm256_add_pd(s0, _mm256_loadu_pd(x + i));
        s1 = _mm256_add_pd(s1, _mm256_loadu_pd(x + i + 4));
    }
    for (; i + 4 <= n; i += 4) s0 = _mm256_add_pd(s0, _mm256_loadu_pd(x + i));
    double s = hsum(_mm256_add_pd(s0, s1));
    for (; i < n; ++i) s += x[i];
    return s;
}

const Table kAvx2{dot_avx2, axpy_avx2, gemm_avx2, exp_avx2, exp_sum_avx2, max_avx2, sum_avx2};

}  // namespace

namespace detail {
const Table* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace sicl::kernels

#else

namespace sicl::kernels::detail {
const Table* avx2_table() { return nullptr; }
}  // namespace sicl::kernels::detail

#endif
