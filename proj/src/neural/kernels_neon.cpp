// AArch64 only; compiles to an empty table elsewhere.
#include "sicl/kernels.hpp"

#if defined(__ARM_NEON) && defined(__aarch64__)

#include <arm_neon.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sicl::kernels {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 = vfmaq_f64(s0, vld1q_f64(a + i), vld1q_f64(b + i));
        s1 = vfmaq_f64(s1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(s0, s1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_neon(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc,
               bool accumulate) {
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * ldc;
        if (!accumulate) std::fill(crow, crow + n, 0.0);
        for (int p = 0; p < k; ++p)
            axpy_neon(a[static_cast<std::size_t>(i) * lda + p], b + static_cast<std::size_t>(p) * ldb, crow, n);
    }
}

float64x2_t exp2v(float64x2_t x) {
    x = vmaxq_f64(x, vdupq_n_f64(-708.0));
    x = vminq_f64(x, vdupq_n_f64(709.0));
    const float64x2_t kf = vrndnq_f64(vmulq_f64(x, vdupq_n_f64(1.4426950408889634)));
    float64x2_t r = vfmsq_f64(x, kf, vdupq_n_f64(6.93147180369123816490e-01));
    r = vfmsq_f64(r, kf, vdupq_n_f64(1.90821492927058770002e-10));
    static constexpr double c[] = {1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
                                   1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
                                   1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
                                   1.0,                1.0};
    float64x2_t p = vdupq_n_f64(c[0]);
    for (int i = 1; i < 14; ++i) p = vfmaq_f64(vdupq_n_f64(c[i]), p, r);
    int64x2_t bits = vshlq_n_s64(vaddq_s64(vcvtq_s64_f64(kf), vdupq_n_s64(1023)), 52);
    return vmulq_f64(p, vreinterpretq_f64_s64(bits));
}

void exp_neon(double* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(x + i, exp2v(vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] = std::exp(std::max(x[i], -708.0));
}

double exp_sum_neon(double* x, std::size_t n, double scale, double shift) {
    const float64x2_t vs = vdupq_n_f64(scale), vh = vdupq_n_f64(shift);
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t e = exp2v(vsubq_f64(vmulq_f64(vld1q_f64(x + i), vs), vh));
        vst1q_f64(x + i, e);
        acc = vaddq_f64(acc, e);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        x[i] = std::exp(std::max(x[i] * scale - shift, -708.0));
        s += x[i];
    }
    return s;
}

double max_neon(const double* x, std::size_t n) {
    float64x2_t m = vdupq_n_f64(-std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vld1q_f64(x + i));
    double out = vmaxvq_f64(m);
    for (; i < n; ++i) out = std::max(out, x[i]);
    return out;
}

double sum_neon(const double* x, std::size_t n) {
    float64x2_t s = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) s = vaddq_f64(s, vld1q_f64(x + i));
    double out = vaddvq_f64(s);
    for (; i < n; ++i) out += x[i];
    return out;
}

const Table kNeon{dot_neon, axpy_neon, gemm_neon, exp_neon, exp_sum_neon, max_neon, sum_neon};

}  // namespace

namespace detail {
const Table* neon_table() { return &kNeon; }
}  // namespace detail

}  // namespace sicl::kernels

#else

namespace sicl::kernels::detail {
const Table* neon_table() { return nullptr; }
}  // namespace sicl::kernels::detail

#endif
