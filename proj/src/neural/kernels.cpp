#include "sicl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>

#include "sicl/error.hpp"

namespace sicl::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_scalar(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc,
                 bool accumulate) {
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * ldc;
        if (!accumulate) std::fill(crow, crow + n, 0.0);
        for (int p = 0; p < k; ++p) {
            const double aip = a[static_cast<std::size_t>(i) * lda + p];
            const double* brow = b + static_cast<std::size_t>(p) * ldb;
            for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

void exp_scalar(double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(std::max(x[i], -708.0));
}

double exp_sum_scalar(double* x, std::size_t n, double scale, double shift) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::exp(std::max(x[i] * scale - shift, -708.0));
        s += x[i];
    }
    return s;
}

double max_scalar(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

double sum_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

const Table kScalar{dot_scalar, axpy_scalar, gemm_scalar, exp_scalar, exp_sum_scalar, max_scalar, sum_scalar};

Backend detect() {
    if (const char* env = std::getenv("SICL_SIMD")) {
        const std::string v = env;
        if (v == "scalar") return Backend::Scalar;
        if (v == "avx2" && backend_available(Backend::Avx2)) return Backend::Avx2;
        if (v == "neon" && backend_available(Backend::Neon)) return Backend::Neon;
    }
    if (backend_available(Backend::Avx2)) return Backend::Avx2;
    if (backend_available(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

Backend& current() {
    static Backend b = detect();
    return b;
}

}  // namespace

namespace detail {
const Table* scalar_table() { return &kScalar; }
}  // namespace detail

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "?";
}

bool backend_available(Backend b) {
    switch (b) {
        case Backend::Scalar: return true;
        case Backend::Avx2:
#if defined(__x86_64__) || defined(__i386__)
            return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::Neon: return detail::neon_table() != nullptr;
    }
    return false;
}

Backend active_backend() { return current(); }

void set_backend(Backend b) {
    if (!backend_available(b)) fail(ErrorKind::InvalidInput, std::string("simd backend unavailable: ") + backend_name(b));
    current() = b;
}

const Table& table(Backend b) {
    if (!backend_available(b)) fail(ErrorKind::InvalidInput, std::string("simd backend unavailable: ") + backend_name(b));
    switch (b) {
        case Backend::Avx2: return *detail::avx2_table();
        case Backend::Neon: return *detail::neon_table();
        default: return kScalar;
    }
}

const Table& active() { return table(current()); }

void transpose(const double* in, int rows, int cols, double* out) {
    constexpr int kBlock = 32;
    for (int i0 = 0; i0 < rows; i0 += kBlock)
        for (int j0 = 0; j0 < cols; j0 += kBlock) {
            const int i1 = std::min(rows, i0 + kBlock), j1 = std::min(cols, j0 + kBlock);
            for (int i = i0; i < i1; ++i)
                for (int j = j0; j < j1; ++j)
                    out[static_cast<std::size_t>(j) * rows + i] = in[static_cast<std::size_t>(i) * cols + j];
        }
}

}  // namespace sicl::kernels
