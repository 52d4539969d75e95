#pragma once

// Dense loops behind the neural module. Each routine has a scalar reference
// and SIMD variants; the active variant is picked once at startup from the
// CPU features and can be forced with SICL_SIMD=scalar|avx2|neon.

#include <cstddef>

namespace sicl::kernels {

enum class Backend { Scalar, Avx2, Neon };

const char* backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();
void set_backend(Backend b);  // throws InvalidInput when unavailable

struct Table {
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // C[m x n] (+)= A[m x k] * B[k x n], all row-major with leading dims.
    void (*gemm)(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc,
                 bool accumulate);
    void (*exp)(double* x, std::size_t n);  // in place, inputs clamped below at -708
    // x[i] = exp(x[i] * scale - shift) in place; returns the sum.
    double (*exp_sum)(double* x, std::size_t n, double scale, double shift);
    double (*max)(const double* x, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
};

const Table& table(Backend b);
const Table& active();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline void gemm(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc,
                 bool accumulate) {
    active().gemm(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}
inline void exp_inplace(double* x, std::size_t n) { active().exp(x, n); }
inline double exp_sum(double* x, std::size_t n, double scale, double shift) {
    return active().exp_sum(x, n, scale, shift);
}
inline double max(const double* x, std::size_t n) { return active().max(x, n); }
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }

// Plain row-major transpose: out[j * rows + i] = in[i * cols + j].
void transpose(const double* in, int rows, int cols, double* out);

namespace detail {
const Table* scalar_table();
const Table* avx2_table();  // nullptr when not compiled in
const Table* neon_table();
}  // namespace detail

}  // namespace sicl::kernels
