#pragma once

#include <cstddef>

// Low-level dense kernels behind the whole numeric stack: quadrature sums,
// matrix-vector products for the networks, gradient accumulation and Adam.
//
// Two backends share one contract: a scalar reference implementation and an
// AVX2+FMA implementation compiled in its own translation unit. The active
// backend is picked once at startup: the PDECTRL_KERNELS environment variable
// ("scalar" or "avx2") wins if set, otherwise CPU feature detection decides.
// Additional ISA backends (e.g. NEON) would slot into the same dispatch table.
//
// The backends agree to ~1e-12 relative, not bitwise: FMA contraction and
// 4-lane reassociation legitimately move the last few ulps. Anything that
// must be bit-stable across backends (transcendentals, activations) stays in
// plain elementwise code outside this layer.

namespace pdectrl::kernels {

struct Backend {
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out = W x + b, W row-major rows x cols, b length rows (b may be null).
    void (*matvec_bias)(const double* w, const double* b, const double* x,
                        double* out, std::size_t rows, std::size_t cols);
    // out += W^T g (accumulates input gradients).
    void (*matvec_t_acc)(const double* w, const double* g, double* out,
                         std::size_t rows, std::size_t cols);
    // W += g x^T (accumulates weight gradients).
    void (*ger_acc)(double* w, const double* g, const double* x,
                    std::size_t rows, std::size_t cols);
    double (*sum)(const double* x, std::size_t n);
    double (*sumsq)(const double* x, std::size_t n);
    // In-place Adam update with precomputed bias corrections
    // bc1 = 1/(1 - beta1^t), bc2 = 1/(1 - beta2^t).
    void (*adam_update)(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2);
};

const Backend& scalar_backend();
#ifdef PDECTRL_HAVE_AVX2
const Backend& avx2_backend();
bool avx2_supported();
#endif

// The process-wide backend chosen by env var / CPU detection.
const Backend& active();
const char* backend_name();

// Test hook: override the active backend by name ("scalar" / "avx2").
// Throws ConfigError for unknown or unsupported names. Not thread-safe
// against concurrent kernel calls; intended for test setup only.
void force_backend(const char* name);

// Convenience forwarders through the active backend.
inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}
inline void matvec_bias(const double* w, const double* b, const double* x,
                        double* out, std::size_t rows, std::size_t cols) {
    active().matvec_bias(w, b, x, out, rows, cols);
}
inline void matvec_t_acc(const double* w, const double* g, double* out,
                         std::size_t rows, std::size_t cols) {
    active().matvec_t_acc(w, g, out, rows, cols);
}
inline void ger_acc(double* w, const double* g, const double* x,
                    std::size_t rows, std::size_t cols) {
    active().ger_acc(w, g, x, rows, cols);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double sumsq(const double* x, std::size_t n) { return active().sumsq(x, n); }
inline void adam_update(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2) {
    active().adam_update(p, m, v, g, n, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace pdectrl::kernels
