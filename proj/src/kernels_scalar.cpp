#include "pdectrl/kernels.hpp"

#include <cmath>

namespace pdectrl::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_bias_scalar(const double* w, const double* b, const double* x,
                        double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b ? b[r] : 0.0;
        const double* row = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
}

void matvec_t_acc_scalar(const double* w, const double* g, double* out,
                         std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = w + r * cols;
        const double gr = g[r];
        for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * gr;
    }
}

void ger_acc_scalar(double* w, const double* g, const double* x,
                    std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = w + r * cols;
        const double gr = g[r];
        for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
    }
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sumsq_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void adam_update_scalar(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
    }
}

const Backend kScalar = {
    "scalar",
    dot_scalar,
    axpy_scalar,
    matvec_bias_scalar,
    matvec_t_acc_scalar,
    ger_acc_scalar,
    sum_scalar,
    sumsq_scalar,
    adam_update_scalar,
};

}  // namespace

const Backend& scalar_backend() { return kScalar; }

}  // namespace pdectrl::kernels
