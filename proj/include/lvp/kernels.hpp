#pragma once

#include <cstdint>

namespace lvp::kernels {

// Data-parallel inner loops behind the tensor ops. Scalar versions are the
// reference semantics; the AVX2 versions must produce bit-identical results
// (same per-element expression tree, no FMA contraction, reductions in the
// canonical lane order below), because the decoder recomputes the encoder's
// probabilities and any rounding difference breaks the arithmetic coder.
//
// Reduction order contract for dot_strided: four partial sums over the
// index classes i mod 4, combined as (p0+p2)+(p1+p3).
struct KernelTable {
    // dst[i] += w * src[i*stride]
    void (*row_acc)(double* dst, double w, const double* src, int64_t stride, int64_t n);
    // canonical-order dot product of a[i] and b[i*stride]
    double (*dot_strided)(const double* a, const double* b, int64_t stride, int64_t n);
    // dst[i] = a[i] + b[i]
    void (*add)(double* dst, const double* a, const double* b, int64_t n);
    // dst[i] += src[i]
    void (*acc)(double* dst, const double* src, int64_t n);
    // dst[i] = a[i] * b[i]
    void (*mul)(double* dst, const double* a, const double* b, int64_t n);
    // dst[i] = a[i] / b[i]
    void (*div)(double* dst, const double* a, const double* b, int64_t n);
    // dst[i] = src[i] > 0 ? src[i] : +0.0
    void (*relu)(double* dst, const double* src, int64_t n);
    // dst[i] = dst[i] + (x[i] > 0 ? up[i] : +0.0)
    void (*relu_bwd_acc)(double* dst, const double* x, const double* up, int64_t n);
    // dst[i] = max over c of src[c*plane + i]   (max(a,b) == a > b ? a : b)
    void (*channel_max)(double* dst, const double* src, int64_t channels, int64_t plane,
                        int64_t n);
    // dst[i] = sum over c (ascending) of src[c*plane + i]
    void (*channel_sum)(double* dst, const double* src, int64_t channels, int64_t plane,
                        int64_t n);
    // Adam update with bias-correction denominators c1 = 1-b1^t, c2 = 1-b2^t:
    //   m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*(g*g);
    //   value -= lr * (m/c1) / (sqrt(v/c2) + eps)
    void (*adam)(double* value, double* m, double* v, const double* g, int64_t n, double lr,
                 double beta1, double beta2, double eps, double c1, double c2);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table(); // nullptr when unsupported by CPU or build

// Active table: AVX2 when the CPU has it, overridable with
// LVPNET_KERNELS=scalar|avx2 (checked once, at first use).
const KernelTable& active();
const char* active_name();

} // namespace lvp::kernels
