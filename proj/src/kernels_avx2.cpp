// AVX2 variants of the kernel table. Every kernel reproduces the scalar
// reference bit-for-bit: mul and add stay separate (no FMA), conditional
// selects materialize +0.0 exactly like the scalar ternaries, and the
// dot-product lanes follow the canonical (p0+p2)+(p1+p3) combine.

#include "lvp/kernels.hpp"

#include <cmath>

#if defined(__x86_64__) || defined(_M_X64)
#define LVP_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define LVP_HAVE_AVX2_BUILD 0
#endif

namespace lvp::kernels {

#if LVP_HAVE_AVX2_BUILD

namespace {

// Even-index gather for stride-2 rows: [x0,x2,x4,x6] from 8 consecutive.
inline __m256d load_stride2(const double* p) {
    __m256d a = _mm256_loadu_pd(p);     // x0 x1 x2 x3
    __m256d b = _mm256_loadu_pd(p + 4); // x4 x5 x6 x7
    __m256d t = _mm256_unpacklo_pd(a, b); // x0 x4 x2 x6
    return _mm256_permute4x64_pd(t, 0xD8); // x0 x2 x4 x6
}

void a_row_acc(double* dst, double w, const double* src, int64_t stride, int64_t n) {
    int64_t i = 0;
    const __m256d wv = _mm256_set1_pd(w);
    if (stride == 1) {
        for (; i + 4 <= n; i += 4) {
            __m256d d = _mm256_loadu_pd(dst + i);
            __m256d s = _mm256_loadu_pd(src + i);
            d = _mm256_add_pd(d, _mm256_mul_pd(wv, s));
            _mm256_storeu_pd(dst + i, d);
        }
    } else if (stride == 2) {
        for (; i + 4 <= n; i += 4) {
            __m256d d = _mm256_loadu_pd(dst + i);
            __m256d s = load_stride2(src + i * 2);
            d = _mm256_add_pd(d, _mm256_mul_pd(wv, s));
            _mm256_storeu_pd(dst + i, d);
        }
    }
    for (; i < n; ++i) dst[i] = dst[i] + w * src[i * stride];
}

double a_dot_strided(const double* a, const double* b, int64_t stride, int64_t n) {
    __m256d acc = _mm256_setzero_pd();
    int64_t i = 0;
    if (stride == 1) {
        for (; i + 4 <= n; i += 4)
            acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    } else if (stride == 2) {
        for (; i + 4 <= n; i += 4)
            acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), load_stride2(b + i * 2)));
    }
    alignas(32) double p[4];
    _mm256_store_pd(p, acc);
    for (; i < n; ++i) p[i & 3] = p[i & 3] + a[i] * b[i * stride];
    return (p[0] + p[2]) + (p[1] + p[3]);
}

void a_add(double* dst, const double* a, const double* b, int64_t n) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void a_acc(double* dst, const double* src, int64_t n) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(src + i)));
    for (; i < n; ++i) dst[i] = dst[i] + src[i];
}

void a_mul(double* dst, const double* a, const double* b, int64_t n) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void a_div(double* dst, const double* a, const double* b, int64_t n) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_div_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] / b[i];
}

void a_relu(double* dst, const double* src, int64_t n) {
    int64_t i = 0;
    const __m256d zero = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        __m256d s = _mm256_loadu_pd(src + i);
        __m256d mask = _mm256_cmp_pd(s, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(dst + i, _mm256_and_pd(mask, s));
    }
    for (; i < n; ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
}

void a_relu_bwd_acc(double* dst, const double* x, const double* up, int64_t n) {
    int64_t i = 0;
    const __m256d zero = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(up + i));
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), gated));
    }
    for (; i < n; ++i) dst[i] = dst[i] + (x[i] > 0.0 ? up[i] : 0.0);
}

void a_channel_max(double* dst, const double* src, int64_t channels, int64_t plane, int64_t n) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(dst + i, _mm256_loadu_pd(src + i));
    for (; i < n; ++i) dst[i] = src[i];
    for (int64_t c = 1; c < channels; ++c) {
        const double* row = src + c * plane;
        i = 0;
        for (; i + 4 <= n; i += 4) {
            __m256d d = _mm256_loadu_pd(dst + i);
            __m256d r = _mm256_loadu_pd(row + i);
            // max_pd(d, r) == d > r ? d : r, matching the scalar ternary
            _mm256_storeu_pd(dst + i, _mm256_max_pd(r, d));
        }
        for (; i < n; ++i) dst[i] = dst[i] > row[i] ? dst[i] : row[i];
    }
}

void a_channel_sum(double* dst, const double* src, int64_t channels, int64_t plane, int64_t n) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(dst + i, _mm256_loadu_pd(src + i));
    for (; i < n; ++i) dst[i] = src[i];
    for (int64_t c = 1; c < channels; ++c) {
        const double* row = src + c * plane;
        i = 0;
        for (; i + 4 <= n; i += 4)
            _mm256_storeu_pd(dst + i,
                             _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(row + i)));
        for (; i < n; ++i) dst[i] = dst[i] + row[i];
    }
}

void a_adam(double* value, double* m, double* v, const double* g, int64_t n, double lr,
            double beta1, double beta2, double eps, double c1, double c2) {
    const double om1 = 1.0 - beta1;
    const double om2 = 1.0 - beta2;
    const __m256d b1 = _mm256_set1_pd(beta1);
    const __m256d b2 = _mm256_set1_pd(beta2);
    const __m256d o1 = _mm256_set1_pd(om1);
    const __m256d o2 = _mm256_set1_pd(om2);
    const __m256d lrv = _mm256_set1_pd(lr);
    const __m256d c1v = _mm256_set1_pd(c1);
    const __m256d c2v = _mm256_set1_pd(c2);
    const __m256d epsv = _mm256_set1_pd(eps);
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(o1, gi));
        __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                   _mm256_mul_pd(o2, _mm256_mul_pd(gi, gi)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_div_pd(vi, c2v)), epsv);
        __m256d step = _mm256_mul_pd(lrv, _mm256_div_pd(_mm256_div_pd(mi, c1v), denom));
        _mm256_storeu_pd(value + i, _mm256_sub_pd(_mm256_loadu_pd(value + i), step));
    }
    for (; i < n; ++i) {
        double gi = g[i];
        double mi = beta1 * m[i] + om1 * gi;
        double vi = beta2 * v[i] + om2 * (gi * gi);
        m[i] = mi;
        v[i] = vi;
        value[i] = value[i] - lr * ((mi / c1) / (std::sqrt(vi / c2) + eps));
    }
}

constexpr KernelTable kAvx2 = {
    .row_acc = a_row_acc,
    .dot_strided = a_dot_strided,
    .add = a_add,
    .acc = a_acc,
    .mul = a_mul,
    .div = a_div,
    .relu = a_relu,
    .relu_bwd_acc = a_relu_bwd_acc,
    .channel_max = a_channel_max,
    .channel_sum = a_channel_sum,
    .adam = a_adam,
};

} // namespace

const KernelTable* avx2_table() {
    return __builtin_cpu_supports("avx2") ? &kAvx2 : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

} // namespace lvp::kernels
