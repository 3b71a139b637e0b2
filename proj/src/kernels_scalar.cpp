#include "lvp/kernels.hpp"

#include <cmath>

namespace lvp::kernels {
namespace {

void s_row_acc(double* dst, double w, const double* src, int64_t stride, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dst[i] = dst[i] + w * src[i * stride];
}

double s_dot_strided(const double* a, const double* b, int64_t stride, int64_t n) {
    double p0 = 0.0, p1 = 0.0, p2 = 0.0, p3 = 0.0;
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        p0 = p0 + a[i + 0] * b[(i + 0) * stride];
        p1 = p1 + a[i + 1] * b[(i + 1) * stride];
        p2 = p2 + a[i + 2] * b[(i + 2) * stride];
        p3 = p3 + a[i + 3] * b[(i + 3) * stride];
    }
    double p[4] = {p0, p1, p2, p3};
    for (; i < n; ++i) p[i & 3] = p[i & 3] + a[i] * b[i * stride];
    return (p[0] + p[2]) + (p[1] + p[3]);
}

void s_add(double* dst, const double* a, const double* b, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void s_acc(double* dst, const double* src, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dst[i] = dst[i] + src[i];
}

void s_mul(double* dst, const double* a, const double* b, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void s_div(double* dst, const double* a, const double* b, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dst[i] = a[i] / b[i];
}

void s_relu(double* dst, const double* src, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
}

void s_relu_bwd_acc(double* dst, const double* x, const double* up, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dst[i] = dst[i] + (x[i] > 0.0 ? up[i] : 0.0);
}

void s_channel_max(double* dst, const double* src, int64_t channels, int64_t plane, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dst[i] = src[i];
    for (int64_t c = 1; c < channels; ++c) {
        const double* row = src + c * plane;
        for (int64_t i = 0; i < n; ++i) dst[i] = dst[i] > row[i] ? dst[i] : row[i];
    }
}

void s_channel_sum(double* dst, const double* src, int64_t channels, int64_t plane, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dst[i] = src[i];
    for (int64_t c = 1; c < channels; ++c) {
        const double* row = src + c * plane;
        for (int64_t i = 0; i < n; ++i) dst[i] = dst[i] + row[i];
    }
}

void s_adam(double* value, double* m, double* v, const double* g, int64_t n, double lr,
            double beta1, double beta2, double eps, double c1, double c2) {
    const double om1 = 1.0 - beta1;
    const double om2 = 1.0 - beta2;
    for (int64_t i = 0; i < n; ++i) {
        double gi = g[i];
        double mi = beta1 * m[i] + om1 * gi;
        double vi = beta2 * v[i] + om2 * (gi * gi);
        m[i] = mi;
        v[i] = vi;
        value[i] = value[i] - lr * ((mi / c1) / (std::sqrt(vi / c2) + eps));
    }
}

constexpr KernelTable kScalar = {
    .row_acc = s_row_acc,
    .dot_strided = s_dot_strided,
    .add = s_add,
    .acc = s_acc,
    .mul = s_mul,
    .div = s_div,
    .relu = s_relu,
    .relu_bwd_acc = s_relu_bwd_acc,
    .channel_max = s_channel_max,
    .channel_sum = s_channel_sum,
    .adam = s_adam,
};

} // namespace

const KernelTable& scalar_table() { return kScalar; }

} // namespace lvp::kernels
