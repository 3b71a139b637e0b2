#include "lvp/quantizer.hpp"

#include <cmath>

#include "lvp/errors.hpp"
#include "lvp/kernels.hpp"

namespace lvp {

int32_t quantize_value(double y, double q_step) {
    double f = std::floor(y / q_step);
    // The division may round across an integer boundary; nudge until the
    // defining inequalities hold in exact arithmetic.
    while (f * q_step > y) f -= 1.0;
    while ((f + 1.0) * q_step <= y) f += 1.0;
    require(f >= -2147483648.0 && f <= 2147483647.0, ErrorKind::Codec,
            "quantize: latent value out of 32-bit range");
    return static_cast<int32_t>(f);
}

QuantizedLatent quantize(const Tensor& y, double q_step) {
    require(q_step > 0.0, ErrorKind::Config, "quantize: q_step must be positive");
    require(y.all_finite(), ErrorKind::Codec, "quantize: non-finite coefficients");
    QuantizedLatent out;
    out.shape = y.shape;
    out.q_step = q_step;
    out.z.resize(y.data.size());
    for (size_t i = 0; i < y.data.size(); ++i) out.z[i] = quantize_value(y.data[i], q_step);
    return out;
}

Tensor dequantize(const QuantizedLatent& zq) {
    Tensor out(zq.shape);
    for (size_t i = 0; i < zq.z.size(); ++i)
        out.data[i] = static_cast<double>(zq.z[i]) * zq.q_step;
    return out;
}

Tensor ste_backward(const Tensor& upstream, double q_step) {
    require(q_step > 0.0, ErrorKind::Config, "ste_backward: q_step must be positive");
    Tensor out(upstream.shape);
    for (size_t i = 0; i < upstream.data.size(); ++i) out.data[i] = upstream.data[i] / q_step;
    return out;
}

Var quantize_dequantize_ste(const Var& y, double q_step, bool smooth_forward) {
    require(q_step > 0.0, ErrorKind::Config, "quantize: q_step must be positive");
    const Tensor& in = y.value();
    require(in.all_finite(), ErrorKind::Codec, "quantize: non-finite coefficients");
    Tensor out(in.shape);
    if (smooth_forward) {
        std::copy(in.data.begin(), in.data.end(), out.data.begin());
    } else {
        for (size_t i = 0; i < in.data.size(); ++i)
            out.data[i] = static_cast<double>(quantize_value(in.data[i], q_step)) * q_step;
    }
    NodePtr yn = y.node();
    auto bwd = [yn, q_step](Node& self) {
        if (!yn->value.has_grad()) return;
        // dL/dz = up * q_step (dequantize), then dL/dy = dL/dz / q_step.
        const double* g = self.value.grad.data();
        double* dst = yn->value.grad.data();
        const int64_t n = self.value.numel();
        for (int64_t i = 0; i < n; ++i) dst[i] += (g[i] * q_step) / q_step;
    };
    return Var(make_op_node(std::move(out), {yn}, std::move(bwd)));
}

} // namespace lvp
