#pragma once

#include <cstdint>
#include <vector>

#include "lvp/autodiff.hpp"
#include "lvp/tensor.hpp"

namespace lvp {

// Uniform scalar quantization z = floor(y / q_step), dequantization
// z * q_step, and the straight-through gradient rule used in training.

struct QuantizedLatent {
    Shape shape;
    std::vector<int32_t> z;
    double q_step = 0.0;
};

// floor(y/q) computed so the exact-arithmetic floor inequalities
// z*q <= y < (z+1)*q hold even when y/q rounds across an integer.
int32_t quantize_value(double y, double q_step);

QuantizedLatent quantize(const Tensor& y, double q_step);
Tensor dequantize(const QuantizedLatent& zq);

// dL/dy = upstream / q_step (treats the floor as scaled identity).
Tensor ste_backward(const Tensor& upstream, double q_step);

// Graph op: forward is real quantize-then-dequantize (training sees actual
// codec values); backward is the straight-through rule, which composes to an
// identity gradient through the quantize/dequantize pair. smooth_forward
// bypasses the floor so the whole graph becomes differentiable; gradient
// checks need that, since central differences of a staircase are zero.
Var quantize_dequantize_ste(const Var& y, double q_step, bool smooth_forward = false);

} // namespace lvp
