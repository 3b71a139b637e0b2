#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lvp/autodiff.hpp"
#include "lvp/rng.hpp"

namespace lvp {

struct ConvLayer {
    Parameter w; // (out, in, k, k)
    Parameter b; // (out)
    int stride = 1;
    int pad = 0;

    static ConvLayer make(const std::string& name, int out_c, int in_c, int k, int stride,
                          int pad, Rng& rng) {
        Tensor wt({out_c, in_c, k, k});
        const double fan_in = static_cast<double>(in_c) * k * k;
        const double fan_out = static_cast<double>(out_c) * k * k;
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : wt.data) v = rng.uniform(-limit, limit);
        ConvLayer layer;
        layer.w = Parameter::make(name + ".w", std::move(wt));
        layer.b = Parameter::make(name + ".b", Tensor({out_c}));
        layer.stride = stride;
        layer.pad = pad;
        return layer;
    }

    Var apply(const Var& x) const { return conv2d(x, w, b, stride, pad); }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

} // namespace lvp
