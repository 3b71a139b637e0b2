#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lvp/errors.hpp"

namespace lvp {

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

// Dense row-major f64 buffer. Feature maps use (channels, height, width)
// order; conv weights use (out, in, kh, kw). The grad buffer is allocated
// only for tensors that participate in backprop.
struct Tensor {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad; // empty unless gradients requested

    Tensor() = default;
    explicit Tensor(Shape s) : shape(std::move(s)) {
        for (int d : shape) require(d > 0, ErrorKind::Config, "tensor extents must be positive");
        data.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int dim(size_t i) const { return shape[i]; }

    bool has_grad() const { return !grad.empty(); }
    void alloc_grad() { grad.assign(data.size(), 0.0); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

    // (c, y, x) accessor for 3-d feature maps.
    double& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

} // namespace lvp
