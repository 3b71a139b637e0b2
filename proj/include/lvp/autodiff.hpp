#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lvp/tensor.hpp"

namespace lvp {

// Reverse-mode graph over Tensors. Each forward op appends a node holding its
// output and a closure that pushes the node's gradient into its parents.
// Graphs are built per image and released when the handles go out of scope;
// Parameter nodes are the persistent leaves.

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    Tensor value; // value.grad allocated iff needs_grad
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward_fn;
    bool needs_grad = false;
};

// Scoped switch: codec paths run with gradients disabled so shared parameter
// nodes are never written and forward passes stay thread-safe.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

bool grad_enabled();

class Var {
public:
    Var() = default;
    explicit Var(NodePtr n) : node_(std::move(n)) {}

    static Var leaf(Tensor t, bool needs_grad = false);

    const Tensor& value() const { return node_->value; }
    Tensor& value() { return node_->value; }
    const Shape& shape() const { return node_->value.shape; }
    const NodePtr& node() const { return node_; }
    bool defined() const { return node_ != nullptr; }

private:
    NodePtr node_;
};

// Trainable leaf plus its Adam accumulators.
struct Parameter {
    std::string name;
    NodePtr node;
    Tensor adam_m;
    Tensor adam_v;
    int64_t step_count = 0;
    double beta1_pow = 1.0; // beta1^step_count
    double beta2_pow = 1.0;

    static Parameter make(std::string name, Tensor init);

    Tensor& value() { return node->value; }
    const Tensor& value() const { return node->value; }
    Var var() const { return Var(node); }
    void zero_grad() { node->value.zero_grad(); }
};

// --- ops ---------------------------------------------------------------

// Cross-correlation, no implicit padding except pad=1 for 3x3 interiors.
// input (C,H,W), weights (O,C,K,K), bias (O); output (O,H',W') with
// H' = (H + 2*pad - K)/stride + 1.
Var conv2d(const Var& input, const Parameter& weights, const Parameter& bias, int stride,
           int pad = 0);

Var relu(const Var& x);
Var clamp_max(const Var& x, double cap); // min(x, cap); gradient 0 where x >= cap
Var add(const Var& a, const Var& b);
Var space_to_depth(const Var& x); // (C,H,W) -> (4C,H/2,W/2), pure permutation
Var depth_to_space(const Var& x); // exact inverse
Var concat_channels(const std::vector<Var>& xs);
Var scale(const Var& x, double c);
Var weighted_sum(const Var& x, const Tensor& coeffs); // scalar: sum_i c_i * x_i

// Channel-dim softmax of a (C,H,W) logit block. This is the one softmax
// implementation in the codebase; encode, decode and training all go through
// it so their probabilities agree bit-for-bit.
Tensor softmax_channels(const Tensor& logits);

// Per-pixel 256-way softmax cross-entropy in bits. Loss sums -log2 p(target)
// over the top-left valid_h x valid_w window (padding rows/cols carry no
// cost). probs is the full softmax plane, shared with the returned node.
struct SoftmaxBitsResult {
    Var loss;                      // scalar node
    std::shared_ptr<Tensor> probs; // (C,H,W)
};
SoftmaxBitsResult softmax_bits(const Var& logits, const std::vector<uint8_t>& target,
                               int valid_h, int valid_w);

// Node factory for ops defined outside this translation unit. The closure is
// kept (and the grad buffer allocated) only when some parent needs gradients
// and gradient recording is enabled.
NodePtr make_op_node(Tensor value, std::vector<NodePtr> parents,
                     std::function<void(Node&)> backward_fn);

// Populate gradients of every reachable node from a scalar loss.
void backward(const Var& loss);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One bias-corrected Adam update from the gradient buffer `grad`.
void adam_step(Parameter& p, const std::vector<double>& grad, const AdamConfig& cfg);
// Convenience: step from the parameter's own accumulated gradient.
void adam_step(Parameter& p, const AdamConfig& cfg);

} // namespace lvp
