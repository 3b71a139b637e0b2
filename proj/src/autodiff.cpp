#include "lvp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lvp/kernels.hpp"
#include "lvp/mathfn.hpp"

namespace lvp {

namespace {

thread_local bool g_grad_enabled = true;

} // namespace

NodePtr make_op_node(Tensor value, std::vector<NodePtr> parents,
                     std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool any = false;
    for (const auto& p : parents) any = any || (p && p->needs_grad);
    if (any && g_grad_enabled) {
        n->needs_grad = true;
        n->value.alloc_grad();
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return n;
}

namespace {
inline NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                         std::function<void(Node&)> backward_fn) {
    return make_op_node(std::move(value), std::move(parents), std::move(backward_fn));
}
} // namespace

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

Var Var::leaf(Tensor t, bool needs_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->needs_grad = needs_grad;
    if (needs_grad) n->value.alloc_grad();
    return Var(n);
}

Parameter Parameter::make(std::string name, Tensor init) {
    Parameter p;
    p.name = std::move(name);
    p.node = std::make_shared<Node>();
    p.node->value = std::move(init);
    p.node->needs_grad = true;
    p.node->value.alloc_grad();
    p.adam_m = Tensor(p.node->value.shape);
    p.adam_v = Tensor(p.node->value.shape);
    return p;
}

// --- conv2d --------------------------------------------------------------

Var conv2d(const Var& input, const Parameter& weights, const Parameter& bias, int stride,
           int pad) {
    const Tensor& in = input.value();
    const Tensor& w = weights.value();
    const Tensor& b = bias.value();
    require(in.shape.size() == 3, ErrorKind::Config, "conv2d: input must be (C,H,W)");
    require(w.shape.size() == 4, ErrorKind::Config, "conv2d: weights must be (O,C,K,K)");
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    const int O = w.dim(0), K = w.dim(2);
    require(w.dim(1) == C, ErrorKind::Config,
            "conv2d: weight input channels " + std::to_string(w.dim(1)) +
                " do not match input channels " + std::to_string(C));
    require(w.dim(3) == K && (K == 1 || K == 2 || K == 3), ErrorKind::Config,
            "conv2d: kernel must be square with K in {1,2,3}");
    require(stride == 1 || stride == 2, ErrorKind::Config, "conv2d: stride must be 1 or 2");
    require(pad == 0 || (pad == 1 && K == 3), ErrorKind::Config,
            "conv2d: padding is only defined for 3x3 kernels");
    require(b.shape.size() == 1 && b.dim(0) == O, ErrorKind::Config,
            "conv2d: bias must have one entry per output channel");

    const int Hp = H + 2 * pad, Wp = W + 2 * pad;
    require(Hp >= K && Wp >= K, ErrorKind::Config, "conv2d: input smaller than kernel");
    const int Ho = (Hp - K) / stride + 1;
    const int Wo = (Wp - K) / stride + 1;
    require(Ho >= 1 && Wo >= 1, ErrorKind::Degenerate, "conv2d: zero-sized output");

    const auto& kr = kernels::active();

    // Zero-padded working copy when pad > 0; otherwise read input directly.
    auto padded = std::make_shared<Tensor>();
    const Tensor* src = &in;
    if (pad > 0) {
        *padded = Tensor({C, Hp, Wp});
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
                std::copy(&in.data[(static_cast<size_t>(c) * H + y) * W],
                          &in.data[(static_cast<size_t>(c) * H + y) * W] + W,
                          &padded->data[(static_cast<size_t>(c) * Hp + y + pad) * Wp + pad]);
        src = padded.get();
    }

    Tensor out({O, Ho, Wo});
    for (int o = 0; o < O; ++o) {
        double* plane = &out.data[static_cast<size_t>(o) * Ho * Wo];
        std::fill(plane, plane + static_cast<size_t>(Ho) * Wo, b.data[o]);
        for (int c = 0; c < C; ++c)
            for (int ky = 0; ky < K; ++ky)
                for (int kx = 0; kx < K; ++kx) {
                    const double wv = w.data[((static_cast<size_t>(o) * C + c) * K + ky) * K + kx];
                    for (int oy = 0; oy < Ho; ++oy) {
                        const double* row =
                            &src->data[(static_cast<size_t>(c) * Hp + oy * stride + ky) * Wp + kx];
                        kr.row_acc(plane + static_cast<size_t>(oy) * Wo, wv, row, stride, Wo);
                    }
                }
    }
    require(out.all_finite(), ErrorKind::Codec, "conv2d: non-finite output");

    NodePtr in_node = input.node();
    NodePtr w_node = weights.node;
    NodePtr b_node = bias.node;
    auto bwd = [C, H, W, O, K, Hp, Wp, Ho, Wo, stride, pad, padded, in_node, w_node,
                b_node](Node& self) {
        const auto& k2 = kernels::active();
        const Tensor& wt = w_node->value;
        const double* g = self.value.grad.data();
        const double* pdata = pad > 0 ? padded->data.data() : in_node->value.data.data();

        if (b_node->value.has_grad()) {
            for (int o = 0; o < O; ++o) {
                const double* plane = g + static_cast<size_t>(o) * Ho * Wo;
                double s = 0.0;
                for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) s += plane[i];
                b_node->value.grad[o] += s;
            }
        }
        if (w_node->value.has_grad()) {
            for (int o = 0; o < O; ++o)
                for (int c = 0; c < C; ++c)
                    for (int ky = 0; ky < K; ++ky)
                        for (int kx = 0; kx < K; ++kx) {
                            double s = 0.0;
                            for (int oy = 0; oy < Ho; ++oy) {
                                const double* grow = g + (static_cast<size_t>(o) * Ho + oy) * Wo;
                                const double* prow =
                                    pdata +
                                    (static_cast<size_t>(c) * Hp + oy * stride + ky) * Wp + kx;
                                s += k2.dot_strided(grow, prow, stride, Wo);
                            }
                            w_node->value.grad[((static_cast<size_t>(o) * C + c) * K + ky) * K +
                                               kx] += s;
                        }
        }
        if (in_node->value.has_grad()) {
            Tensor dpad;
            double* dp;
            if (pad > 0) {
                dpad = Tensor({C, Hp, Wp});
                dp = dpad.data.data();
            } else {
                dp = in_node->value.grad.data();
            }
            for (int o = 0; o < O; ++o)
                for (int c = 0; c < C; ++c)
                    for (int ky = 0; ky < K; ++ky)
                        for (int kx = 0; kx < K; ++kx) {
                            const double wv =
                                wt.data[((static_cast<size_t>(o) * C + c) * K + ky) * K + kx];
                            for (int oy = 0; oy < Ho; ++oy) {
                                const double* grow = g + (static_cast<size_t>(o) * Ho + oy) * Wo;
                                double* drow =
                                    dp + (static_cast<size_t>(c) * Hp + oy * stride + ky) * Wp + kx;
                                if (stride == 1) {
                                    k2.row_acc(drow, wv, grow, 1, Wo);
                                } else {
                                    for (int ox = 0; ox < Wo; ++ox)
                                        drow[static_cast<size_t>(ox) * stride] += wv * grow[ox];
                                }
                            }
                        }
            if (pad > 0) {
                for (int c = 0; c < C; ++c)
                    for (int y = 0; y < H; ++y)
                        k2.acc(&in_node->value.grad[(static_cast<size_t>(c) * H + y) * W],
                               &dpad.data[(static_cast<size_t>(c) * Hp + y + pad) * Wp + pad], W);
            }
        }
    };
    return Var(make_node(std::move(out), {in_node, w_node, b_node}, std::move(bwd)));
}

// --- elementwise ----------------------------------------------------------

Var relu(const Var& x) {
    const Tensor& in = x.value();
    Tensor out(in.shape);
    kernels::active().relu(out.data.data(), in.data.data(), in.numel());
    NodePtr xn = x.node();
    auto bwd = [xn](Node& self) {
        if (!xn->value.has_grad()) return;
        kernels::active().relu_bwd_acc(xn->value.grad.data(), xn->value.data.data(),
                                       self.value.grad.data(), self.value.numel());
    };
    return Var(make_node(std::move(out), {xn}, std::move(bwd)));
}

Var clamp_max(const Var& x, double cap) {
    const Tensor& in = x.value();
    Tensor out(in.shape);
    for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = in.data[i] < cap ? in.data[i] : cap;
    NodePtr xn = x.node();
    auto bwd = [xn, cap](Node& self) {
        if (!xn->value.has_grad()) return;
        const double* g = self.value.grad.data();
        const double* v = xn->value.data.data();
        double* dst = xn->value.grad.data();
        const int64_t n = self.value.numel();
        for (int64_t i = 0; i < n; ++i) dst[i] = dst[i] + (v[i] < cap ? g[i] : 0.0);
    };
    return Var(make_node(std::move(out), {xn}, std::move(bwd)));
}

Var add(const Var& a, const Var& b) {
    require(same_shape(a.value(), b.value()), ErrorKind::Config,
            "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor out(a.shape());
    kernels::active().add(out.data.data(), a.value().data.data(), b.value().data.data(),
                          out.numel());
    NodePtr an = a.node(), bn = b.node();
    auto bwd = [an, bn](Node& self) {
        const double* g = self.value.grad.data();
        int64_t n = self.value.numel();
        if (an->value.has_grad()) kernels::active().acc(an->value.grad.data(), g, n);
        if (bn->value.has_grad()) kernels::active().acc(bn->value.grad.data(), g, n);
    };
    return Var(make_node(std::move(out), {an, bn}, std::move(bwd)));
}

Var scale(const Var& x, double c) {
    Tensor out(x.shape());
    kernels::active().row_acc(out.data.data(), c, x.value().data.data(), 1, out.numel());
    NodePtr xn = x.node();
    auto bwd = [xn, c](Node& self) {
        if (!xn->value.has_grad()) return;
        kernels::active().row_acc(xn->value.grad.data(), c, self.value.grad.data(), 1,
                                  self.value.numel());
    };
    return Var(make_node(std::move(out), {xn}, std::move(bwd)));
}

Var weighted_sum(const Var& x, const Tensor& coeffs) {
    require(same_shape(x.value(), coeffs), ErrorKind::Config, "weighted_sum: shape mismatch");
    Tensor out({1});
    double s = 0.0;
    for (size_t i = 0; i < coeffs.data.size(); ++i) s += coeffs.data[i] * x.value().data[i];
    out.data[0] = s;
    NodePtr xn = x.node();
    auto cs = std::make_shared<Tensor>(coeffs);
    auto bwd = [xn, cs](Node& self) {
        if (!xn->value.has_grad()) return;
        kernels::active().row_acc(xn->value.grad.data(), self.value.grad[0], cs->data.data(), 1,
                                  static_cast<int64_t>(cs->data.size()));
    };
    return Var(make_node(std::move(out), {xn}, std::move(bwd)));
}

// --- space/depth permutations ----------------------------------------------
// out[(c*4 + dy*2 + dx), y, x] = in[c, 2y+dy, 2x+dx]

Var space_to_depth(const Var& x) {
    const Tensor& in = x.value();
    require(in.shape.size() == 3, ErrorKind::Config, "space_to_depth: input must be (C,H,W)");
    require(in.dim(1) % 2 == 0 && in.dim(2) % 2 == 0, ErrorKind::Config,
            "space_to_depth: extents must be even (caller pads)");
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    const int Ho = H / 2, Wo = W / 2;
    Tensor out({C * 4, Ho, Wo});
    for (int c = 0; c < C; ++c)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const int oc = c * 4 + dy * 2 + dx;
                for (int y = 0; y < Ho; ++y)
                    for (int x = 0; x < Wo; ++x)
                        out.data[(static_cast<size_t>(oc) * Ho + y) * Wo + x] =
                            in.data[(static_cast<size_t>(c) * H + 2 * y + dy) * W + 2 * x + dx];
            }
    NodePtr xn = x.node();
    auto bwd = [xn](Node& self) {
        if (!xn->value.has_grad()) return;
        const Tensor& o = self.value;
        Tensor& it = xn->value;
        const int C = it.dim(0), H = it.dim(1), W = it.dim(2);
        const int Ho = H / 2, Wo = W / 2;
        for (int c = 0; c < C; ++c)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int oc = c * 4 + dy * 2 + dx;
                    for (int y = 0; y < Ho; ++y)
                        for (int x = 0; x < Wo; ++x)
                            it.grad[(static_cast<size_t>(c) * H + 2 * y + dy) * W + 2 * x + dx] +=
                                o.grad[(static_cast<size_t>(oc) * Ho + y) * Wo + x];
                }
    };
    return Var(make_node(std::move(out), {xn}, std::move(bwd)));
}

Var depth_to_space(const Var& x) {
    const Tensor& in = x.value();
    require(in.shape.size() == 3, ErrorKind::Config, "depth_to_space: input must be (C,H,W)");
    require(in.dim(0) % 4 == 0, ErrorKind::Config,
            "depth_to_space: channel count must be divisible by 4");
    const int Co = in.dim(0) / 4, Hi = in.dim(1), Wi = in.dim(2);
    Tensor out({Co, Hi * 2, Wi * 2});
    const int H = Hi * 2, W = Wi * 2;
    for (int c = 0; c < Co; ++c)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const int ic = c * 4 + dy * 2 + dx;
                for (int y = 0; y < Hi; ++y)
                    for (int x = 0; x < Wi; ++x)
                        out.data[(static_cast<size_t>(c) * H + 2 * y + dy) * W + 2 * x + dx] =
                            in.data[(static_cast<size_t>(ic) * Hi + y) * Wi + x];
            }
    NodePtr xn = x.node();
    auto bwd = [xn, Co, Hi, Wi, H, W](Node& self) {
        if (!xn->value.has_grad()) return;
        for (int c = 0; c < Co; ++c)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int ic = c * 4 + dy * 2 + dx;
                    for (int y = 0; y < Hi; ++y)
                        for (int x = 0; x < Wi; ++x)
                            xn->value.grad[(static_cast<size_t>(ic) * Hi + y) * Wi + x] +=
                                self.value.grad[(static_cast<size_t>(c) * H + 2 * y + dy) * W +
                                                2 * x + dx];
                }
    };
    return Var(make_node(std::move(out), {xn}, std::move(bwd)));
}

Var concat_channels(const std::vector<Var>& xs) {
    require(!xs.empty(), ErrorKind::Config, "concat_channels: no inputs");
    const int H = xs[0].value().dim(1), W = xs[0].value().dim(2);
    int C = 0;
    for (const auto& v : xs) {
        require(v.value().shape.size() == 3 && v.value().dim(1) == H && v.value().dim(2) == W,
                ErrorKind::Config, "concat_channels: spatial shape mismatch");
        C += v.value().dim(0);
    }
    Tensor out({C, H, W});
    size_t off = 0;
    std::vector<NodePtr> parents;
    for (const auto& v : xs) {
        const auto& d = v.value().data;
        std::copy(d.begin(), d.end(), out.data.begin() + off);
        off += d.size();
        parents.push_back(v.node());
    }
    auto ps = parents;
    auto bwd = [ps](Node& self) {
        size_t off2 = 0;
        for (const auto& p : ps) {
            size_t n = p->value.data.size();
            if (p->value.has_grad())
                kernels::active().acc(p->value.grad.data(), self.value.grad.data() + off2,
                                      static_cast<int64_t>(n));
            off2 += n;
        }
    };
    return Var(make_node(std::move(out), std::move(parents), std::move(bwd)));
}

// --- softmax cross-entropy in bits ------------------------------------------

Tensor softmax_channels(const Tensor& logits) {
    require(logits.shape.size() == 3, ErrorKind::Config, "softmax: logits must be (C,H,W)");
    const int C = logits.dim(0);
    const int64_t plane = static_cast<int64_t>(logits.dim(1)) * logits.dim(2);
    const auto& kr = kernels::active();
    Tensor probs(logits.shape);
    std::vector<double> mx(plane), sum(plane);
    kr.channel_max(mx.data(), logits.data.data(), C, plane, plane);
    for (int c = 0; c < C; ++c) {
        double* row = &probs.data[static_cast<size_t>(c) * plane];
        const double* src = &logits.data[static_cast<size_t>(c) * plane];
        for (int64_t i = 0; i < plane; ++i) row[i] = det_exp(src[i] - mx[i]);
    }
    kr.channel_sum(sum.data(), probs.data.data(), C, plane, plane);
    for (int c = 0; c < C; ++c) {
        double* row = &probs.data[static_cast<size_t>(c) * plane];
        kr.div(row, row, sum.data(), plane);
    }
    return probs;
}

SoftmaxBitsResult softmax_bits(const Var& logits, const std::vector<uint8_t>& target,
                               int valid_h, int valid_w) {
    const Tensor& lg = logits.value();
    require(lg.shape.size() == 3, ErrorKind::Config, "softmax_bits: logits must be (C,H,W)");
    const int C = lg.dim(0), H = lg.dim(1), W = lg.dim(2);
    const int64_t plane = static_cast<int64_t>(H) * W;
    require(static_cast<int64_t>(target.size()) == plane, ErrorKind::Config,
            "softmax_bits: target plane size mismatch");
    require(valid_h >= 1 && valid_h <= H && valid_w >= 1 && valid_w <= W, ErrorKind::Config,
            "softmax_bits: invalid window");

    auto probs = std::make_shared<Tensor>(softmax_channels(lg));

    double loss = 0.0;
    for (int y = 0; y < valid_h; ++y)
        for (int x = 0; x < valid_w; ++x) {
            const int64_t i = static_cast<int64_t>(y) * W + x;
            const int t = target[i];
            loss -= det_log2(probs->data[static_cast<size_t>(t) * plane + i]);
        }

    Tensor out({1});
    out.data[0] = loss;
    require(std::isfinite(loss), ErrorKind::Codec, "softmax_bits: non-finite loss");

    NodePtr ln = logits.node();
    auto tgt = std::make_shared<std::vector<uint8_t>>(target);
    auto bwd = [ln, probs, tgt, C, H, W, plane, valid_h, valid_w](Node& self) {
        if (!ln->value.has_grad()) return;
        constexpr double kLog2E = 1.4426950408889634074;
        const double up = self.value.grad[0] * kLog2E;
        const auto& k2 = kernels::active();
        double* g = ln->value.grad.data();
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < valid_h; ++y) {
                const size_t off = static_cast<size_t>(c) * plane + static_cast<size_t>(y) * W;
                k2.row_acc(g + off, up, &probs->data[off], 1, valid_w);
            }
        for (int y = 0; y < valid_h; ++y)
            for (int x = 0; x < valid_w; ++x) {
                const int64_t i = static_cast<int64_t>(y) * W + x;
                g[static_cast<size_t>((*tgt)[i]) * plane + i] -= up;
            }
    };
    Var loss_var(make_node(std::move(out), {ln}, std::move(bwd)));
    return {loss_var, probs};
}

// --- backward pass ----------------------------------------------------------

void backward(const Var& loss) {
    require(loss.defined(), ErrorKind::Usage, "backward: undefined node");
    NodePtr root = loss.node();
    require(root->needs_grad && root->backward_fn, ErrorKind::Usage,
            "backward: node is detached from any differentiable graph");
    require(root->value.numel() == 1, ErrorKind::Usage, "backward: loss must be scalar");

    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.push_back({root.get(), 0});
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            Node* p = n->parents[idx++].get();
            if (p && p->needs_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    root->value.grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

// --- Adam --------------------------------------------------------------------

void adam_step(Parameter& p, const std::vector<double>& grad, const AdamConfig& cfg) {
    require(grad.size() == p.value().data.size(), ErrorKind::Config,
            "adam_step: gradient shape mismatch for " + p.name);
    for (double g : grad)
        require(std::isfinite(g), ErrorKind::Training,
                "adam_step: non-finite gradient in " + p.name);
    p.step_count += 1;
    p.beta1_pow *= cfg.beta1;
    p.beta2_pow *= cfg.beta2;
    kernels::active().adam(p.value().data.data(), p.adam_m.data.data(), p.adam_v.data.data(),
                           grad.data(), p.value().numel(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps,
                           1.0 - p.beta1_pow, 1.0 - p.beta2_pow);
}

void adam_step(Parameter& p, const AdamConfig& cfg) { adam_step(p, p.node->value.grad, cfg); }

} // namespace lvp
