#include "doctest.h"

#include <cmath>

#include "lvp/autodiff.hpp"
#include "lvp/errors.hpp"
#include "oracles.hpp"

using namespace lvp;

namespace {

Tensor tensor_from(Shape shape, std::initializer_list<double> vals) {
    Tensor t(std::move(shape));
    size_t i = 0;
    for (double v : vals) t.data[i++] = v;
    return t;
}

Parameter param_from(const std::string& name, Shape shape, std::initializer_list<double> vals) {
    return Parameter::make(name, tensor_from(std::move(shape), vals));
}

Parameter random_param(const std::string& name, Shape shape, Rng& rng, double lo = -0.8,
                       double hi = 0.8) {
    Tensor t(std::move(shape));
    oracle::fill_uniform(t, rng, lo, hi);
    return Parameter::make(name, std::move(t));
}

} // namespace

TEST_CASE("conv2d identity kernel keeps the input") {
    Tensor in = tensor_from({1, 2, 2}, {1, 2, 3, 4});
    auto w = param_from("w", {1, 1, 1, 1}, {1.0});
    auto b = param_from("b", {1}, {0.0});
    Var out = conv2d(Var::leaf(in), w, b, 1);
    CHECK(out.shape() == Shape{1, 2, 2});
    for (int i = 0; i < 4; ++i) CHECK(out.value().data[i] == in.data[i]);
}

TEST_CASE("conv2d 2x2 all-ones stride 2 block sum") {
    Tensor in = tensor_from({1, 2, 2}, {1, 2, 3, 4});
    auto w = param_from("w", {1, 1, 2, 2}, {1, 1, 1, 1});
    auto b = param_from("b", {1}, {0.0});
    Var out = conv2d(Var::leaf(in), w, b, 2);
    CHECK(out.shape() == Shape{1, 1, 1});
    CHECK(out.value().data[0] == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("conv2d matches the nested-loop reference") {
    Rng rng(17);

    SUBCASE("pinned 2x6x6 by 4x2x3x3") {
        Tensor in({2, 6, 6});
        oracle::fill_uniform(in, rng, -1.0, 1.0);
        auto w = random_param("w", {4, 2, 3, 3}, rng);
        auto b = random_param("b", {4}, rng);
        Var out = conv2d(Var::leaf(in), w, b, 1);
        Tensor ref = oracle::conv2d_reference(in, w.value(),
                                              {b.value().data.begin(), b.value().data.end()}, 1, 0);
        REQUIRE(out.shape() == ref.shape);
        for (size_t i = 0; i < ref.data.size(); ++i)
            CHECK(std::abs(out.value().data[i] - ref.data[i]) < 1e-12);
    }

    SUBCASE("200 random shapes, strides and paddings") {
        for (int rep = 0; rep < 200; ++rep) {
            const int C = 1 + static_cast<int>(rng.next_below(3));
            const int O = 1 + static_cast<int>(rng.next_below(4));
            const int K = 1 + static_cast<int>(rng.next_below(3));
            const int pad = K == 3 && rng.next_below(2) ? 1 : 0;
            const int stride = pad == 0 && rng.next_below(2) ? 2 : 1;
            const int H = K + static_cast<int>(rng.next_below(6));
            const int W = K + static_cast<int>(rng.next_below(6));
            Tensor in({C, H, W});
            oracle::fill_uniform(in, rng, -2.0, 2.0);
            auto w = random_param("w", {O, C, K, K}, rng);
            auto b = random_param("b", {O}, rng);
            Var out = conv2d(Var::leaf(in), w, b, stride, pad);
            Tensor ref = oracle::conv2d_reference(
                in, w.value(), {b.value().data.begin(), b.value().data.end()}, stride, pad);
            REQUIRE(out.shape() == ref.shape);
            for (size_t i = 0; i < ref.data.size(); ++i)
                CHECK(std::abs(out.value().data[i] - ref.data[i]) < 1e-12);
        }
    }
}

TEST_CASE("conv2d rejects bad configurations") {
    Rng rng(19);
    Tensor in({2, 4, 4});
    oracle::fill_uniform(in, rng, -1.0, 1.0);
    auto w = random_param("w", {1, 3, 2, 2}, rng); // 3 input channels vs 2
    auto b = random_param("b", {1}, rng);
    CHECK_THROWS_WITH_AS(conv2d(Var::leaf(in), w, b, 1), doctest::Contains("channels"), Error);

    auto w1 = random_param("w", {1, 2, 2, 2}, rng);
    CHECK_THROWS_AS(conv2d(Var::leaf(in), w1, b, 3), Error); // bad stride
    Tensor tiny({2, 1, 1});
    CHECK_THROWS_AS(conv2d(Var::leaf(tiny), w1, b, 1), Error); // smaller than kernel
}

TEST_CASE("space_to_depth pinned example and inverse property") {
    Tensor in = tensor_from({1, 2, 2}, {1, 2, 3, 4});
    Var out = space_to_depth(Var::leaf(in));
    CHECK(out.shape() == Shape{4, 1, 1});
    CHECK(out.value().data == std::vector<double>{1, 2, 3, 4});

    Rng rng(23);
    for (int rep = 0; rep < 20; ++rep) {
        const int C = 1 + static_cast<int>(rng.next_below(4));
        const int H = 2 * (1 + static_cast<int>(rng.next_below(4)));
        const int W = 2 * (1 + static_cast<int>(rng.next_below(4)));
        Tensor t({C, H, W});
        oracle::fill_uniform(t, rng, -5.0, 5.0);
        Var roundtrip = depth_to_space(space_to_depth(Var::leaf(t)));
        CHECK(roundtrip.shape() == t.shape);
        CHECK(roundtrip.value().data == t.data); // bit-exact permutation
        Var fwd = space_to_depth(Var::leaf(t));
        CHECK(shape_numel(fwd.shape()) == shape_numel(t.shape)); // volume identity
        // matches the reference permutation
        Tensor ref = oracle::s2d_reference(t);
        CHECK(fwd.value().data == ref.data);
    }

    CHECK_THROWS_AS(depth_to_space(Var::leaf(Tensor({3, 2, 2}))), Error);
    CHECK_THROWS_AS(space_to_depth(Var::leaf(Tensor({1, 3, 2}))), Error);
}

TEST_CASE("relu forward and pinned subgradient") {
    Tensor in = tensor_from({1, 1, 3}, {-1, 0, 2});
    Var x = Var::leaf(in, true);
    Var y = relu(x);
    CHECK(y.value().data == std::vector<double>{0, 0, 2});

    Tensor coeffs = tensor_from({1, 1, 3}, {1, 1, 1});
    backward(weighted_sum(y, coeffs));
    CHECK(x.value().grad[0] == 0.0); // x < 0
    CHECK(x.value().grad[1] == 0.0); // gradient at exactly 0 is 0 by design
    CHECK(x.value().grad[2] == 1.0);

    // upstream 1 at x=3 passes through unchanged
    Var x3 = Var::leaf(tensor_from({1}, {3.0}), true);
    backward(weighted_sum(relu(x3), tensor_from({1}, {1.0})));
    CHECK(x3.value().grad[0] == 1.0);

    Tensor neg = tensor_from({1, 1, 3}, {-5, -0.1, -2});
    CHECK(relu(Var::leaf(neg)).value().data == std::vector<double>{0, 0, 0});
}

TEST_CASE("clamp_max forward and subgradient") {
    Tensor in = tensor_from({1, 1, 4}, {-0.5, 0.002, 0.01, 3.0});
    Var x = Var::leaf(in, true);
    Var y = clamp_max(x, 0.01);
    CHECK(y.value().data == std::vector<double>{-0.5, 0.002, 0.01, 0.01});
    backward(weighted_sum(y, tensor_from({1, 1, 4}, {1, 1, 1, 1})));
    CHECK(x.value().grad[0] == 1.0);
    CHECK(x.value().grad[1] == 1.0);
    CHECK(x.value().grad[2] == 0.0); // at the cap, gradient pinned to 0
    CHECK(x.value().grad[3] == 0.0);
}

TEST_CASE("add pinned examples and gradient duplication") {
    Tensor a = tensor_from({1, 1, 2}, {1, 2});
    Tensor b = tensor_from({1, 1, 2}, {3, 4});
    Var va = Var::leaf(a, true), vb = Var::leaf(b, true);
    Var s = add(va, vb);
    CHECK(s.value().data == std::vector<double>{4, 6});

    Tensor zero({1, 1, 2});
    CHECK(add(Var::leaf(a), Var::leaf(zero)).value().data == a.data);

    backward(weighted_sum(s, tensor_from({1, 1, 2}, {2, 5})));
    CHECK(va.value().grad == std::vector<double>{2, 5});
    CHECK(vb.value().grad == std::vector<double>{2, 5});

    CHECK_THROWS_AS(add(Var::leaf(a), Var::leaf(Tensor({1, 1, 3}))), Error);
}

TEST_CASE("softmax_bits pinned examples") {
    SUBCASE("uniform logits: 8 bits per pixel, uniform probs") {
        Tensor logits({256, 1, 1});
        std::vector<uint8_t> target{42};
        auto r = softmax_bits(Var::leaf(logits), target, 1, 1);
        CHECK(r.loss.value().data[0] == doctest::Approx(8.0).epsilon(1e-12));
        for (int v = 0; v < 256; ++v)
            CHECK(r.probs->data[v] == doctest::Approx(1.0 / 256).epsilon(1e-12));
    }
    SUBCASE("p(target)=0.5 is exactly one bit") {
        Tensor logits({256, 1, 1});
        logits.data[7] = std::log(255.0);
        std::vector<uint8_t> target{7};
        auto r = softmax_bits(Var::leaf(logits), target, 1, 1);
        CHECK(r.loss.value().data[0] == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("two pixels, p=0.25 and p=0.5, sum 3 bits") {
        Tensor logits({256, 1, 2});
        logits.data[static_cast<size_t>(9) * 2 + 0] = std::log(85.0);  // p=85/340=0.25
        logits.data[static_cast<size_t>(9) * 2 + 1] = std::log(255.0); // p=0.5
        std::vector<uint8_t> target{9, 9};
        auto r = softmax_bits(Var::leaf(logits), target, 1, 2);
        CHECK(r.loss.value().data[0] == doctest::Approx(3.0).epsilon(1e-9));
    }
    SUBCASE("probabilities of each pixel sum to one") {
        Rng rng(29);
        Tensor logits({256, 2, 3});
        oracle::fill_uniform(logits, rng, -6.0, 6.0);
        std::vector<uint8_t> target(6, 0);
        auto r = softmax_bits(Var::leaf(logits), target, 2, 3);
        for (int i = 0; i < 6; ++i) {
            double s = 0.0;
            for (int v = 0; v < 256; ++v) s += r.probs->data[static_cast<size_t>(v) * 6 + i];
            CHECK(std::abs(s - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("adam pinned behaviour") {
    AdamConfig cfg;
    cfg.lr = 1e-4;

    SUBCASE("first step with unit gradient moves by about lr") {
        auto p = param_from("p", {4}, {1.0, -2.0, 0.5, 3.0});
        std::vector<double> g(4, 1.0);
        adam_step(p, g, cfg);
        for (int i = 0; i < 4; ++i) {
            const double moved = (i == 0 ? 1.0 : i == 1 ? -2.0 : i == 2 ? 0.5 : 3.0) -
                                 p.value().data[i];
            CHECK(moved == doctest::Approx(1e-4).epsilon(1e-6));
        }
        CHECK(p.step_count == 1);
    }

    SUBCASE("zero gradient with zero accumulators leaves values unchanged") {
        auto p = param_from("p", {2}, {1.5, -0.5});
        std::vector<double> g(2, 0.0);
        adam_step(p, g, cfg);
        CHECK(p.value().data[0] == 1.5);
        CHECK(p.value().data[1] == -0.5);
    }

    SUBCASE("two steps match the hand-evaluated recurrence") {
        auto p = param_from("p", {1}, {0.5});
        AdamConfig c2;
        c2.lr = 0.01;
        adam_step(p, {0.3}, c2);
        adam_step(p, {-0.2}, c2);

        // independent evaluation of the published recurrence
        double m = 0.0, v = 0.0, w = 0.5;
        double b1p = 1.0, b2p = 1.0;
        for (double g : {0.3, -0.2}) {
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            b1p *= 0.9;
            b2p *= 0.999;
            const double mhat = m / (1.0 - b1p);
            const double vhat = v / (1.0 - b2p);
            w -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
        }
        CHECK(p.value().data[0] == doctest::Approx(w).epsilon(1e-12));
    }

    SUBCASE("non-finite gradient raises a training error") {
        auto p = param_from("p", {1}, {0.0});
        CHECK_THROWS_AS(adam_step(p, {std::nan("")}, cfg), Error);
    }
}

TEST_CASE("backward on a detached node is a usage error") {
    Tensor t({1});
    Var detached = Var::leaf(t, false);
    CHECK_THROWS_AS(backward(detached), Error);
}

TEST_CASE("per-op gradients match central finite differences") {
    Rng rng(31);
    const double h = 1e-5;
    const double tol = 1e-4;

    auto check_param_grads = [&](Parameter& p, const std::function<double()>& loss_fn,
                                 const std::vector<double>& analytic) {
        for (size_t i = 0; i < p.value().data.size(); ++i) {
            const double fd = oracle::central_diff(p.value().data, i, loss_fn, h);
            const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
            CHECK(std::abs(fd - analytic[i]) / denom < tol);
        }
    };

    SUBCASE("conv2d weights, bias and input") {
        Tensor in({2, 5, 5});
        oracle::fill_uniform(in, rng, -1.0, 1.0);
        auto w = random_param("w", {3, 2, 2, 2}, rng);
        auto b = random_param("b", {3}, rng);
        Tensor coeffs({3, 4, 4});
        oracle::fill_uniform(coeffs, rng, -1.0, 1.0);

        Var x = Var::leaf(in, true);
        auto loss_fn = [&]() {
            NoGradGuard ng; // value-only graph for FD probes
            return weighted_sum(conv2d(Var::leaf(in), w, b, 1), coeffs).value().data[0];
        };
        backward(weighted_sum(conv2d(x, w, b, 1), coeffs));
        check_param_grads(w, loss_fn, w.node->value.grad);
        check_param_grads(b, loss_fn, b.node->value.grad);
        for (size_t i = 0; i < in.data.size(); ++i) {
            const double fd = oracle::central_diff(in.data, i, loss_fn, h);
            const double an = x.value().grad[i];
            CHECK(std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}) < tol);
        }
    }

    SUBCASE("softmax_bits logits") {
        Tensor logits({256, 1, 2});
        oracle::fill_uniform(logits, rng, -2.0, 2.0);
        std::vector<uint8_t> target{13, 200};
        Var lg = Var::leaf(logits, true);
        backward(softmax_bits(lg, target, 1, 2).loss);
        for (size_t i = 0; i < logits.data.size(); i += 97) { // sampled subset
            auto loss_fn = [&]() {
                NoGradGuard ng;
                return softmax_bits(Var::leaf(logits), target, 1, 2).loss.value().data[0];
            };
            const double fd = oracle::central_diff(logits.data, i, loss_fn, h);
            const double an = lg.value().grad[i];
            CHECK(std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}) < tol);
        }
    }
}
