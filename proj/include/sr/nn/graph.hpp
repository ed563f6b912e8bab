#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "sr/nn/tensor.hpp"

namespace sr::nn {

enum class PadMode { Zero, Reflect };

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Reverse-mode graph node. `grad` matches `value`'s shape once backward
// touches it. Parents are held alive by the child; closures capture raw
// Node pointers into that vector.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backprop;

    void ensure_grad() {
        if (grad.empty())
            grad = Tensor(value.channels(), value.height(), value.width());
    }
    void zero_grad() {
        if (!grad.empty()) grad.fill(0.0);
    }
};

NodePtr constant(Tensor v);
NodePtr leaf(Tensor v); // differentiable input / trainable parameter

// 2-D convolution, "same" output at stride 1, ceil(n/stride) otherwise.
// Weight packs as (out_channels, in_channels, k*k), bias as (out,1,1).
NodePtr conv2d(const NodePtr& x, const NodePtr& w, const NodePtr& b, int stride,
               PadMode pad);

NodePtr instance_norm(const NodePtr& x, const NodePtr& gamma, const NodePtr& beta,
                      real eps = 1e-5);
NodePtr relu(const NodePtr& x);
NodePtr silu(const NodePtr& x); // x * sigmoid(x)
NodePtr sigmoid(const NodePtr& x);
NodePtr tanh_act(const NodePtr& x);
NodePtr upsample_nearest2(const NodePtr& x);
NodePtr concat_channels(const NodePtr& a, const NodePtr& b);
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, real s);

// sqrt(a^2 + b^2 + eps), elementwise; eps keeps the zero-gradient point smooth
NodePtr hypot_smooth(const NodePtr& a, const NodePtr& b, real eps);

NodePtr reflect_pad(const NodePtr& x, int right, int bottom);
NodePtr crop_top_left(const NodePtr& x, int h, int w);

// (C,H,W) -> (1,C,C): G[a][b] = sum_hw F[a]F[b] / (H*W)
NodePtr gram(const NodePtr& f);

// mean((a-b)^2) over all elements -> scalar (1,1,1)
NodePtr mse(const NodePtr& a, const NodePtr& b);

// sum_i w_i * s_i over scalar nodes -> scalar
NodePtr weighted_sum(const std::vector<std::pair<NodePtr, real>>& terms);

// Scalar node whose forward value is `value` and whose backward adds
// upstream * grad_wrt_x into x. Carrier for externally computed gradients
// (the score-distillation surrogate).
NodePtr injected_value(const NodePtr& x, real value, Tensor grad_wrt_x);

// Backpropagate from a scalar root; accumulates into .grad of every
// requires_grad node reachable from it. Call zero_grad on reused leaves first.
void backward(const NodePtr& root);

} // namespace sr::nn
