#pragma once

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape records every operation as a node in creation order, so node inputs
// always precede the node itself. backward() walks the nodes in reverse and
// accumulates gradients into each node's accumulator.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cseg/tensor.hpp"

namespace cseg {

/// Handle to a node recorded on a Tape.
struct Var {
    std::size_t id = 0;
};

enum class OpKind {
    leaf,
    constant,
    conv2d,
    relu,
    maxpool2,
    upsample2,
    softmax_channel,
    concat_channels,
    channel_slice,
    global_avg_pool,
    dense,
    sum,
    mean,
    add,
    sub,
    mul,
    mul_scalar,
    square,
    log,
};

const char* op_name(OpKind kind);

struct Node {
    OpKind kind = OpKind::leaf;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    double scalar = 0.0;             // mul_scalar factor
    std::size_t index = 0;           // channel_slice channel
    std::vector<std::size_t> route;  // maxpool2 argmax offsets into the input
};

class Tape {
public:
    /// Differentiable input (a parameter or a tensor whose gradient is wanted).
    Var leaf(Tensor value);
    /// Non-differentiable input; gradients are never propagated into it.
    Var constant(Tensor value);

    Var record(Node node);

    const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
    const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }
    const Node& node(Var v) const { return nodes_.at(v.id); }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable node.
    /// Throws ShapeError when the loss is not a single-element tensor.
    void backward(Var loss);

    /// Gradients for the given variables, in order, after backward().
    std::vector<Tensor> gradients(const std::vector<Var>& vars) const;

    /// Hash of every data-dependent branch taken in the forward pass (ReLU
    /// sign pattern, max-pool argmax routes). Two evaluations with the same
    /// signature lie on the same smooth piece of the function.
    std::uint64_t branch_signature() const;

private:
    std::vector<Node> nodes_;
};

namespace ops {

/// Stride-1 cross-correlation with zero padding (k-1)/2; k must be odd.
Var conv2d(Tape& tape, Var input, Var weight, Var bias);
Var relu(Tape& tape, Var input);
/// 2x2 non-overlapping max; ties go to the first element in row-major order.
Var maxpool2(Tape& tape, Var input);
/// Nearest-neighbour 2x replication.
Var upsample2(Tape& tape, Var input);
/// Per-pixel softmax across the channel axis.
Var softmax_channel(Tape& tape, Var input);
Var concat_channels(Tape& tape, Var a, Var b);
/// N x C x H x W -> N x 1 x H x W, selecting one channel.
Var channel_slice(Tape& tape, Var input, std::size_t channel);
/// N x C x H x W -> N x C
Var global_avg_pool(Tape& tape, Var input);
/// input N x F, weight O x F, bias O -> N x O
Var dense(Tape& tape, Var input, Var weight, Var bias);

Var sum(Tape& tape, Var input);
Var mean(Tape& tape, Var input);
Var add(Tape& tape, Var a, Var b);
Var sub(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var mul_scalar(Tape& tape, Var input, double factor);
Var square(Tape& tape, Var input);
/// log(max(x, kLogClamp))
Var log(Tape& tape, Var input);

inline constexpr double kLogClamp = 1e-12;

}  // namespace ops
}  // namespace cseg
