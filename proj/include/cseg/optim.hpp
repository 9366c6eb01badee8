#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cseg/tensor.hpp"

namespace cseg {

enum class OptimizerKind { sgd_momentum, adam };

/// Optimizer hyperparameters plus per-parameter slots. Slots are allocated
/// lazily on the first step to match the parameter shapes.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double momentum = 0.9;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;

    std::vector<Tensor> first;   // SGD velocity, or Adam first moment
    std::vector<Tensor> second;  // Adam second moment
    std::uint64_t step = 0;

    static OptimizerState sgd(double lr, double momentum, double weight_decay);
    static OptimizerState adam(double lr, double beta1, double beta2, double eps = 1e-8);
};

/// v <- momentum * v + g + weight_decay * theta;  theta <- theta - lr * v
void sgd_step(OptimizerState& state, std::span<Tensor> params, std::span<const Tensor> grads);

/// Bias-corrected Adam.
void adam_step(OptimizerState& state, std::span<Tensor> params, std::span<const Tensor> grads);

/// Dispatches on state.kind.
void optimizer_step(OptimizerState& state, std::span<Tensor> params, std::span<const Tensor> grads);

}  // namespace cseg
