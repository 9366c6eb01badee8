#include "cseg/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cseg {

OptimizerState OptimizerState::sgd(double lr, double momentum, double weight_decay) {
    OptimizerState s;
    s.kind = OptimizerKind::sgd_momentum;
    s.lr = lr;
    s.momentum = momentum;
    s.weight_decay = weight_decay;
    return s;
}

OptimizerState OptimizerState::adam(double lr, double beta1, double beta2, double eps) {
    OptimizerState s;
    s.kind = OptimizerKind::adam;
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

namespace {

void check_shapes(const OptimizerState& state, std::span<Tensor> params, std::span<const Tensor> grads) {
    if (params.size() != grads.size()) {
        throw ShapeError("optimizer: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].shape() != grads[i].shape()) {
            throw ShapeError("optimizer: parameter " + std::to_string(i) + " has extents " +
                             shape_to_string(params[i].shape()) + ", gradient has " + shape_to_string(grads[i].shape()));
        }
        if (!state.first.empty() && state.first[i].shape() != params[i].shape()) {
            throw ShapeError("optimizer: slot " + std::to_string(i) + " extents " +
                             shape_to_string(state.first[i].shape()) + " do not match parameter");
        }
    }
    if (!state.first.empty() && state.first.size() != params.size()) {
        throw ShapeError("optimizer: state holds " + std::to_string(state.first.size()) + " slots for " +
                         std::to_string(params.size()) + " parameters");
    }
}

void init_slots(std::vector<Tensor>& slots, std::span<Tensor> params) {
    if (!slots.empty()) return;
    for (const Tensor& p : params) slots.emplace_back(p.shape());
}

}  // namespace

void sgd_step(OptimizerState& state, std::span<Tensor> params, std::span<const Tensor> grads) {
    if (state.kind != OptimizerKind::sgd_momentum) throw std::invalid_argument("sgd_step: state is not sgd_momentum");
    check_shapes(state, params, grads);
    init_slots(state.first, params);
    ++state.step;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto theta = params[i].data();
        auto g = grads[i].data();
        auto v = state.first[i].data();
        for (std::size_t k = 0; k < theta.size(); ++k) {
            v[k] = state.momentum * v[k] + g[k] + state.weight_decay * theta[k];
            theta[k] -= state.lr * v[k];
        }
    }
}

void adam_step(OptimizerState& state, std::span<Tensor> params, std::span<const Tensor> grads) {
    if (state.kind != OptimizerKind::adam) throw std::invalid_argument("adam_step: state is not adam");
    check_shapes(state, params, grads);
    init_slots(state.first, params);
    init_slots(state.second, params);
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto theta = params[i].data();
        auto g = grads[i].data();
        auto m = state.first[i].data();
        auto v = state.second[i].data();
        for (std::size_t k = 0; k < theta.size(); ++k) {
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
            const double m_hat = m[k] / c1;
            const double v_hat = v[k] / c2;
            theta[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

void optimizer_step(OptimizerState& state, std::span<Tensor> params, std::span<const Tensor> grads) {
    if (state.kind == OptimizerKind::adam) {
        adam_step(state, params, grads);
    } else {
        sgd_step(state, params, grads);
    }
}

}  // namespace cseg
