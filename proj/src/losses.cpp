#include "cseg/losses.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cseg {

SizeBand SizeBand::around(double estimate, double gamma, SizeSource source) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("size band: gamma must lie in [0, 1)");
    const double r = std::max(estimate, 0.0);
    return SizeBand{(1.0 - gamma) * r, (1.0 + gamma) * r, source};
}

namespace {

void require_mask_shape(const Tensor& probs, const Mask& mask, const char* who) {
    if (probs.rank() != 4 || probs.extent(0) != 1 || probs.extent(1) != 2) {
        throw ShapeError(std::string(who) + ": prediction must be 1x2xHxW, got " + shape_to_string(probs.shape()));
    }
    if (probs.extent(2) != mask.height) {
        throw ShapeError(std::string(who) + ": height dimension " + std::to_string(probs.extent(2)) +
                         " does not match mask height " + std::to_string(mask.height));
    }
    if (probs.extent(3) != mask.width) {
        throw ShapeError(std::string(who) + ": width dimension " + std::to_string(probs.extent(3)) +
                         " does not match mask width " + std::to_string(mask.width));
    }
}

Var weighted_nll(Tape& tape, Var probs, Tensor weights) {
    Var w = tape.constant(std::move(weights));
    Var ll = ops::sum(tape, ops::mul(tape, w, ops::log(tape, probs)));
    return ops::mul_scalar(tape, ll, -1.0);
}

}  // namespace

Var cross_entropy(Tape& tape, Var probs, const Mask& mask) {
    require_mask_shape(tape.value(probs), mask, "cross_entropy");
    const std::size_t plane = mask.height * mask.width;
    Tensor onehot({1, 2, mask.height, mask.width});
    for (std::size_t p = 0; p < plane; ++p) {
        onehot[p] = mask.labels[p] ? 0.0 : 1.0;
        onehot[plane + p] = mask.labels[p] ? 1.0 : 0.0;
    }
    return weighted_nll(tape, probs, std::move(onehot));
}

Var foreground_cross_entropy(Tape& tape, Var probs, const Mask& pseudo) {
    require_mask_shape(tape.value(probs), pseudo, "foreground_cross_entropy");
    const std::size_t plane = pseudo.height * pseudo.width;
    Tensor weights({1, 2, pseudo.height, pseudo.width});
    for (std::size_t p = 0; p < plane; ++p) weights[plane + p] = pseudo.labels[p] ? 1.0 : 0.0;
    return weighted_nll(tape, probs, std::move(weights));
}

Var size_mse(Tape& tape, Var estimate, double target_size) {
    const Tensor& e = tape.value(estimate);
    if (e.size() != 1) throw ShapeError("size_mse: estimate must hold a single value, got " + shape_to_string(e.shape()));
    Var target = tape.constant(Tensor(e.shape(), target_size));
    return ops::sum(tape, ops::square(tape, ops::sub(tape, estimate, target)));
}

Var size_mse(Tape& tape, Var estimate, const Mask& mask) {
    return size_mse(tape, estimate, static_cast<double>(mask.foreground_count()));
}

Var soft_size(Tape& tape, Var probs) {
    const Tensor& p = tape.value(probs);
    if (p.rank() != 4 || p.extent(1) != 2) throw ShapeError("soft_size: prediction must be Nx2xHxW");
    return ops::sum(tape, ops::channel_slice(tape, probs, 1));
}

Var size_penalty(Tape& tape, Var t, const SizeBand& band) {
    if (tape.value(t).size() != 1) throw ShapeError("size_penalty: soft size must be scalar");
    if (band.lower > band.upper) throw std::invalid_argument("size_penalty: band lower exceeds upper");
    const Shape& shape = tape.value(t).shape();
    Var lower = tape.constant(Tensor(shape, band.lower));
    Var upper = tape.constant(Tensor(shape, band.upper));
    // relu(lower - t)^2 + relu(t - upper)^2: at most one term is active.
    Var below = ops::square(tape, ops::relu(tape, ops::sub(tape, lower, t)));
    Var above = ops::square(tape, ops::relu(tape, ops::sub(tape, t, upper)));
    return ops::sum(tape, ops::add(tape, below, above));
}

double size_penalty_value(double t, const SizeBand& band) {
    if (t <= band.lower) return (t - band.lower) * (t - band.lower);
    if (t >= band.upper) return (t - band.upper) * (t - band.upper);
    return 0.0;
}

Var combined_objective(Tape& tape, std::span<const Var> labeled_losses, std::span<const Var> unlabeled_penalties,
                       double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("combined_objective: lambda must be >= 0");
    Var total = tape.constant(Tensor::scalar(0.0));
    for (Var l : labeled_losses) total = ops::add(tape, total, ops::sum(tape, l));
    if (unlabeled_penalties.empty()) return total;
    Var penalty = tape.constant(Tensor::scalar(0.0));
    for (Var u : unlabeled_penalties) penalty = ops::add(tape, penalty, ops::sum(tape, u));
    return ops::add(tape, total, ops::mul_scalar(tape, penalty, lambda));
}

double combined_objective(std::span<const double> labeled_losses, std::span<const double> unlabeled_penalties,
                          double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("combined_objective: lambda must be >= 0");
    double ly = 0.0, lu = 0.0;
    for (double l : labeled_losses) ly += l;
    for (double u : unlabeled_penalties) lu += u;
    return ly + lambda * lu;
}

}  // namespace cseg
