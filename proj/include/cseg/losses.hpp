#pragma once

// Training objectives: pixelwise cross-entropy on labeled images, squared
// size error for the regressor, the size-band penalty on unlabeled images,
// and their weighted combination.

#include <span>

#include "cseg/image.hpp"
#include "cseg/tape.hpp"

namespace cseg {

enum class SizeSource { regressor, oracle };

/// Admissible soft-size interval [(1-gamma) R, (1+gamma) R].
struct SizeBand {
    double lower = 0.0;
    double upper = 0.0;
    SizeSource source = SizeSource::regressor;

    /// Negative estimates are clamped to 0 first. Requires 0 <= gamma < 1.
    static SizeBand around(double estimate, double gamma, SizeSource source);
};

/// -sum_p [y log s_fg + (1 - y) log s_bg] for probs 1 x 2 x H x W.
Var cross_entropy(Tape& tape, Var probs, const Mask& mask);

/// Cross-entropy restricted to pixels where `pseudo` is foreground:
/// -sum_{p : pseudo_p = 1} log s_fg. Background pseudo-pixels contribute nothing.
Var foreground_cross_entropy(Tape& tape, Var probs, const Mask& pseudo);

/// (estimate - target)^2; no clamping of the estimate.
Var size_mse(Tape& tape, Var estimate, double target_size);
Var size_mse(Tape& tape, Var estimate, const Mask& mask);

/// Sum over pixels of the foreground probability (scalar).
Var soft_size(Tape& tape, Var probs);

/// (t - lower)^2 below the band, (t - upper)^2 above, 0 inside.
Var size_penalty(Tape& tape, Var soft_size, const SizeBand& band);
double size_penalty_value(double t, const SizeBand& band);

/// sum(labeled) + lambda * sum(penalties); throws for lambda < 0.
Var combined_objective(Tape& tape, std::span<const Var> labeled_losses, std::span<const Var> unlabeled_penalties,
                       double lambda);
double combined_objective(std::span<const double> labeled_losses, std::span<const double> unlabeled_penalties,
                          double lambda);

}  // namespace cseg
