#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace cseg {

struct Evaluation {
    double value = 0.0;
    /// Identifies the smooth piece the point lies on (see Tape::branch_signature).
    /// Smooth objectives leave it at 0.
    std::uint64_t regime = 0;
};

/// Evaluates the objective at x; when grad is non-null, also writes the
/// analytic gradient into it (resized to x.size()).
using Objective = std::function<Evaluation(std::span<const double> x, std::vector<double>* grad)>;

struct GradCheckOptions {
    double step = 1e-5;
    double tol = 1e-4;
    /// Coordinates to probe; empty means all of them.
    std::vector<std::size_t> coordinates;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t worst_coordinate = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::size_t checked = 0;
    /// Coordinates whose +/- step crossed a non-differentiable point
    /// (regime of x+h, x-h and x disagree); not counted in the error.
    std::size_t skipped = 0;
    bool passed = false;
};

/// Central-difference gradient check. Relative error per coordinate is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport finite_diff_check(const Objective& f, std::span<const double> x, const GradCheckOptions& options = {});

}  // namespace cseg
