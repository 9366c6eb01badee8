#include "cseg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cseg {

GradCheckReport finite_diff_check(const Objective& f, std::span<const double> x, const GradCheckOptions& options) {
    if (!(options.step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
    std::vector<double> analytic;
    const Evaluation base = f(x, &analytic);
    if (analytic.size() != x.size()) throw std::invalid_argument("finite_diff_check: gradient size mismatch");

    std::vector<std::size_t> coords = options.coordinates;
    if (coords.empty()) {
        coords.resize(x.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
    }

    GradCheckReport report;
    std::vector<double> probe(x.begin(), x.end());
    for (std::size_t i : coords) {
        if (i >= x.size()) throw std::out_of_range("finite_diff_check: coordinate out of range");
        const double saved = probe[i];
        probe[i] = saved + options.step;
        const Evaluation plus = f(probe, nullptr);
        probe[i] = saved - options.step;
        const Evaluation minus = f(probe, nullptr);
        probe[i] = saved;
        if (plus.regime != base.regime || minus.regime != base.regime) {
            ++report.skipped;
            continue;
        }
        const double numeric = (plus.value - minus.value) / (2.0 * options.step);
        const double a = analytic[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        const double rel = std::abs(a - numeric) / denom;
        ++report.checked;
        if (report.checked == 1 || rel > report.max_relative_error) {
            report.max_relative_error = rel;
            report.worst_coordinate = i;
            report.analytic_at_worst = a;
            report.numeric_at_worst = numeric;
        }
    }
    report.passed = report.max_relative_error < options.tol;
    return report;
}

}  // namespace cseg
