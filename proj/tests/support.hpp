#pragma once

#include <cmath>
#include <vector>

#include "cseg/image.hpp"
#include "cseg/rng.hpp"
#include "cseg/tensor.hpp"

namespace testing {

inline cseg::Tensor random_tensor(cseg::Shape shape, cseg::Rng& rng, double lo = -1.0, double hi = 1.0) {
    cseg::Tensor t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

inline cseg::Image random_image(std::size_t h, std::size_t w, cseg::Rng& rng) {
    cseg::Image img(h, w);
    for (double& v : img.pixels) v = rng.uniform();
    return img;
}

inline cseg::Mask random_mask(std::size_t h, std::size_t w, cseg::Rng& rng, double p = 0.5) {
    cseg::Mask m(h, w);
    for (auto& v : m.labels) v = rng.uniform() < p;
    return m;
}

inline double max_abs_diff(const cseg::Tensor& a, const cseg::Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace testing
