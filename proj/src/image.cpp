#include "cseg/image.hpp"

#include <numeric>

namespace cseg {

Tensor Image::to_tensor() const { return Tensor({1, 1, height, width}, pixels); }

std::size_t Mask::foreground_count() const {
    return std::accumulate(labels.begin(), labels.end(), std::size_t{0});
}

double SoftPrediction::soft_size() const {
    double s = 0.0;
    for (std::size_t r = 0; r < height(); ++r)
        for (std::size_t c = 0; c < width(); ++c) s += foreground(r, c);
    return s;
}

Mask SoftPrediction::argmax() const {
    Mask m(height(), width());
    for (std::size_t r = 0; r < height(); ++r)
        for (std::size_t c = 0; c < width(); ++c) m(r, c) = foreground(r, c) > background(r, c) ? 1 : 0;
    return m;
}

}  // namespace cseg
