#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cseg/tensor.hpp"

namespace cseg {

/// H x W grayscale intensities, row-major.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
    double operator()(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }

    /// 1 x 1 x H x W
    Tensor to_tensor() const;

    bool operator==(const Image&) const = default;
};

/// Binary H x W labels; 1 marks the target region.
struct Mask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> labels;

    Mask() = default;
    Mask(std::size_t h, std::size_t w) : height(h), width(w), labels(h * w, 0) {}

    std::uint8_t& operator()(std::size_t r, std::size_t c) { return labels[r * width + c]; }
    std::uint8_t operator()(std::size_t r, std::size_t c) const { return labels[r * width + c]; }

    std::size_t foreground_count() const;

    bool operator==(const Mask&) const = default;
};

/// 1 x 2 x H x W per-pixel class probabilities; channel 0 background, 1 foreground.
struct SoftPrediction {
    Tensor probs;

    std::size_t height() const { return probs.extent(2); }
    std::size_t width() const { return probs.extent(3); }
    double foreground(std::size_t r, std::size_t c) const { return probs.at(0, 1, r, c); }
    double background(std::size_t r, std::size_t c) const { return probs.at(0, 0, r, c); }

    /// Sum over pixels of the foreground probability.
    double soft_size() const;
    /// Per-pixel argmax; ties go to background.
    Mask argmax() const;
};

}  // namespace cseg
