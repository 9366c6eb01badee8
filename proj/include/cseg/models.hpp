#pragma once

// Small stand-in networks: a two-class per-pixel segmenter and a scalar
// region-size regressor.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cseg/image.hpp"
#include "cseg/rng.hpp"
#include "cseg/tape.hpp"
#include "cseg/tensor.hpp"

namespace cseg {

/// Ordered list of named parameter tensors.
class ParamSet {
public:
    void add(std::string name, Tensor value);

    std::size_t size() const { return tensors_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const std::vector<std::string>& names() const { return names_; }
    std::vector<Tensor>& tensors() { return tensors_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }

    Tensor& get(std::string_view name);
    const Tensor& get(std::string_view name) const;

    /// Total number of scalar parameters.
    std::size_t parameter_count() const;

    /// Records every tensor as a differentiable leaf, in order.
    std::vector<Var> bind(Tape& tape) const;

    std::vector<double> flatten() const;
    void unflatten(std::span<const double> values);

    bool all_finite() const;
    bool operator==(const ParamSet&) const = default;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
};

/// Kaiming-style uniform init in +-sqrt(6 / fan_in); biases start at zero.
Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng);

// Segmenter: enc1 conv(1->8) relu, enc2 conv(8->16) relu, maxpool,
// enc3 conv(16->16) relu, upsample, concat with enc1, dec1 conv(24->16) relu,
// head conv(16->2, 1x1), channel softmax.
ParamSet init_segmenter(Rng& rng);

/// image: 1 x 1 x H x W with H, W even. Returns 1 x 2 x H x W probabilities.
Var segmenter_forward(Tape& tape, std::span<const Var> params, Var image);

SoftPrediction predict(const ParamSet& params, const Image& image);

// Regressor: [conv(1->8) relu pool] [conv(8->16) relu pool] conv(16->16) relu,
// global average pool, dense(16->1). Linear output; callers clamp.
ParamSet init_regressor(Rng& rng);

/// image: 1 x 1 x H x W with H, W divisible by 4. Returns a 1 x 1 estimate in pixels.
Var regressor_forward(Tape& tape, std::span<const Var> params, Var image);

double predict_size(const ParamSet& params, const Image& image);

// Checkpoints: u64 tensor count, then per tensor u64 name length, name bytes,
// u64 rank, u64 extents, f64 data; all little-endian.
std::string encode_checkpoint(const ParamSet& params);
ParamSet decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace cseg
